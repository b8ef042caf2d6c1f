#include <chrono>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/video_field.hpp"

namespace deepboard {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Clock = std::chrono::steady_clock;

/// Runs the private context until the pending operation's handler has run. Other
/// work, such as the websocket's idle timer, stays queued.
template <typename Start>
void drive(net::io_context& ioc, Start&& start) {
    bool done = false;
    start(done);
    ioc.restart();
    while (!done && ioc.run_one() > 0) {
    }
}

[[noreturn]] void lost(const std::string& what, const beast::error_code& ec) {
    throw ConnectionLost(what + ": " + ec.message());
}

tcp::resolver::results_type resolve(net::io_context& ioc, const std::string& host, std::uint16_t port) {
    tcp::resolver resolver(ioc);
    beast::error_code ec;
    auto results = resolver.resolve(host, std::to_string(port), ec);
    if (ec) lost("resolve " + host, ec);
    return results;
}

void connect(net::io_context& ioc, beast::tcp_stream& stream, const tcp::resolver::results_type& at,
             std::chrono::milliseconds timeout) {
    beast::error_code ec;
    stream.expires_after(timeout);
    drive(ioc, [&](bool& done) {
        stream.async_connect(at, [&](beast::error_code e, const tcp::endpoint&) { ec = e, done = true; });
    });
    if (ec) lost("connect", ec);
}

}  // namespace

std::string http_get(const std::string& host, std::uint16_t port, const std::string& target,
                     std::chrono::milliseconds timeout) {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    connect(ioc, stream, resolve(ioc, host, port), timeout);

    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, host);
    beast::error_code ec;
    stream.expires_after(timeout);
    drive(ioc, [&](bool& done) {
        http::async_write(stream, req, [&](beast::error_code e, size_t) { ec = e, done = true; });
    });
    if (ec) lost("GET " + target, ec);

    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    drive(ioc, [&](bool& done) {
        http::async_read(stream, buffer, res, [&](beast::error_code e, size_t) { ec = e, done = true; });
    });
    if (ec) lost("GET " + target, ec);
    beast::error_code ignored;
    stream.socket().shutdown(tcp::socket::shutdown_both, ignored);

    if (res.result() != http::status::ok)
        throw IoError("GET " + target + ": status " + std::to_string(res.result_int()));
    return res.body();
}

struct StreamClient::Impl {
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
    std::chrono::milliseconds timeout;
    bool open = false;
};

StreamClient::StreamClient(const std::string& host, std::uint16_t port, std::uint32_t object_id,
                           std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
    impl_->timeout = timeout;
    auto& ws = impl_->ws;
    connect(impl_->ioc, beast::get_lowest_layer(ws), resolve(impl_->ioc, host, port), timeout);

    beast::error_code ec;
    beast::get_lowest_layer(ws).expires_after(timeout);
    drive(impl_->ioc, [&](bool& done) {
        ws.async_handshake(host + ":" + std::to_string(port), "/stream?object=" + std::to_string(object_id),
                           [&](beast::error_code e) { ec = e, done = true; });
    });
    if (ec) lost("stream handshake for object " + std::to_string(object_id), ec);

    // The websocket applies its own timeouts from here on.
    beast::get_lowest_layer(ws).expires_never();
    websocket::stream_base::timeout opt{timeout, timeout, false};
    ws.set_option(opt);
    ws.binary(true);
    impl_->open = true;
}

StreamClient::~StreamClient() {
    try {
        close();
    } catch (...) {
    }
}

void StreamClient::send(const PoseRequest& request) { send_bytes(encode_pose_request(request)); }

void StreamClient::send_bytes(std::span<const std::uint8_t> bytes) {
    if (!impl_->open) throw ConnectionLost("stream closed");
    beast::error_code ec;
    drive(impl_->ioc, [&](bool& done) {
        impl_->ws.async_write(net::buffer(bytes.data(), bytes.size()), [&](beast::error_code e, size_t) { ec = e, done = true; });
    });
    if (ec) {
        impl_->open = false;
        lost("send", ec);
    }
}

FrameResponse StreamClient::receive() {
    if (!impl_->open) throw ConnectionLost("stream closed");
    impl_->buffer.clear();
    beast::error_code ec;
    drive(impl_->ioc, [&](bool& done) {
        impl_->ws.async_read(impl_->buffer, [&](beast::error_code e, size_t) { ec = e, done = true; });
    });
    if (ec) {
        impl_->open = false;
        lost("receive", ec);
    }
    const auto data = impl_->buffer.cdata();
    return decode_frame_response({static_cast<const std::uint8_t*>(data.data()), data.size()});
}

FrameResponse StreamClient::request(const PoseRequest& request) {
    send(request);
    for (;;) {
        FrameResponse r = receive();
        if (r.seq >= request.seq) return r;
    }
}

void StreamClient::close() {
    if (!impl_->open) return;
    impl_->open = false;
    beast::error_code ec;
    drive(impl_->ioc, [&](bool& done) {
        impl_->ws.async_close(websocket::close_code::normal, [&](beast::error_code e) { ec = e, done = true; });
    });
}

RemoteSource::RemoteSource(std::string host, std::uint16_t port, std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {
    objects_ = parse_object_listing(http_get(host_, port_, "/objects", timeout_));
}

RemoteSource::~RemoteSource() = default;

const ObjectInfo& RemoteSource::info(std::uint32_t object) const {
    for (const auto& o : objects_)
        if (o.id == object) return o;
    throw InvalidArgument("unknown object id " + std::to_string(object));
}

const Aabb& RemoteSource::bounds(std::uint32_t object) const { return info(object).aabb; }

BillboardQuad RemoteSource::quad(std::uint32_t object, const Vec3& observer, int width, int height) const {
    const ObjectInfo& o = info(object);
    if (o.kind == to_string(BillboardBackend::Kind::VideoField))
        return video_field_quad(o.aabb, o.capture_distance, observer, width, height);
    return fit_billboard(observer, o.aabb.center(), o.aabb.bounding_radius(), width, height);
}

TextureSource::Texture RemoteSource::fetch(std::uint32_t object, const Pose& observer, double time_s,
                                           int width, int height) {
    info(object);
    auto& stream = streams_[object];
    if (!stream) stream = std::make_unique<StreamClient>(host_, port_, object, timeout_);

    PoseRequest req;
    req.object_id = object;
    req.seq = ++seq_[object];
    req.observer_pos = {static_cast<float>(observer.position.x), static_cast<float>(observer.position.y),
                        static_cast<float>(observer.position.z)};
    const Quat& q = observer.orientation;
    req.observer_quat = {static_cast<float>(q.w), static_cast<float>(q.x), static_cast<float>(q.y),
                         static_cast<float>(q.z)};
    req.width = static_cast<std::uint16_t>(width);
    req.height = static_cast<std::uint16_t>(height);
    req.time_s = static_cast<float>(time_s);

    const auto start = Clock::now();
    FrameResponse res;
    try {
        res = stream->request(req);
    } catch (const ConnectionLost&) {
        streams_.erase(object);
        throw;
    }
    Texture t{frame_image(res)};
    t.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    t.render_ms = res.render_ms;
    t.seq = res.seq;
    return t;
}

}  // namespace deepboard
