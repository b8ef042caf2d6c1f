#include "deepboard/server.hpp"

#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "deepboard/errors.hpp"

namespace deepboard {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class StreamConnection;

template <typename Request>
std::string_view target_of(const Request& req) {
    const auto t = req.target();
    return {t.data(), t.size()};
}

std::string_view path_of(std::string_view target) { return target.substr(0, target.find('?')); }

std::optional<std::uint32_t> object_param(std::string_view target) {
    const auto q = target.find('?');
    if (q == std::string_view::npos) return std::nullopt;
    std::string_view query = target.substr(q + 1);
    while (!query.empty()) {
        const auto amp = query.find('&');
        const std::string_view part = query.substr(0, amp);
        if (part.starts_with("object=")) {
            const std::string_view v = part.substr(7);
            std::uint32_t id = 0;
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), id);
            if (ec != std::errc{} || ptr != v.data() + v.size()) return std::nullopt;
            return id;
        }
        if (amp == std::string_view::npos) break;
        query.remove_prefix(amp + 1);
    }
    return std::nullopt;
}

std::string_view mime_type(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".map" || ext == ".txt" || ext == ".jsonl") return "text/plain";
    return "application/octet-stream";
}

}  // namespace

struct Server::Impl {
    ServerConfig config;
    std::vector<CatalogEntry> catalog;
    std::string listing;
    ServiceCounters counters;
    std::atomic<int> open_streams{0};
    std::ostream* metrics_out = nullptr;

    std::mutex mu;
    std::condition_variable stopped_cv;
    bool started = false;
    bool stopping = false;
    std::vector<std::weak_ptr<StreamConnection>> streams;  // guarded by mu

    std::thread io_thread;
    std::thread metrics_thread;

    // Declared last: destroying the context destroys queued handlers, which may
    // still touch the members above.
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};

    void do_accept();
    void metrics_loop();
    http::response<http::string_body> handle_http(const http::request<http::string_body>& req) const;
};

namespace {

using Response = http::response<http::string_body>;

Response make_response(const http::request<http::string_body>& req, http::status status,
                       std::string body, std::string_view type = "text/plain") {
    Response res{status, req.version()};
    res.set(http::field::server, "deepboard");
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    if (req.method() != http::verb::head) res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

/// One websocket client bound to one object and one render session.
class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
public:
    StreamConnection(beast::tcp_stream stream, Server::Impl* server, std::uint32_t object)
        : ws_(std::move(stream)), server_(server), object_(object) {}

    ~StreamConnection() { finish(); }

    void start(http::request<http::string_body> req) {
        beast::get_lowest_layer(ws_).expires_never();
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.binary(true);
        ws_.async_accept(req, beast::bind_front_handler(&StreamConnection::on_accept, shared_from_this()));
    }

    /// Called from Server::stop on another thread.
    void close_session() {
        if (session_) session_->close();
        net::post(ws_.get_executor(), [weak = weak_from_this()] {
            if (auto self = weak.lock())
                self->ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) {});
        });
    }

    /// Drops the connection without a close handshake; pending operations fail.
    void abort() {
        net::post(ws_.get_executor(), [weak = weak_from_this()] {
            if (auto self = weak.lock()) {
                beast::error_code ec;
                beast::get_lowest_layer(self->ws_).socket().close(ec);
            }
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return finish();
        std::lock_guard lock(server_->mu);
        if (server_->stopping) return finish();
        std::weak_ptr<StreamConnection> weak = weak_from_this();
        auto executor = ws_.get_executor();
        session_ = std::make_unique<RenderSession>(
            server_->catalog[object_].backend, object_,
            [weak, executor](FrameResponse frame) {
                auto bytes = std::make_shared<std::vector<std::uint8_t>>(encode_frame_response(frame));
                net::post(executor, [weak, bytes] {
                    if (auto self = weak.lock()) self->enqueue(bytes);
                });
            },
            server_->config.png_threshold, &server_->counters);
        server_->streams.push_back(weak);
        read();
    }

    void read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&StreamConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, size_t) {
        if (ec) return finish();
        const auto data = buffer_.cdata();
        const std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
        try {
            session_->submit(decode_pose_request(bytes));
        } catch (const Error&) {
            ++server_->counters.errors;
        }
        buffer_.consume(buffer_.size());
        read();
    }

    // Frames wait at most one deep behind the one being written; a newer frame
    // replaces a waiting one.
    void enqueue(std::shared_ptr<std::vector<std::uint8_t>> bytes) {
        if (finished_) return;
        if (writing_) {
            pending_ = std::move(bytes);
            return;
        }
        write(std::move(bytes));
    }

    void write(std::shared_ptr<std::vector<std::uint8_t>> bytes) {
        writing_ = true;
        ws_.async_write(net::buffer(*bytes), [self = shared_from_this(), bytes](beast::error_code ec, size_t) {
            self->writing_ = false;
            if (ec) return self->finish();
            if (self->pending_) write_next(self);
        });
    }

    static void write_next(const std::shared_ptr<StreamConnection>& self) {
        auto next = std::move(self->pending_);
        self->pending_.reset();
        self->write(std::move(next));
    }

    void finish() {
        if (finished_) return;
        finished_ = true;
        if (session_) session_->close();
        --server_->open_streams;
    }

    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl* server_;
    std::uint32_t object_;
    beast::flat_buffer buffer_;
    std::unique_ptr<RenderSession> session_;
    std::shared_ptr<std::vector<std::uint8_t>> pending_;
    bool writing_ = false;
    bool finished_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, Server::Impl* server)
        : stream_(std::move(socket)), server_(server) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_,
                         beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, size_t) {
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_both, ec);
            return;
        }
        if (websocket::is_upgrade(req_)) return upgrade();
        respond(server_->handle_http(req_));
    }

    void upgrade() {
        if (path_of(target_of(req_)) != "/stream")
            return respond(make_response(req_, http::status::not_found, "no websocket endpoint here\n"));
        const auto id = object_param(target_of(req_));
        if (!id || *id >= server_->catalog.size())
            return respond(make_response(req_, http::status::not_found, "unknown object\n"));
        if (++server_->open_streams > server_->config.max_sessions) {
            --server_->open_streams;
            return respond(make_response(req_, http::status::service_unavailable, "too many sessions\n"));
        }
        std::make_shared<StreamConnection>(std::move(stream_), server_, *id)->start(std::move(req_));
    }

    void respond(Response res) {
        auto shared = std::make_shared<Response>(std::move(res));
        http::async_write(stream_, *shared, [self = shared_from_this(), shared](beast::error_code ec, size_t) {
            if (ec || !shared->keep_alive()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Server::Impl* server_;
};

}  // namespace

Response Server::Impl::handle_http(const http::request<http::string_body>& req) const {
    if (req.method() != http::verb::get && req.method() != http::verb::head)
        return make_response(req, http::status::method_not_allowed, "method not allowed\n");
    const std::string_view path = path_of(target_of(req));
    if (path == "/health") return make_response(req, http::status::ok, "ok");
    if (path == "/objects") return make_response(req, http::status::ok, listing);
    if (path == "/stream")
        return make_response(req, http::status::bad_request, "websocket upgrade required\n");

    if (config.viewer_dir) {
        std::string rel(path == "/" ? "/index.html" : path);
        if (rel.find("..") == std::string::npos) {
            const std::filesystem::path file = std::filesystem::path(*config.viewer_dir) / rel.substr(1);
            std::ifstream in(file, std::ios::binary);
            if (in && std::filesystem::is_regular_file(file)) {
                std::ostringstream body;
                body << in.rdbuf();
                return make_response(req, http::status::ok, body.str(), mime_type(file));
            }
        }
    }
    return make_response(req, http::status::not_found, "not found\n");
}

void Server::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted || !acceptor.is_open()) return;
        if (!ec) std::make_shared<HttpConnection>(std::move(socket), this)->start();
        do_accept();
    });
}

void Server::Impl::metrics_loop() {
    std::uint64_t frames = counters.frames, drops = counters.drops, render_us = counters.render_us;
    std::unique_lock lock(mu);
    while (!stopped_cv.wait_for(lock, std::chrono::seconds(1), [&] { return stopping; })) {
        const std::uint64_t f = counters.frames, d = counters.drops, us = counters.render_us;
        const double mean_ms = f > frames ? (us - render_us) / 1000.0 / double(f - frames) : 0.0;
        char line[160];
        std::snprintf(line, sizeof line, "sessions=%llu frames=%llu drops=%llu mean_render_ms=%.2f\n",
                      static_cast<unsigned long long>(counters.sessions.load()),
                      static_cast<unsigned long long>(f - frames),
                      static_cast<unsigned long long>(d - drops), mean_ms);
        *metrics_out << line << std::flush;
        frames = f;
        drops = d;
        render_us = us;
    }
}

Server::Server(ServerConfig config, std::vector<CatalogEntry> catalog) : impl_(std::make_unique<Impl>()) {
    config.validate();
    if (catalog.empty()) throw InvalidArgument("server needs at least one object");
    impl_->listing = format_object_listing(catalog);
    impl_->config = std::move(config);
    impl_->catalog = std::move(catalog);
}

Server::~Server() { stop(); }

void Server::start(std::ostream* metrics_out) {
    Impl& s = *impl_;
    {
        std::lock_guard lock(s.mu);
        if (s.started) throw InvalidArgument("server already started");
        s.started = true;
    }
    try {
        const tcp::endpoint endpoint(net::ip::make_address(s.config.address), s.config.port);
        s.acceptor.open(endpoint.protocol());
        s.acceptor.set_option(net::socket_base::reuse_address(true));
        s.acceptor.bind(endpoint);
        s.acceptor.listen(net::socket_base::max_listen_connections);
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot listen on " + s.config.address + ":" + std::to_string(s.config.port) +
                      ": " + e.code().message());
    }
    s.do_accept();
    s.io_thread = std::thread([&s] { s.ioc.run(); });
    if (metrics_out && s.config.metrics) {
        s.metrics_out = metrics_out;
        s.metrics_thread = std::thread([&s] { s.metrics_loop(); });
    }
}

void Server::stop() {
    Impl& s = *impl_;
    std::vector<std::shared_ptr<StreamConnection>> live;
    {
        std::lock_guard lock(s.mu);
        if (s.stopping) return;
        s.stopping = true;
        for (auto& w : s.streams)
            if (auto c = w.lock()) live.push_back(std::move(c));
    }
    s.stopped_cv.notify_all();
    const auto settle = [&s](int ms) {
        for (int waited = 0; s.open_streams > 0 && waited < ms; waited += 5)
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
    };
    for (auto& c : live) c->close_session();
    net::post(s.ioc, [&s] {
        beast::error_code ec;
        s.acceptor.close(ec);
    });
    if (s.io_thread.joinable()) {
        // Polite close frames first; peers that do not answer are cut off.
        settle(200);
        for (auto& c : live) c->abort();
        settle(200);
        live.clear();
        s.ioc.stop();
        s.io_thread.join();
    }
    if (s.metrics_thread.joinable()) s.metrics_thread.join();
}

void Server::wait() {
    std::unique_lock lock(impl_->mu);
    impl_->stopped_cv.wait(lock, [&] { return impl_->stopping; });
}

std::uint16_t Server::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? impl_->config.port : ep.port();
}

const ServiceCounters& Server::counters() const { return impl_->counters; }

}  // namespace deepboard
