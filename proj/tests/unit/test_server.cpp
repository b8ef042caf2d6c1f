#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "doctest.h"
#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/server.hpp"
#include "deepboard/video_field.hpp"
#include "fixtures.hpp"

using namespace deepboard;
using deepboard::test::TempDir;
using deepboard::test::write_scene;

namespace {

ServerConfig local_config(const std::string& assets) {
    ServerConfig c;
    c.port = 0;
    c.asset_dir = assets;
    c.metrics = false;
    return c;
}

/// Status of a websocket upgrade attempt: 101 on success.
int upgrade_status(std::uint16_t port, const std::string& target) {
    namespace beast = boost::beast;
    namespace http = beast::http;
    boost::asio::io_context ioc;
    boost::asio::ip::tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    req.set(http::field::connection, "Upgrade");
    req.set(http::field::upgrade, "websocket");
    req.set(http::field::sec_websocket_version, "13");
    req.set(http::field::sec_websocket_key, "dGhlIHNhbXBsZSBub25jZQ==");
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response_parser<http::empty_body> parser;
    parser.skip(true);  // a 101 response carries no body
    http::read_header(stream, buffer, parser);
    return parser.get().result_int();
}

PoseRequest pose(std::uint32_t object, std::uint64_t seq, int w, int h) {
    PoseRequest r;
    r.object_id = object;
    r.seq = seq;
    r.observer_pos = {0.3f, 0.4f, 2.0f};
    r.width = static_cast<std::uint16_t>(w);
    r.height = static_cast<std::uint16_t>(h);
    return r;
}

template <typename Pred>
bool eventually(Pred pred) {
    for (int i = 0; i < 200; ++i) {
        if (pred()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return pred();
}

}  // namespace

TEST_CASE("config parses every key and ignores comments") {
    const ServerConfig c = parse_server_config(
        "# server\n"
        "address = 0.0.0.0\n"
        "port = 9001\n"
        "asset_dir = /data/objects  # trailing comment\n"
        "max_sessions = 4\n"
        "step_size = 0.01\n"
        "early_stop = 0.002\n"
        "background = 0.1 0.2 0.3 1\n"
        "png_threshold = 1024\n"
        "metrics = false\n"
        "viewer_dir = web\n");
    CHECK(c.address == "0.0.0.0");
    CHECK(c.port == 9001);
    CHECK(c.asset_dir == "/data/objects");
    CHECK(c.max_sessions == 4);
    REQUIRE(c.settings.step_size);
    CHECK(*c.settings.step_size == doctest::Approx(0.01));
    CHECK(c.settings.early_stop_transmittance == doctest::Approx(0.002));
    CHECK(c.settings.background.g == doctest::Approx(0.2));
    CHECK(c.png_threshold == 1024);
    CHECK_FALSE(c.metrics);
    REQUIRE(c.viewer_dir);
    CHECK(*c.viewer_dir == "web");
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS(parse_server_config("colour = red\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("port 80\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("port = 70000\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("port = 80x\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("metrics = maybe\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("background = 1 2 3\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_server_config("max_sessions = 0\n"), InvalidArgument);
    CHECK_THROWS_AS(load_server_config("/nonexistent/deepboard.conf"), IoError);
}

TEST_CASE("environment overrides the asset directory") {
    ServerConfig c = parse_server_config("asset_dir = a\n");
    ::setenv("DEEPBOARD_ASSET_DIR", "/env/assets", 1);
    apply_environment(c);
    ::unsetenv("DEEPBOARD_ASSET_DIR");
    CHECK(c.asset_dir == "/env/assets");
    apply_environment(c);
    CHECK(c.asset_dir == "/env/assets");
}

TEST_CASE("catalog orders objects by file name and includes video fields") {
    TempDir dir("deepboard_catalog");
    write_scene(dir.path(), "b_sphere.dbb", SceneName::Sphere);
    write_scene(dir.path(), "a_box.dbb", SceneName::Box);
    std::ofstream(dir.path() / "notes.txt") << "not an asset\n";

    RotationScript spin;
    spin.timesteps = 2;
    const SparseOctree oct = build_octree(generate_scene({SceneName::LobedSphere, 8}));
    save_video_field((dir.path() / "c_field").string(), synthesize_demo_field(oct, spin, {}));

    const auto catalog = load_catalog(dir.str(), {});
    REQUIRE(catalog.size() == 3);
    CHECK(catalog[0].name == "a_box");
    CHECK(catalog[1].name == "b_sphere");
    CHECK(catalog[2].name == "c_field");
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(catalog[i].id == i);
    CHECK(catalog[0].backend->kind() == BillboardBackend::Kind::Octree);
    CHECK(catalog[2].backend->kind() == BillboardBackend::Kind::VideoField);

    const auto parsed = parse_object_listing(format_object_listing(catalog));
    REQUIRE(parsed.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(parsed[i].id == catalog[i].id);
        CHECK(parsed[i].name == catalog[i].name);
        CHECK(parsed[i].aabb == catalog[i].backend->bounds());
    }
    CHECK(parsed[0].kind == "octree");
    CHECK(parsed[2].kind == "video-field");
    CHECK(parsed[2].capture_distance == doctest::Approx(2.0));
}

TEST_CASE("catalog rejects missing and empty directories") {
    CHECK_THROWS_AS(load_catalog("/nonexistent/deepboard", {}), IoError);
    TempDir empty("deepboard_empty");
    CHECK_THROWS_AS(load_catalog(empty.str(), {}), IoError);
}

TEST_CASE("object listing parser rejects malformed lines") {
    CHECK(parse_object_listing("").empty());
    CHECK_THROWS_AS(parse_object_listing("0 a 0 0 0 1 1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_object_listing("0 a 0 0 0 1 1 1 video-field\n"), InvalidArgument);
}

TEST_CASE("health and objects endpoints") {
    TempDir dir("deepboard_http");
    write_scene(dir.path(), "one.dbb", SceneName::Sphere);
    write_scene(dir.path(), "two.dbb", SceneName::TwoSpheres);
    ServerConfig cfg = local_config(dir.str());
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    server.start();
    const auto port = server.port();
    REQUIRE(port != 0);

    CHECK(http_get("127.0.0.1", port, "/health") == "ok");
    const std::string listing = http_get("127.0.0.1", port, "/objects");
    std::istringstream lines(listing);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) count += !line.empty();
    CHECK(count == 2);
    CHECK(parse_object_listing(listing).size() == 2);

    CHECK_THROWS_AS(http_get("127.0.0.1", port, "/nothing"), IoError);
    CHECK_THROWS_AS(http_get("127.0.0.1", port, "/stream?object=0"), IoError);
    server.stop();
    CHECK_THROWS_AS(http_get("127.0.0.1", port, "/health", std::chrono::milliseconds(500)), ConnectionLost);
}

TEST_CASE("a pose over the websocket yields a frame of the requested size") {
    TempDir dir("deepboard_ws");
    write_scene(dir.path(), "sphere.dbb", SceneName::Sphere);
    ServerConfig cfg = local_config(dir.str());
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    server.start();

    StreamClient client("127.0.0.1", server.port(), 0);
    const FrameResponse frame = client.request(pose(0, 1, 48, 32));
    CHECK(frame.object_id == 0);
    CHECK(frame.seq == 1);
    CHECK(frame.width == 48);
    CHECK(frame.height == 32);
    const RenderedImage img = frame_image(frame);
    CHECK(img.width() == 48);
    CHECK(img.height() == 32);

    // Same pose rendered in process gives the same bytes.
    const auto catalog = load_catalog(cfg.asset_dir, cfg.settings);
    const PoseRequest again = pose(0, 2, 48, 32);
    const RenderedImage local = catalog[0].backend->render(again.pose(), 0, 48, 32);
    CHECK(frame_pixels(client.request(again)) == frame_pixels(make_frame_response(0, 2, local, 0)));
    client.close();
    server.stop();
}

TEST_CASE("stream upgrades are refused for bad paths, unknown objects and when full") {
    TempDir dir("deepboard_refuse");
    write_scene(dir.path(), "sphere.dbb", SceneName::Sphere);
    ServerConfig cfg = local_config(dir.str());
    cfg.max_sessions = 1;
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    server.start();
    const auto port = server.port();

    CHECK(upgrade_status(port, "/elsewhere") == 404);
    CHECK(upgrade_status(port, "/stream?object=7") == 404);
    CHECK(upgrade_status(port, "/stream?object=x") == 404);
    CHECK(upgrade_status(port, "/stream") == 404);

    {
        StreamClient first("127.0.0.1", port, 0);
        first.request(pose(0, 1, 16, 16));
        CHECK(server.counters().sessions == 1);
        CHECK(upgrade_status(port, "/stream?object=0") == 503);
        CHECK_THROWS_AS(StreamClient("127.0.0.1", port, 0), ConnectionLost);
    }
    // The slot frees once the first client has gone.
    CHECK(eventually([&] { return server.counters().sessions == 0; }));
    CHECK(eventually([&] { return upgrade_status(port, "/stream?object=0") == 101; }));
    server.stop();
}

TEST_CASE("malformed pose messages are counted and the stream stays usable") {
    TempDir dir("deepboard_bad_pose");
    write_scene(dir.path(), "sphere.dbb", SceneName::Sphere);
    ServerConfig cfg = local_config(dir.str());
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    server.start();

    StreamClient client("127.0.0.1", server.port(), 0);
    PoseRequest bad = pose(0, 1, 16, 16);
    bad.width = 8;  // below the minimum frame side
    CHECK_THROWS_AS(client.send(bad), FieldOutOfRange);
    const std::vector<std::uint8_t> garbage{1, 2, 3, 4, 5};
    client.send_bytes(garbage);
    auto truncated = encode_pose_request(pose(0, 1, 16, 16));
    truncated.pop_back();
    client.send_bytes(truncated);
    CHECK(client.request(pose(0, 2, 16, 16)).seq == 2);
    CHECK(server.counters().errors == 2);
    server.stop();
}

TEST_CASE("binding a busy port fails with IoError") {
    TempDir dir("deepboard_busy");
    write_scene(dir.path(), "sphere.dbb", SceneName::Sphere);
    ServerConfig cfg = local_config(dir.str());
    Server first(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    first.start();
    cfg.port = first.port();
    Server second(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    CHECK_THROWS_AS(second.start(), IoError);
    first.stop();
}

TEST_CASE("viewer files are served when a viewer directory is set") {
    TempDir assets("deepboard_viewer_assets");
    write_scene(assets.path(), "sphere.dbb", SceneName::Sphere);
    TempDir web("deepboard_viewer_web");
    std::ofstream(web.path() / "index.html") << "<html>viewer</html>";
    std::ofstream(web.path() / "app.js") << "console.log(1);";

    ServerConfig cfg = local_config(assets.str());
    cfg.viewer_dir = web.str();
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    server.start();
    const auto port = server.port();
    CHECK(http_get("127.0.0.1", port, "/") == "<html>viewer</html>");
    CHECK(http_get("127.0.0.1", port, "/app.js") == "console.log(1);");
    CHECK_THROWS_AS(http_get("127.0.0.1", port, "/missing.js"), IoError);
    CHECK_THROWS_AS(http_get("127.0.0.1", port, "/../secret"), IoError);
    CHECK(http_get("127.0.0.1", port, "/health") == "ok");
    server.stop();
}

TEST_CASE("metrics report one line per second") {
    TempDir dir("deepboard_metrics");
    write_scene(dir.path(), "sphere.dbb", SceneName::Sphere);
    ServerConfig cfg = local_config(dir.str());
    cfg.metrics = true;
    Server server(cfg, load_catalog(cfg.asset_dir, cfg.settings));
    std::ostringstream out;
    server.start(&out);
    {
        StreamClient client("127.0.0.1", server.port(), 0);
        client.request(pose(0, 1, 16, 16));
        std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    }
    server.stop();
    const std::string text = out.str();
    CHECK(text.find("sessions=1 frames=1 drops=0 mean_render_ms=") != std::string::npos);
}
