#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deepboard/backend.hpp"
#include "deepboard/session.hpp"

namespace deepboard {

struct ServerConfig {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    std::string asset_dir = "assets";
    int max_sessions = 16;
    RenderSettings settings;
    size_t png_threshold = kDefaultPngThreshold;
    bool metrics = true;
    std::optional<std::string> viewer_dir;

    /// Throws InvalidArgument.
    void validate() const;
};

/// Flat "key = value" text; '#' starts a comment. Keys: address, port, asset_dir,
/// max_sessions, step_size, early_stop, background (r g b a), png_threshold,
/// metrics (true/false), viewer_dir. Unknown keys are rejected.
ServerConfig parse_server_config(const std::string& text);
/// Reads the file, then lets DEEPBOARD_ASSET_DIR override asset_dir.
ServerConfig load_server_config(const std::string& path);
/// Applies environment overrides to an existing config.
void apply_environment(ServerConfig& config);

struct CatalogEntry {
    std::uint32_t id = 0;
    std::string name;
    std::shared_ptr<const BillboardBackend> backend;
};

/// Objects in an asset directory, in file-name order: every *.dbb file (dense
/// assets are converted to lossless octrees) and every subdirectory holding a
/// video-field manifest. Ids count from 0. Throws IoError when the directory is
/// missing or holds no objects.
std::vector<CatalogEntry> load_catalog(const std::string& asset_dir, const RenderSettings& settings);

/// One line per object: "id name minx miny minz maxx maxy maxz kind"; video-field
/// lines carry the capture distance as a tenth column.
std::string format_object_listing(const std::vector<CatalogEntry>& catalog);

struct ObjectInfo {
    std::uint32_t id = 0;
    std::string name;
    Aabb aabb;
    std::string kind;
    double capture_distance = 0;  // video-field objects only
};
/// Inverse of format_object_listing; throws InvalidArgument on malformed lines.
std::vector<ObjectInfo> parse_object_listing(const std::string& text);

/// HTTP + websocket front end:
///   GET /health              -> "ok"
///   GET /objects             -> object listing
///   GET /stream?object=<id>  -> websocket carrying PoseRequest / FrameResponse
///   GET /<file>              -> static viewer files when viewer_dir is set
class Server {
public:
    Server(ServerConfig config, std::vector<CatalogEntry> catalog);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving on background threads. Throws IoError when the
    /// address cannot be bound.
    void start(std::ostream* metrics_out = nullptr);
    /// Closes the listener and every session; idempotent.
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    std::uint16_t port() const;
    const ServiceCounters& counters() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace deepboard
