#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepboard/backend.hpp"
#include "deepboard/proxy.hpp"
#include "deepboard/server.hpp"
#include "deepboard/wire.hpp"

namespace deepboard {

/// Ray-casts the quad through every pixel, samples the nearest texel and
/// composites it over the background with straight-alpha "over". A quad facing
/// away from the camera leaves the background untouched.
RenderedImage composite_billboard(const RenderedImage& background, const BillboardQuad& quad,
                                  const RenderedImage& texture, const Camera& camera);

inline constexpr double kPsnrCap = 99.0;

/// PSNR over RGB in [0,1]; alpha is ignored. Identical images give kPsnrCap.
/// Throws DimensionMismatch.
double psnr(const RenderedImage& a, const RenderedImage& b);

/// One object placed in the scene: the object's box center lands on `center`.
struct SceneBillboard {
    std::uint32_t object_id = 0;
    Vec3 center;
    /// Declared size; must match the object's box when given.
    std::optional<Vec3> half_extents;
};

struct SceneDescription {
    std::vector<SceneBillboard> billboards;
    double ground_y = -0.5;
    Rgba background{0, 0, 0, 1};
    Vec3 light_dir{0, -1, 0};
    bool shadows = false;

    void validate() const;
};

/// Lines: "background r g b a", "ground_y y", "light x y z", "shadows on|off",
/// "billboard id cx cy cz [hx hy hz]". '#' starts a comment.
SceneDescription parse_scene(const std::string& text);
SceneDescription load_scene(const std::string& path);

struct Keyframe {
    double time_s = 0;
    Pose pose;
};

/// Observer path: positions interpolate linearly, orientations by slerp.
struct TrajectoryScript {
    std::vector<Keyframe> keys;

    /// Throws InvalidArgument unless non-empty with strictly increasing times.
    void validate() const;
    /// Clamped to the first and last keys.
    Pose pose_at(double time_s) const;

    /// `count` poses evenly spaced on a horizontal circle, looking at `target`.
    static TrajectoryScript orbit(int count, double radius, double height, const Vec3& target = {},
                                  double dt = 1.0 / 30);
};

/// Lines: "pose t px py pz look tx ty tz" or "pose t px py pz quat w x y z".
TrajectoryScript parse_script(const std::string& text);
TrajectoryScript load_script(const std::string& path);

/// Where billboard textures come from. Observer poses are in the object's frame.
class TextureSource {
public:
    struct Texture {
        RenderedImage image;
        double latency_ms = 0;  // request to usable texture
        double render_ms = 0;   // time spent rendering
        std::uint64_t seq = 0;
    };

    virtual ~TextureSource() = default;
    virtual const Aabb& bounds(std::uint32_t object) const = 0;
    virtual BillboardQuad quad(std::uint32_t object, const Vec3& observer, int width,
                               int height) const = 0;
    virtual Texture fetch(std::uint32_t object, const Pose& observer, double time_s, int width,
                          int height) = 0;
};

/// Calls the backends directly.
class InProcessSource final : public TextureSource {
public:
    explicit InProcessSource(std::vector<CatalogEntry> catalog);

    const Aabb& bounds(std::uint32_t object) const override;
    BillboardQuad quad(std::uint32_t object, const Vec3& observer, int width,
                       int height) const override;
    Texture fetch(std::uint32_t object, const Pose& observer, double time_s, int width,
                  int height) override;

private:
    const BillboardBackend& backend(std::uint32_t object) const;

    std::vector<CatalogEntry> catalog_;
    std::uint64_t seq_ = 0;
};

/// Plain HTTP GET; returns the body. Throws ConnectionLost on transport failure
/// and IoError on a non-200 status.
std::string http_get(const std::string& host, std::uint16_t port, const std::string& target,
                     std::chrono::milliseconds timeout = std::chrono::seconds(10));

/// Websocket client for one /stream?object=<id> session.
class StreamClient {
public:
    StreamClient(const std::string& host, std::uint16_t port, std::uint32_t object_id,
                 std::chrono::milliseconds timeout = std::chrono::seconds(10));
    ~StreamClient();

    StreamClient(const StreamClient&) = delete;
    StreamClient& operator=(const StreamClient&) = delete;

    void send(const PoseRequest& request);
    /// Sends one binary message as is.
    void send_bytes(std::span<const std::uint8_t> bytes);
    /// Next frame from the server; throws ConnectionLost on timeout or disconnect.
    FrameResponse receive();
    /// Sends the request and returns the response that echoes its seq, skipping older ones.
    FrameResponse request(const PoseRequest& request);
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Talks to a running server: object geometry from /objects, one stream per object.
class RemoteSource final : public TextureSource {
public:
    RemoteSource(std::string host, std::uint16_t port,
                 std::chrono::milliseconds timeout = std::chrono::seconds(10));
    ~RemoteSource() override;

    const std::vector<ObjectInfo>& objects() const { return objects_; }
    const Aabb& bounds(std::uint32_t object) const override;
    BillboardQuad quad(std::uint32_t object, const Vec3& observer, int width,
                       int height) const override;
    Texture fetch(std::uint32_t object, const Pose& observer, double time_s, int width,
                  int height) override;

private:
    const ObjectInfo& info(std::uint32_t object) const;

    std::string host_;
    std::uint16_t port_;
    std::chrono::milliseconds timeout_;
    std::vector<ObjectInfo> objects_;
    std::map<std::uint32_t, std::unique_ptr<StreamClient>> streams_;
    std::map<std::uint32_t, std::uint64_t> seq_;
};

/// Reference data for scoring: volumes for the direct render and proxies for shadows.
struct GroundTruth {
    std::map<std::uint32_t, std::shared_ptr<const SparseOctree>> volumes;
    std::map<std::uint32_t, ProxyMesh> proxies;

    /// Octree objects of a catalog, with proxies extracted at the default proxy resolution.
    static GroundTruth from_catalog(const std::vector<CatalogEntry>& catalog, bool with_proxies);
};

struct SimulationOptions {
    int width = 256;
    int height = 256;
    double fov_y = 0.8;
    /// Texture size requested per billboard; 0 means the view size.
    int texture_width = 0;
    int texture_height = 0;
    RenderSettings truth_settings;  // background comes from the scene
    /// When set, composite and ground-truth PNGs are written here per frame.
    std::optional<std::string> dump_dir;
};

struct FrameRecord {
    size_t index = 0;
    double time_s = 0;
    double psnr_db = 0;  // NaN when no ground truth is available
    double latency_ms = 0;
    double render_ms = 0;
};

struct FidelityReport {
    std::vector<FrameRecord> frames;
    double mean_psnr = 0, p95_psnr = 0, min_psnr = 0;
    double mean_latency_ms = 0, p95_latency_ms = 0;
    double mean_render_ms = 0;
    bool partial = false;  // the run stopped early on ConnectionLost
    std::string error;

    /// Line-oriented text: one "frame ..." line per frame, then "summary ...".
    std::string to_text() const;
};

/// Ground-plane background with optional proxy shadows, shared by composite and truth.
RenderedImage render_background(const SceneDescription& scene, const Camera& camera,
                                const TextureSource& source, const GroundTruth& truth);

/// Direct volumetric render of every placed object: per ray, objects are composited
/// in order of box entry distance. Returns nullopt when an object has no volume.
std::optional<RenderedImage> render_ground_truth(const SceneDescription& scene, const Camera& camera,
                                                 const RenderedImage& background,
                                                 const GroundTruth& truth,
                                                 const RenderSettings& settings);

/// Billboards composited far to near by center distance (draw order, no depth test).
RenderedImage composite_scene(const SceneDescription& scene, const Camera& camera,
                              const RenderedImage& background, TextureSource& source,
                              double time_s, int texture_width, int texture_height,
                              FrameRecord* record = nullptr);

/// Replays every keyframe of the script. ConnectionLost ends the run early with
/// a partial report instead of throwing.
FidelityReport run_simulation(const SceneDescription& scene, const TrajectoryScript& script,
                              TextureSource& source, const GroundTruth& truth,
                              const SimulationOptions& options);

}  // namespace deepboard
