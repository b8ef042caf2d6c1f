#include "deepboard/video_field.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

constexpr double kSameTimeEpsilon = 1e-9;
const double kViewpointMergeCos = std::cos(std::numbers::pi / 180.0);

std::string frame_name(int t, int v) {
    return "t" + std::to_string(t) + "_v" + std::to_string(v) + ".png";
}

}  // namespace

VideoField build_video_field(const std::vector<VideoSample>& samples, const Aabb& bounds,
                             double capture_distance) {
    if (samples.empty()) throw EmptyInput("video field needs at least one sample");
    const int width = samples.front().frame.width();
    const int height = samples.front().frame.height();
    for (size_t i = 0; i < samples.size(); ++i)
        if (samples[i].frame.width() != width || samples[i].frame.height() != height)
            throw InconsistentFrameSize("sample " + std::to_string(i) + " is " +
                                        std::to_string(samples[i].frame.width()) + "x" +
                                        std::to_string(samples[i].frame.height()) + ", expected " +
                                        std::to_string(width) + "x" + std::to_string(height));

    std::vector<double> times;
    for (const auto& s : samples) times.push_back(s.time_s);
    std::sort(times.begin(), times.end());
    const double t0 = times.front();
    std::vector<double> gaps;
    for (size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] > kSameTimeEpsilon) gaps.push_back(times[i] - times[i - 1]);

    VideoField field;
    field.bounds = bounds;
    field.capture_distance = capture_distance;
    field.width = width;
    field.height = height;
    if (!gaps.empty()) {
        // Lower median, so an even count still picks an observed gap.
        auto mid = gaps.begin() + (gaps.size() - 1) / 2;
        std::nth_element(gaps.begin(), mid, gaps.end());
        field.dt = *mid;
    }

    std::vector<int> slot_t(samples.size()), slot_v(samples.size());
    int max_t = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const Vec3 dir = normalize(samples[i].view_dir);
        int v = -1;
        for (size_t j = 0; j < field.viewpoints.size() && v < 0; ++j)
            if (dot(field.viewpoints[j], dir) >= kViewpointMergeCos) v = static_cast<int>(j);
        if (v < 0) {
            v = static_cast<int>(field.viewpoints.size());
            field.viewpoints.push_back(dir);
        }
        slot_v[i] = v;
        slot_t[i] = static_cast<int>(std::lround((samples[i].time_s - t0) / field.dt));
        max_t = std::max(max_t, slot_t[i]);
    }
    field.timesteps = max_t + 1;

    const size_t nv = field.viewpoints.size();
    std::vector<int> source(static_cast<size_t>(field.timesteps) * nv, -1);
    for (size_t i = 0; i < samples.size(); ++i) {
        int& s = source[static_cast<size_t>(slot_t[i]) * nv + slot_v[i]];
        if (s < 0) s = static_cast<int>(i);
    }

    field.frames.reserve(source.size());
    for (int t = 0; t < field.timesteps; ++t)
        for (size_t v = 0; v < nv; ++v) {
            int src = source[static_cast<size_t>(t) * nv + v];
            for (int d = 1; src < 0; ++d) {
                if (t - d >= 0) src = source[static_cast<size_t>(t - d) * nv + v];
                if (src < 0 && t + d < field.timesteps)
                    src = source[static_cast<size_t>(t + d) * nv + v];
            }
            field.frames.push_back(samples[src].frame);
        }
    return field;
}

int nearest_timestep(const VideoField& field, double time_s) {
    const double last = (field.timesteps - 1) * field.dt;
    const double t = std::clamp(std::isnan(time_s) ? 0.0 : time_s, 0.0, last);
    const int step = static_cast<int>(std::ceil(t / field.dt - 0.5));
    return std::clamp(step, 0, field.timesteps - 1);
}

int nearest_viewpoint(const VideoField& field, const Vec3& view_dir) {
    int best = 0;
    double best_dot = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < field.viewpoints.size(); ++j) {
        const double d = dot(view_dir, field.viewpoints[j]);
        if (d > best_dot) {
            best_dot = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

const RenderedImage& sample_video_field(const VideoField& field, double time_s,
                                        const Vec3& view_dir) {
    const double len = length(view_dir);
    if (!(std::abs(len - 1.0) <= 1e-4)) throw NonUnitDirection("|view_dir| = " + std::to_string(len));
    return field.frame(nearest_timestep(field, time_s), nearest_viewpoint(field, view_dir));
}

Camera camera_in_object_frame(const Camera& camera, const Quat& rotation, const Vec3& center) {
    const Quat inverse = rotation.conjugate();
    Camera out = camera;
    out.pose.position = center + inverse.rotate(camera.pose.position - center);
    out.pose.orientation = (inverse * camera.pose.orientation).normalized();
    return out;
}

Camera capture_camera(const Aabb& bounds, const Vec3& view_dir, double capture_distance, int width,
                      int height) {
    const Vec3 center = bounds.center();
    const Vec3 eye = center + normalize(view_dir) * capture_distance;
    const BillboardQuad quad = fit_billboard(eye, center, bounds.bounding_radius(), width, height);
    return billboard_camera(eye, quad, width, height);
}

VideoField synthesize_demo_field(const SparseOctree& octree, const RotationScript& script,
                                 const DemoFieldOptions& options) {
    if (script.timesteps < 1 || !(script.dt > 0))
        throw InvalidArgument("rotation script needs timesteps >= 1 and dt > 0");
    if (options.viewpoints.empty()) throw EmptyInput("demo field needs at least one viewpoint");

    VideoField field;
    field.dt = script.dt;
    field.timesteps = script.timesteps;
    field.width = options.width;
    field.height = options.height;
    field.bounds = octree.aabb();
    field.capture_distance = options.capture_distance;
    for (const Vec3& v : options.viewpoints) field.viewpoints.push_back(normalize(v));

    const Vec3 center = octree.aabb().center();
    for (int t = 0; t < script.timesteps; ++t) {
        const Quat spin = script.rotation_at(t * script.dt);
        for (const Vec3& v : field.viewpoints) {
            const Camera cam = capture_camera(field.bounds, v, options.capture_distance,
                                              options.width, options.height);
            field.frames.push_back(
                render_frame(octree, camera_in_object_frame(cam, spin, center), options.settings));
        }
    }
    return field;
}

void save_video_field(const std::string& directory, const VideoField& field) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    std::ofstream m(fs::path(directory) / "manifest.txt");
    if (!m) throw IoError("cannot write manifest in " + directory);
    m.precision(17);
    m << "deepboard-video-field 1\n";
    m << "dt " << field.dt << "\n";
    m << "timesteps " << field.timesteps << "\n";
    m << "viewpoints " << field.viewpoints.size() << "\n";
    m << "size " << field.width << " " << field.height << "\n";
    m << "capture_distance " << field.capture_distance << "\n";
    m << "aabb";
    for (float v : field.bounds.min) m << " " << v;
    for (float v : field.bounds.max) m << " " << v;
    m << "\n";
    for (const Vec3& v : field.viewpoints) m << "view " << v.x << " " << v.y << " " << v.z << "\n";
    for (int t = 0; t < field.timesteps; ++t)
        for (int v = 0; v < field.viewpoint_count(); ++v)
            write_png_file((fs::path(directory) / frame_name(t, v)).string(), field.frame(t, v));
}

VideoField load_video_field(const std::string& directory) {
    namespace fs = std::filesystem;
    std::ifstream m(fs::path(directory) / "manifest.txt");
    if (!m) throw IoError("no manifest.txt in " + directory);

    VideoField field;
    size_t declared_views = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(m, line)) {
        ++line_no;
        std::istringstream in(line);
        std::string key;
        if (!(in >> key) || key.starts_with('#')) continue;
        bool ok = true;
        if (key == "deepboard-video-field") {
            int version = 0;
            ok = static_cast<bool>(in >> version);
            if (ok && version != 1)
                throw UnsupportedVersion("video field manifest version " + std::to_string(version));
        } else if (key == "dt") {
            ok = static_cast<bool>(in >> field.dt);
        } else if (key == "timesteps") {
            ok = static_cast<bool>(in >> field.timesteps);
        } else if (key == "viewpoints") {
            ok = static_cast<bool>(in >> declared_views);
        } else if (key == "size") {
            ok = static_cast<bool>(in >> field.width >> field.height);
        } else if (key == "capture_distance") {
            ok = static_cast<bool>(in >> field.capture_distance);
        } else if (key == "aabb") {
            for (auto& v : field.bounds.min) ok = ok && static_cast<bool>(in >> v);
            for (auto& v : field.bounds.max) ok = ok && static_cast<bool>(in >> v);
        } else if (key == "view") {
            Vec3 v;
            ok = static_cast<bool>(in >> v.x >> v.y >> v.z);
            field.viewpoints.push_back(v);
        }
        if (!ok) throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + line);
    }
    if (field.timesteps < 1 || field.viewpoints.empty() || field.viewpoints.size() != declared_views ||
        !(field.dt > 0))
        throw InvalidArgument("incomplete video field manifest in " + directory);

    for (int t = 0; t < field.timesteps; ++t)
        for (int v = 0; v < field.viewpoint_count(); ++v) {
            RenderedImage img = read_png_file((fs::path(directory) / frame_name(t, v)).string());
            if (img.width() != field.width || img.height() != field.height)
                throw InconsistentFrameSize(frame_name(t, v) + " does not match manifest size");
            field.frames.push_back(std::move(img));
        }
    return field;
}

VideoFieldBackend::VideoFieldBackend(std::shared_ptr<const VideoField> field)
    : field_(std::move(field)) {
    if (!field_ || field_->frames.empty()) throw InvalidArgument("video field backend needs frames");
}

BillboardQuad video_field_quad(const Aabb& bounds, double capture_distance, const Vec3& observer,
                               int width, int height) {
    const Vec3 center = bounds.center();
    const Vec3 offset = observer - center;
    if (length(offset) < 1e-9) throw DegenerateObserver("observer at the object center");
    const Vec3 capture_eye = center + normalize(offset) * capture_distance;
    return fit_billboard(capture_eye, center, bounds.bounding_radius(), width, height);
}

BillboardQuad VideoFieldBackend::billboard(const Vec3& observer, int width, int height) const {
    return video_field_quad(bounds(), field_->capture_distance, observer, width, height);
}

RenderedImage VideoFieldBackend::render(const Pose& observer, double time_s, int width,
                                        int height) const {
    const Vec3 offset = observer.position - bounds().center();
    if (length(offset) < 1e-9) throw DegenerateObserver("observer at the object center");
    const RenderedImage& frame = sample_video_field(*field_, time_s, normalize(offset));
    return resample_nearest(frame, width, height);
}

}  // namespace deepboard
