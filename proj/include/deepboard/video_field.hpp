#pragma once

#include <memory>
#include <string>
#include <vector>

#include "deepboard/backend.hpp"

namespace deepboard {

/// Time x viewpoint grid of recorded frames of one object. Viewpoints are unit
/// directions from the object center toward the camera.
struct VideoField {
    double dt = 1.0;
    int timesteps = 0;
    std::vector<Vec3> viewpoints;
    int width = 0;
    int height = 0;
    std::vector<RenderedImage> frames;  // index t * V + v

    /// Geometry of the captured billboards, used to place frames in a scene.
    Aabb bounds;
    double capture_distance = 2.0;

    int viewpoint_count() const { return static_cast<int>(viewpoints.size()); }
    const RenderedImage& frame(int t, int v) const {
        return frames[static_cast<size_t>(t) * viewpoints.size() + v];
    }

    bool operator==(const VideoField&) const = default;
};

struct VideoSample {
    double time_s = 0;
    Vec3 view_dir;
    RenderedImage frame;
};

/// Times snap to a uniform grid starting at the earliest sample, with dt the
/// median gap between distinct times. Viewpoints within 1 degree of an earlier
/// one merge into it. Several samples landing in one slot keep the first; empty
/// slots copy the nearest filled timestep of the same viewpoint (earlier on ties).
/// Throws EmptyInput or InconsistentFrameSize.
VideoField build_video_field(const std::vector<VideoSample>& samples, const Aabb& bounds = {},
                             double capture_distance = 2.0);

/// Clamped to [0, (T-1)*dt], nearest step, ties toward the earlier step.
int nearest_timestep(const VideoField& field, double time_s);
/// Largest dot product with view_dir; ties go to the lowest index.
int nearest_viewpoint(const VideoField& field, const Vec3& view_dir);
/// Stored frame, never blended. Throws NonUnitDirection if |view_dir| is off by > 1e-4.
const RenderedImage& sample_video_field(const VideoField& field, double time_s,
                                        const Vec3& view_dir);

/// Rigid spin of the object about an axis through its center.
struct RotationScript {
    Vec3 axis{0, 1, 0};
    double radians_per_second = 0;
    int timesteps = 1;
    double dt = 0.1;

    Quat rotation_at(double time_s) const {
        return Quat::from_axis_angle(axis, radians_per_second * time_s);
    }
};

struct DemoFieldOptions {
    std::vector<Vec3> viewpoints{{0, 0, 1}};
    int width = 64;
    int height = 64;
    double capture_distance = 2.0;
    RenderSettings settings;
};

/// Camera that sees the object spun by `rotation` about `center` the way `camera`
/// sees the unrotated object.
Camera camera_in_object_frame(const Camera& camera, const Quat& rotation, const Vec3& center);

/// Billboard camera for viewpoint `view_dir` at the capture distance.
Camera capture_camera(const Aabb& bounds, const Vec3& view_dir, double capture_distance, int width,
                      int height);

/// Stand-in for a recorded video: frame (t,v) is the octree spun to time t*dt,
/// rendered through capture_camera for viewpoint v.
VideoField synthesize_demo_field(const SparseOctree& octree, const RotationScript& script,
                                 const DemoFieldOptions& options);

/// Directory with manifest.txt and frames t<k>_v<j>.png.
void save_video_field(const std::string& directory, const VideoField& field);
VideoField load_video_field(const std::string& directory);

/// Quad a video-field frame is pasted on: sized as seen from the capture distance,
/// turned to face the actual observer.
BillboardQuad video_field_quad(const Aabb& bounds, double capture_distance, const Vec3& observer,
                               int width, int height);

class VideoFieldBackend final : public BillboardBackend {
public:
    explicit VideoFieldBackend(std::shared_ptr<const VideoField> field);

    Kind kind() const override { return Kind::VideoField; }
    const Aabb& bounds() const override { return field_->bounds; }
    /// Sized for the capture distance, oriented toward the actual observer.
    BillboardQuad billboard(const Vec3& observer, int width, int height) const override;
    /// Nearest stored frame, resampled only when the requested size differs.
    RenderedImage render(const Pose& observer, double time_s, int width,
                         int height) const override;

    const VideoField& field() const { return *field_; }

private:
    std::shared_ptr<const VideoField> field_;
};

}  // namespace deepboard
