#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "deepboard/camera.hpp"
#include "deepboard/image.hpp"
#include "deepboard/volume.hpp"

namespace deepboard {

struct RenderSettings {
    /// World units; unset means half the smallest voxel edge.
    std::optional<double> step_size;
    double early_stop_transmittance = 1e-3;
    Rgba background{0, 0, 0, 0};

    void validate() const;
    double resolve_step(const GridMapping& grid) const {
        return step_size ? *step_size : grid.min_voxel() * 0.5;
    }
};

/// Premultiplied result of marching one ray through one volume, before any background.
struct RayAccumulation {
    std::array<double, 3> premultiplied{0, 0, 0};
    double alpha = 0;
    double t_enter = 0;  // entry distance; meaningful only when hit
    bool hit = false;    // false when the ray misses the box or its chord is empty

    /// Straight-alpha color composited over a straight-alpha background.
    Rgba over_background(const Rgba& background) const;
};

/// Optional diagnostic: transmittance after every evaluated sample.
using TransmittanceTrace = std::vector<double>;

RayAccumulation accumulate_dense(const DenseVolume& volume, const Ray& ray,
                                 const RenderSettings& settings,
                                 TransmittanceTrace* trace = nullptr);
RayAccumulation accumulate_octree(const SparseOctree& octree, const Ray& ray,
                                  const RenderSettings& settings,
                                  TransmittanceTrace* trace = nullptr);

/// Emission-absorption ray march with nearest-cell lookup; the dense grid is the reference.
Rgba render_ray_dense(const DenseVolume& volume, const Ray& ray, const RenderSettings& settings);
/// Same model as render_ray_dense; Empty leaves are skipped in one step each.
Rgba render_ray_octree(const SparseOctree& octree, const Ray& ray, const RenderSettings& settings);

using VolumeRef = std::variant<const SparseOctree*, const DenseVolume*>;

/// One ray per pixel. Pixels are independent, so the result does not depend on `threads`.
RenderedImage render_frame(VolumeRef backend, const Camera& camera, const RenderSettings& settings,
                           int threads = 1);
RenderedImage render_frame(const SparseOctree& octree, const Camera& camera,
                           const RenderSettings& settings, int threads = 1);
RenderedImage render_frame(const DenseVolume& volume, const Camera& camera,
                           const RenderSettings& settings, int threads = 1);

/// Entry/exit distances of a ray against a box, clipped to t >= 0.
struct Chord {
    double t_enter = 0;
    double t_exit = 0;
    bool valid = false;
};
Chord clip_ray(const Ray& ray, const Vec3& lo, const Vec3& hi);

}  // namespace deepboard
