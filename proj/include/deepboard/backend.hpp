#pragma once

#include <memory>

#include "deepboard/camera.hpp"
#include "deepboard/image.hpp"
#include "deepboard/render.hpp"
#include "deepboard/volume.hpp"

namespace deepboard {

/// Anything that can produce a billboard texture for an observer. Implementations
/// are immutable and safe to call from several threads at once.
class BillboardBackend {
public:
    enum class Kind { Octree, VideoField };

    virtual ~BillboardBackend() = default;

    virtual Kind kind() const = 0;
    /// Object box in the backend's own frame; its center is the billboard center.
    virtual const Aabb& bounds() const = 0;
    /// Quad the texture returned by render() is meant to be pasted on.
    virtual BillboardQuad billboard(const Vec3& observer, int width, int height) const = 0;
    /// Total for any observer not at the object center and any size >= 1x1.
    virtual RenderedImage render(const Pose& observer, double time_s, int width,
                                 int height) const = 0;
};

/// Radiance-field backend: renders the octree through the billboard camera.
class OctreeBackend final : public BillboardBackend {
public:
    OctreeBackend(std::shared_ptr<const SparseOctree> octree, RenderSettings settings = {});

    Kind kind() const override { return Kind::Octree; }
    const Aabb& bounds() const override { return octree_->aabb(); }
    BillboardQuad billboard(const Vec3& observer, int width, int height) const override;
    RenderedImage render(const Pose& observer, double time_s, int width,
                         int height) const override;

    const SparseOctree& octree() const { return *octree_; }
    const RenderSettings& settings() const { return settings_; }

private:
    std::shared_ptr<const SparseOctree> octree_;
    RenderSettings settings_;
};

std::string_view to_string(BillboardBackend::Kind kind);

}  // namespace deepboard
