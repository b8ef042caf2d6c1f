#include "deepboard/backend.hpp"

#include "deepboard/errors.hpp"

namespace deepboard {

OctreeBackend::OctreeBackend(std::shared_ptr<const SparseOctree> octree, RenderSettings settings)
    : octree_(std::move(octree)), settings_(std::move(settings)) {
    if (!octree_) throw InvalidArgument("octree backend needs an octree");
    settings_.validate();
}

BillboardQuad OctreeBackend::billboard(const Vec3& observer, int width, int height) const {
    return fit_billboard(observer, bounds().center(), bounds().bounding_radius(), width, height);
}

RenderedImage OctreeBackend::render(const Pose& observer, double /*time_s*/, int width,
                                    int height) const {
    const BillboardQuad quad = billboard(observer.position, width, height);
    return render_frame(*octree_, billboard_camera(observer.position, quad, width, height),
                        settings_);
}

std::string_view to_string(BillboardBackend::Kind kind) {
    return kind == BillboardBackend::Kind::Octree ? "octree" : "video-field";
}

}  // namespace deepboard
