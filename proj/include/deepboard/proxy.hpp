#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepboard/camera.hpp"
#include "deepboard/volume.hpp"

namespace deepboard {

/// Invisible collision/shadow stand-in for a billboarded object. Never drawn.
class ProxyMesh {
public:
    using Triangle = std::array<std::uint32_t, 3>;

    ProxyMesh() = default;
    /// Drops zero-area triangles (area < 1e-12) and builds the query BVH.
    /// Throws InvalidArgument on out-of-range indices.
    ProxyMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<Vec3>& normals() const { return normals_; }
    bool empty() const { return triangles_.empty(); }

    struct BvhNode {
        Vec3 lo, hi;
        std::uint32_t first = 0;  // leaf: first triangle slot; internal: left child
        std::uint32_t count = 0;  // leaf: triangle count; internal: 0
        std::uint32_t right = 0;  // internal: right child
    };
    const std::vector<BvhNode>& bvh() const { return bvh_; }
    const std::vector<std::uint32_t>& bvh_order() const { return order_; }

private:
    void build_bvh();

    std::vector<Vec3> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Vec3> normals_;
    std::vector<BvhNode> bvh_;
    std::vector<std::uint32_t> order_;
};

struct ContactReport {
    bool hit = false;
    double t = 0;            // ray distance (ray_hit) or penetration depth (sphere_contact)
    Vec3 point;
    Vec3 normal;             // unit when hit
    std::int64_t triangle = -1;
};

/// Marching cubes on the sigma samples at cell centers, linear interpolation along
/// edges. Face-ambiguous cases always separate the corners above `iso`, so
/// neighbouring cells agree and closed level sets produce closed meshes. Vertices
/// are numbered by cell index, then edge index. Returns an empty mesh when iso
/// is outside (min sigma, max sigma).
ProxyMesh extract_proxy(const DenseVolume& volume, double iso);

/// Conventional isovalue: half the peak density.
double default_iso(const DenseVolume& volume);

/// Box-filters sigma down to `resolution` cells per axis (the rough proxy grid).
/// SH is not carried over. Volumes already at or below that size are returned as is.
DenseVolume downsample_sigma(const DenseVolume& volume, std::uint32_t resolution);

inline constexpr std::uint32_t kDefaultProxyResolution = 32;

/// Moller-Trumbore. Returns the hit distance for t > 1e-12, no culling.
std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c);

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Nearest positive-t hit; equal t resolves to the lowest triangle index.
ContactReport ray_hit(const ProxyMesh& mesh, const Ray& ray);

/// Deepest penetration of a sphere into the mesh surface. Hit iff the closest
/// surface point is nearer than `radius`; t is then radius - distance and the
/// normal points from the surface toward the center.
ContactReport sphere_contact(const ProxyMesh& mesh, const Vec3& center, double radius);

/// Binary shadow of the mesh on the plane y = ground_y. Pixel (col,row) covers
/// x in [min_x + col*px_x, ...) and z in [min_z + row*px_z, ...).
struct ShadowMask {
    int width = 0;
    int height = 0;
    double min_x = 0, min_z = 0, max_x = 0, max_z = 0;
    std::vector<std::uint8_t> mask;  // row-major, 1 = shadowed

    bool empty() const { return width == 0 || height == 0; }
    bool at(int col, int row) const { return mask[static_cast<size_t>(row) * width + col] != 0; }
    double pixel_width() const { return (max_x - min_x) / width; }
    double pixel_depth() const { return (max_z - min_z) / height; }
    size_t covered_pixels() const;
    double covered_area() const { return covered_pixels() * pixel_width() * pixel_depth(); }
    /// Whether the ground point (x, ground_y, z) is shadowed.
    bool shadows(double x, double z) const;
};

/// Projects every vertex along light_dir onto the ground and rasterizes the union
/// of projected triangles into a resolution x resolution mask over their bounds
/// (with one pixel of margin). Throws LightParallelToGround unless light_dir.y < -1e-3.
ShadowMask shadow_mask(const ProxyMesh& mesh, const Vec3& light_dir, double ground_y,
                       int resolution);

struct GroundRect {
    double min_x = 0, min_z = 0, max_x = 0, max_z = 0;
};

/// Same rasterization over a caller-fixed ground rectangle, so masks of different
/// meshes share one pixel grid.
ShadowMask shadow_mask(const ProxyMesh& mesh, const Vec3& light_dir, double ground_y,
                       int resolution, const GroundRect& rect);

/// Text mesh with "v x y z" and 1-based "f a b c" lines.
std::string to_obj(const ProxyMesh& mesh);

}  // namespace deepboard
