#include <algorithm>
#include <cmath>
#include <limits>

#include "deepboard/errors.hpp"
#include "deepboard/proxy.hpp"

namespace deepboard {

size_t ShadowMask::covered_pixels() const {
    return static_cast<size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

bool ShadowMask::shadows(double x, double z) const {
    if (empty() || x < min_x || x >= max_x || z < min_z || z >= max_z) return false;
    const int col = std::min(width - 1, static_cast<int>((x - min_x) / pixel_width()));
    const int row = std::min(height - 1, static_cast<int>((z - min_z) / pixel_depth()));
    return at(col, row);
}

namespace {

void check_light(const Vec3& light_dir, int resolution) {
    if (!(light_dir.y < -1e-3))
        throw LightParallelToGround("light_dir.y = " + std::to_string(light_dir.y) +
                                    " must be < -1e-3");
    if (resolution < 3) throw InvalidArgument("shadow resolution must be >= 3");
}

std::vector<std::array<double, 2>> project(const ProxyMesh& mesh, const Vec3& light_dir,
                                           double ground_y) {
    const Vec3 dir = normalize(light_dir);
    std::vector<std::array<double, 2>> projected(mesh.vertices().size());
    for (size_t i = 0; i < projected.size(); ++i) {
        const Vec3& p = mesh.vertices()[i];
        const double t = (ground_y - p.y) / dir.y;
        projected[i] = {p.x + t * dir.x, p.z + t * dir.z};
    }
    return projected;
}

ShadowMask rasterize(const ProxyMesh& mesh, const std::vector<std::array<double, 2>>& projected,
                     int resolution, const GroundRect& rect) {
    ShadowMask out;
    out.width = out.height = resolution;
    out.min_x = rect.min_x;
    out.max_x = rect.max_x;
    out.min_z = rect.min_z;
    out.max_z = rect.max_z;
    out.mask.assign(static_cast<size_t>(resolution) * resolution, 0);
    const double px = out.pixel_width(), pz = out.pixel_depth();

    for (const auto& tri : mesh.triangles()) {
        const auto& a = projected[tri[0]];
        const auto& b = projected[tri[1]];
        const auto& c = projected[tri[2]];
        const double area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if (std::abs(area) < 1e-18) continue;  // edge-on to the light
        const double sign = area > 0 ? 1.0 : -1.0;

        const double tx0 = std::min({a[0], b[0], c[0]}), tx1 = std::max({a[0], b[0], c[0]});
        const double tz0 = std::min({a[1], b[1], c[1]}), tz1 = std::max({a[1], b[1], c[1]});
        const int c0 = std::max(0, static_cast<int>(std::floor((tx0 - out.min_x) / px - 0.5)));
        const int c1 = std::min(resolution - 1,
                                static_cast<int>(std::ceil((tx1 - out.min_x) / px - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor((tz0 - out.min_z) / pz - 0.5)));
        const int r1 = std::min(resolution - 1,
                                static_cast<int>(std::ceil((tz1 - out.min_z) / pz - 0.5)));

        auto edge = [sign](const std::array<double, 2>& p, const std::array<double, 2>& q,
                           double x, double z) {
            return sign * ((q[0] - p[0]) * (z - p[1]) - (q[1] - p[1]) * (x - p[0]));
        };
        for (int row = r0; row <= r1; ++row) {
            const double z = out.min_z + (row + 0.5) * pz;
            for (int col = c0; col <= c1; ++col) {
                const double x = out.min_x + (col + 0.5) * px;
                if (edge(a, b, x, z) >= 0 && edge(b, c, x, z) >= 0 && edge(c, a, x, z) >= 0)
                    out.mask[static_cast<size_t>(row) * resolution + col] = 1;
            }
        }
    }
    return out;
}

}  // namespace

ShadowMask shadow_mask(const ProxyMesh& mesh, const Vec3& light_dir, double ground_y,
                       int resolution) {
    check_light(light_dir, resolution);
    if (mesh.empty()) return {};
    const auto projected = project(mesh, light_dir, ground_y);

    double lo_x = std::numeric_limits<double>::infinity(), lo_z = lo_x;
    double hi_x = -lo_x, hi_z = -lo_x;
    for (const auto& tri : mesh.triangles())
        for (auto v : tri) {
            lo_x = std::min(lo_x, projected[v][0]);
            hi_x = std::max(hi_x, projected[v][0]);
            lo_z = std::min(lo_z, projected[v][1]);
            hi_z = std::max(hi_z, projected[v][1]);
        }
    // One pixel of margin on every side.
    const double margin_x = std::max(hi_x - lo_x, 1e-9) / (resolution - 2);
    const double margin_z = std::max(hi_z - lo_z, 1e-9) / (resolution - 2);
    return rasterize(mesh, projected, resolution,
                     {lo_x - margin_x, lo_z - margin_z, hi_x + margin_x, hi_z + margin_z});
}

ShadowMask shadow_mask(const ProxyMesh& mesh, const Vec3& light_dir, double ground_y,
                       int resolution, const GroundRect& rect) {
    check_light(light_dir, resolution);
    if (!(rect.max_x > rect.min_x && rect.max_z > rect.min_z))
        throw InvalidArgument("shadow rectangle is empty");
    return rasterize(mesh, project(mesh, light_dir, ground_y), resolution, rect);
}

}  // namespace deepboard
