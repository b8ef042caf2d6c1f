#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "deepboard/errors.hpp"
#include "deepboard/proxy.hpp"

namespace deepboard {
namespace {

constexpr double kMinArea = 1e-12;
constexpr std::uint32_t kLeafSize = 4;

struct Best {
    double key = std::numeric_limits<double>::infinity();
    std::int64_t index = -1;

    bool improves(double k, std::int64_t i) const {
        return k < key || (k == key && (index < 0 || i < index));
    }
};

double box_entry(const Ray& ray, const Vec3& lo, const Vec3& hi) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double d = ray.direction[a];
        if (d == 0.0) {
            if (ray.origin[a] < lo[a] || ray.origin[a] > hi[a])
                return std::numeric_limits<double>::infinity();
            continue;
        }
        double n = (lo[a] - ray.origin[a]) / d, f = (hi[a] - ray.origin[a]) / d;
        if (n > f) std::swap(n, f);
        t0 = std::max(t0, n);
        t1 = std::min(t1, f);
    }
    return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

double box_distance(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    const Vec3 d = cwise_max(cwise_max(lo - p, p - hi), Vec3{});
    return length(d);
}

}  // namespace

ProxyMesh::ProxyMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)) {
    triangles_.reserve(triangles.size());
    for (const Triangle& t : triangles) {
        for (auto i : t)
            if (i >= vertices_.size())
                throw InvalidArgument("triangle index " + std::to_string(i) + " out of range");
        const Vec3 n = cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]);
        const double len = length(n);
        if (0.5 * len < kMinArea) continue;
        triangles_.push_back(t);
        normals_.push_back(n / len);
    }
    build_bvh();
}

void ProxyMesh::build_bvh() {
    bvh_.clear();
    order_.resize(triangles_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (triangles_.empty()) return;

    std::vector<Vec3> centroid(triangles_.size());
    for (size_t i = 0; i < triangles_.size(); ++i) {
        const auto& t = triangles_[i];
        centroid[i] = (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
    }

    auto build = [&](auto&& self, std::uint32_t first, std::uint32_t count) -> std::uint32_t {
        const auto index = static_cast<std::uint32_t>(bvh_.size());
        bvh_.emplace_back();
        Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
        Vec3 hi = -lo, clo = lo, chi = hi;
        for (std::uint32_t i = first; i < first + count; ++i) {
            for (auto v : triangles_[order_[i]]) {
                lo = cwise_min(lo, vertices_[v]);
                hi = cwise_max(hi, vertices_[v]);
            }
            clo = cwise_min(clo, centroid[order_[i]]);
            chi = cwise_max(chi, centroid[order_[i]]);
        }
        bvh_[index].lo = lo;
        bvh_[index].hi = hi;
        if (count <= kLeafSize) {
            bvh_[index].first = first;
            bvh_[index].count = count;
            return index;
        }
        const Vec3 ext = chi - clo;
        const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
        const std::uint32_t half = count / 2;
        std::nth_element(order_.begin() + first, order_.begin() + first + half,
                         order_.begin() + first + count, [&](std::uint32_t a, std::uint32_t b) {
                             return centroid[a][axis] < centroid[b][axis] ||
                                    (centroid[a][axis] == centroid[b][axis] && a < b);
                         });
        const std::uint32_t left = self(self, first, half);
        const std::uint32_t right = self(self, first + half, count - half);
        bvh_[index].first = left;
        bvh_[index].right = right;
        bvh_[index].count = 0;
        return index;
    };
    build(build, 0, static_cast<std::uint32_t>(triangles_.size()));
}

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = cross(ray.direction, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < 1e-15) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = ray.origin - a;
    const double u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(ray.direction, q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (t <= 1e-12) return std::nullopt;
    return t;
}

// Region-based closest point (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

ContactReport ray_hit(const ProxyMesh& mesh, const Ray& ray) {
    ContactReport report;
    if (mesh.empty()) return report;
    const auto& nodes = mesh.bvh();
    const auto& tris = mesh.triangles();
    const auto& verts = mesh.vertices();

    Best best;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const auto& node = nodes[stack.back()];
        stack.pop_back();
        // Equal-t hits can still win on index, so only strictly farther boxes are pruned.
        if (box_entry(ray, node.lo, node.hi) > best.key) continue;
        if (node.count == 0) {
            stack.push_back(node.right);
            stack.push_back(node.first);
            continue;
        }
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
            const std::uint32_t tri = mesh.bvh_order()[i];
            const auto& t = tris[tri];
            if (auto hit = intersect_triangle(ray, verts[t[0]], verts[t[1]], verts[t[2]]))
                if (best.improves(*hit, tri)) best = {*hit, tri};
        }
    }
    if (best.index < 0) return report;
    report.hit = true;
    report.t = best.key;
    report.point = ray.at(best.key);
    report.normal = mesh.normals()[best.index];
    report.triangle = best.index;
    return report;
}

ContactReport sphere_contact(const ProxyMesh& mesh, const Vec3& center, double radius) {
    if (!(radius > 0)) throw InvalidArgument("sphere radius must be > 0");
    ContactReport report;
    if (mesh.empty()) return report;
    const auto& nodes = mesh.bvh();
    const auto& tris = mesh.triangles();
    const auto& verts = mesh.vertices();

    Best best{radius, -1};
    Vec3 best_point;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const auto& node = nodes[stack.back()];
        stack.pop_back();
        if (box_distance(center, node.lo, node.hi) > best.key) continue;
        if (node.count == 0) {
            stack.push_back(node.right);
            stack.push_back(node.first);
            continue;
        }
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
            const std::uint32_t tri = mesh.bvh_order()[i];
            const auto& t = tris[tri];
            const Vec3 q = closest_point_on_triangle(center, verts[t[0]], verts[t[1]], verts[t[2]]);
            const double dist = length(center - q);
            if (dist < radius && best.improves(dist, tri)) {
                best = {dist, tri};
                best_point = q;
            }
        }
    }
    if (best.index < 0) return report;
    report.hit = true;
    report.t = radius - best.key;
    report.point = best_point;
    report.normal = best.key > 1e-12 ? (center - best_point) / best.key : mesh.normals()[best.index];
    report.triangle = best.index;
    return report;
}

std::string to_obj(const ProxyMesh& mesh) {
    std::ostringstream out;
    out.precision(9);
    for (const Vec3& v : mesh.vertices()) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles())
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return out.str();
}

}  // namespace deepboard
