#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "deepboard/assets.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/proxy.hpp"
#include "oracles.hpp"

using namespace deepboard;

namespace {

/// sigma = max(0, 1 - r / 0.5) over the unit box.
DenseVolume radial_field(std::uint32_t n) {
    DenseVolume v(Aabb{}, {n, n, n});
    for (std::uint32_t z = 0; z < n; ++z)
        for (std::uint32_t y = 0; y < n; ++y)
            for (std::uint32_t x = 0; x < n; ++x)
                v.sigma_data()[v.index(x, y, z)] =
                    static_cast<float>(std::max(0.0, 1.0 - length(v.cell_center(x, y, z)) / 0.5));
    return v;
}

const ProxyMesh& sphere_mesh() {
    static const ProxyMesh mesh = extract_proxy(radial_field(64), 0.5);
    return mesh;
}

constexpr double kVoxel = 1.0 / 64;

/// Ray/triangle by solving o + t d = a + u (b-a) + v (c-a) with Cramer's rule.
std::optional<double> cramer_hit(const Ray& r, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a, e2 = c - a, rhs = r.origin - a, nd = -r.direction;
    auto det = [](const Vec3& x, const Vec3& y, const Vec3& z) { return dot(x, cross(y, z)); };
    const double d = det(e1, e2, nd);
    if (std::abs(d) < 1e-14) return std::nullopt;
    const double u = det(rhs, e2, nd) / d;
    const double v = det(e1, rhs, nd) / d;
    const double t = det(e1, e2, rhs) / d;
    if (u < 0 || v < 0 || u + v > 1 || t <= 1e-12) return std::nullopt;
    return t;
}

Vec3 vertex(const ProxyMesh& m, std::uint32_t t, int k) { return m.vertices()[m.triangles()[t][k]]; }

}  // namespace

TEST_CASE("extract_proxy: empty cases") {
    DenseVolume zero(Aabb{}, {8, 8, 8});
    CHECK(extract_proxy(zero, 0.5).empty());
    const DenseVolume v = radial_field(16);
    CHECK(extract_proxy(v, 2.0).empty());
    CHECK(extract_proxy(v, -1.0).empty());
}

TEST_CASE("extract_proxy: sphere radius") {
    const ProxyMesh& m = sphere_mesh();
    REQUIRE(!m.empty());
    for (const Vec3& p : m.vertices()) CHECK(std::abs(length(p) - 0.25) <= 1.5 * kVoxel);
}

TEST_CASE("extract_proxy: closed, consistently oriented, genus zero") {
    const ProxyMesh& m = sphere_mesh();
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const auto& t : m.triangles())
        for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
    std::set<std::pair<std::uint32_t, std::uint32_t>> undirected;
    for (const auto& [e, count] : directed) {
        CHECK(count == 1);
        CHECK(directed.count({e.second, e.first}) == 1);
        undirected.insert({std::min(e.first, e.second), std::max(e.first, e.second)});
    }
    const long long V = static_cast<long long>(m.vertices().size());
    const long long E = static_cast<long long>(undirected.size());
    const long long F = static_cast<long long>(m.triangles().size());
    CHECK(V - E + F == 2);

    // Outward orientation: positive enclosed volume close to the sphere's.
    double volume = 0;
    for (std::uint32_t t = 0; t < m.triangles().size(); ++t)
        volume += dot(vertex(m, t, 0), cross(vertex(m, t, 1), vertex(m, t, 2))) / 6.0;
    const double analytic = 4.0 / 3.0 * std::numbers::pi * std::pow(0.25, 3);
    CHECK(volume == doctest::Approx(analytic).epsilon(0.05));
    for (size_t i = 0; i < m.normals().size(); ++i) CHECK(std::abs(length(m.normals()[i]) - 1) < 1e-9);
}

TEST_CASE("extract_proxy: random fields produce closed meshes") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        // Zero border keeps every level set inside the grid.
        DenseVolume v = oracle::random_volume(12, seed, 1.0, 0.4);
        for (std::uint32_t z = 0; z < 12; ++z)
            for (std::uint32_t y = 0; y < 12; ++y)
                for (std::uint32_t x = 0; x < 12; ++x)
                    if (x == 0 || y == 0 || z == 0 || x == 11 || y == 11 || z == 11)
                        v.sigma_data()[v.index(x, y, z)] = 0;
        const ProxyMesh m = extract_proxy(v, 0.37);
        REQUIRE(!m.empty());
        std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
        for (const auto& t : m.triangles())
            for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
        for (const auto& [e, count] : directed) {
            CHECK(count == 1);
            CHECK(directed.count({e.second, e.first}) == 1);
        }
    }
}

TEST_CASE("extract_proxy is deterministic") {
    const DenseVolume v = generate_scene({SceneName::TwoSpheres, 32});
    const ProxyMesh a = extract_proxy(v, default_iso(v));
    const ProxyMesh b = extract_proxy(v, default_iso(v));
    CHECK(a.vertices() == b.vertices());
    CHECK(a.triangles() == b.triangles());
}

TEST_CASE("downsample_sigma averages blocks") {
    const DenseVolume v = oracle::random_volume(8, 3);
    const DenseVolume d = downsample_sigma(v, 4);
    REQUIRE(d.resolution() == GridSize{4, 4, 4});
    CHECK(d.aabb() == v.aabb());
    double want = 0;
    for (std::uint32_t z = 2; z < 4; ++z)
        for (std::uint32_t y = 4; y < 6; ++y)
            for (std::uint32_t x = 0; x < 2; ++x) want += v.sigma(v.index(x, y, z));
    CHECK(d.sigma(d.index(0, 2, 1)) == doctest::Approx(want / 8).epsilon(1e-6));
    CHECK(downsample_sigma(v, 16).resolution() == GridSize{8, 8, 8});
}

TEST_CASE("ProxyMesh rejects bad indices and drops degenerate triangles") {
    CHECK_THROWS_AS(ProxyMesh({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 2}}), InvalidArgument);
    const ProxyMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}}, {{0, 1, 2}, {0, 1, 3}});
    CHECK(m.triangles().size() == 1);
}

TEST_CASE("intersect_triangle and closest point against independent formulas") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 a = oracle::random_unit(rng), b = oracle::random_unit(rng), c = oracle::random_unit(rng);
        const Ray r{oracle::random_unit(rng) * 3.0, oracle::random_unit(rng)};
        const auto got = intersect_triangle(r, a, b, c);
        const auto want = cramer_hit(r, a, b, c);
        if (got && want) CHECK(std::abs(*got - *want) < 1e-9);
        const Vec3 p = oracle::random_unit(rng) * oracle::uniform(rng, 0, 2);
        CHECK(length(closest_point_on_triangle(p, a, b, c) - oracle::closest_on_triangle(p, a, b, c)) < 1e-9);
    }
    // A ray aimed at the centroid always hits.
    const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
    const auto hit = intersect_triangle({{0.25, 0.25, 2}, {0, 0, -1}}, a, b, c);
    REQUIRE(hit);
    CHECK(*hit == doctest::Approx(2.0));
    CHECK(!intersect_triangle({{0.25, 0.25, 2}, {0, 0, 1}}, a, b, c));
}

TEST_CASE("ray_hit: sphere proxy") {
    const ProxyMesh& m = sphere_mesh();
    const auto out = ray_hit(m, {{0, 0, 0}, {0, 0, 1}});
    REQUIRE(out.hit);
    CHECK(std::abs(out.t - 0.25) <= 1.5 * kVoxel);
    CHECK(out.normal.z > 0.9);
    const auto in = ray_hit(m, {{0, 0, 2}, {0, 0, -1}});
    REQUIRE(in.hit);
    CHECK(std::abs(in.t - 1.75) <= 1.5 * kVoxel);
    CHECK(!ray_hit(m, {{0, 2, 2}, {0, 0, -1}}).hit);
    CHECK(!ray_hit(ProxyMesh{}, {{0, 0, 2}, {0, 0, -1}}).hit);
}

TEST_CASE("ray_hit equals brute force") {
    const ProxyMesh& m = sphere_mesh();
    std::mt19937_64 rng(31);
    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 origin = oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 1.0);
        const Vec3 target = oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 0.3);
        const Ray r{origin, normalize(target - origin)};
        double best = std::numeric_limits<double>::infinity();
        std::int64_t best_tri = -1;
        for (std::uint32_t t = 0; t < m.triangles().size(); ++t)
            if (auto h = intersect_triangle(r, vertex(m, t, 0), vertex(m, t, 1), vertex(m, t, 2));
                h && *h < best) {
                best = *h;
                best_tri = t;
            }
        const auto got = ray_hit(m, r);
        CHECK(got.hit == (best_tri >= 0));
        if (got.hit) {
            ++hits;
            CHECK(got.t == best);
            CHECK(got.triangle == best_tri);
        }
    }
    CHECK(hits > 500);
}

TEST_CASE("sphere_contact") {
    const ProxyMesh& m = sphere_mesh();
    CHECK(!sphere_contact(m, {0, 0, 3}, 0.1).hit);
    const Vec3 v = m.vertices()[m.vertices().size() / 3];
    const auto c = sphere_contact(m, v, 0.1);
    REQUIRE(c.hit);
    CHECK(c.t == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(std::abs(length(c.normal) - 1) < 1e-9);
    const auto outside = sphere_contact(m, {0, 0, 0.3}, 0.1);
    REQUIRE(outside.hit);
    CHECK(outside.normal.z > 0.9);
    CHECK(std::abs(outside.t - (0.1 - 0.05)) <= 1.5 * kVoxel);
    CHECK(!sphere_contact(ProxyMesh{}, {0, 0, 0}, 1.0).hit);
}

TEST_CASE("sphere_contact equals brute force") {
    const ProxyMesh& m = sphere_mesh();
    std::mt19937_64 rng(41);
    int hits = 0;
    for (int i = 0; i < 500; ++i) {
        const Vec3 center = oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 0.5);
        const double radius = oracle::uniform(rng, 0.01, 0.2);
        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t t = 0; t < m.triangles().size(); ++t)
            best = std::min(best, length(center - oracle::closest_on_triangle(center, vertex(m, t, 0),
                                                                 vertex(m, t, 1), vertex(m, t, 2))));
        const auto got = sphere_contact(m, center, radius);
        CHECK(got.hit == (best < radius));
        if (got.hit) {
            ++hits;
            CHECK(std::abs(got.t - (radius - best)) < 1e-9);
            CHECK(std::abs(length(got.point - center) - best) < 1e-9);
        }
    }
    CHECK(hits > 100);
}

TEST_CASE("shadow_mask: straight-down disk") {
    const ProxyMesh& m = sphere_mesh();
    const ShadowMask s = shadow_mask(m, {0, -1, 0}, -1.0, 256);
    const double disk = std::numbers::pi * 0.25 * 0.25;
    CHECK(std::abs(s.covered_area() - disk) <= 0.1 * disk);
    CHECK(s.shadows(0, 0));
    CHECK(s.shadows(0.2, 0));
    CHECK(!s.shadows(0.3, 0.3));
}

TEST_CASE("shadow_mask: oblique light stretches along x") {
    const ProxyMesh& m = sphere_mesh();
    const ShadowMask s = shadow_mask(m, normalize(Vec3{1, -1, 0}), -1.0, 256);
    double min_x = 1e9, max_x = -1e9, min_z = 1e9, max_z = -1e9;
    for (int row = 0; row < s.height; ++row)
        for (int col = 0; col < s.width; ++col)
            if (s.at(col, row)) {
                const double x = s.min_x + (col + 0.5) * s.pixel_width();
                const double z = s.min_z + (row + 0.5) * s.pixel_depth();
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_z = std::min(min_z, z);
                max_z = std::max(max_z, z);
            }
    const double ratio = (max_x - min_x) / (max_z - min_z);
    CHECK(std::abs(ratio - std::sqrt(2.0)) <= 0.1 * std::sqrt(2.0));
    // The shadow center moves downwind by the drop height.
    CHECK((max_x + min_x) / 2 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shadow_mask: errors and empty meshes") {
    CHECK(shadow_mask(ProxyMesh{}, {0, -1, 0}, 0.0, 64).empty());
    CHECK_THROWS_AS(shadow_mask(sphere_mesh(), {1, 0, 0}, -1.0, 64), LightParallelToGround);
    CHECK_THROWS_AS(shadow_mask(sphere_mesh(), {0, 1, 0}, -1.0, 64), LightParallelToGround);
}

TEST_CASE("shadow_mask on a shared grid is monotone in the mesh") {
    // Adding triangles can only add shadowed pixels.
    const ProxyMesh& m = sphere_mesh();
    std::vector<ProxyMesh::Triangle> half(m.triangles().begin(),
                                          m.triangles().begin() + m.triangles().size() / 2);
    const ProxyMesh partial(m.vertices(), half);
    const GroundRect rect{-0.6, -0.6, 0.6, 0.6};
    const ShadowMask a = shadow_mask(partial, {0.2, -1, 0.1}, -1.0, 128, rect);
    const ShadowMask b = shadow_mask(m, {0.2, -1, 0.1}, -1.0, 128, rect);
    for (size_t i = 0; i < a.mask.size(); ++i)
        if (a.mask[i]) CHECK(b.mask[i]);
    CHECK(b.covered_pixels() >= a.covered_pixels());
}

TEST_CASE("to_obj") {
    const ProxyMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    std::istringstream in(to_obj(m));
    std::string line;
    int v = 0, f = 0;
    while (std::getline(in, line)) {
        if (line.starts_with("v ")) ++v;
        if (line.starts_with("f ")) {
            ++f;
            CHECK(line == "f 1 2 3");
        }
    }
    CHECK(v == 3);
    CHECK(f == 1);
}
