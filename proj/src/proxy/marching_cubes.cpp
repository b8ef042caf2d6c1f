#include <algorithm>
#include <unordered_map>

#include "deepboard/errors.hpp"
#include "deepboard/proxy.hpp"

namespace deepboard {
namespace {

// Corner c sits at offset (c&1, (c>>1)&1, (c>>2)&1) within the cell.
constexpr std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along z
}};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e)
        if ((kEdgeCorners[e][0] == a && kEdgeCorners[e][1] == b) ||
            (kEdgeCorners[e][0] == b && kEdgeCorners[e][1] == a))
            return e;
    return -1;
}

Vec3 corner_pos(int c) { return {double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)}; }

struct CaseTable {
    // Per configuration: triangles as local edge triples.
    std::array<std::vector<std::array<int, 3>>, 256> triangles;
};

bool share_face(int e1, int e2) {
    // Two cell edges lie on a common face iff their four corners span a face:
    // the corner set varies along at most two axes.
    int varying = 0;
    const int c[4] = {kEdgeCorners[e1][0], kEdgeCorners[e1][1], kEdgeCorners[e2][0],
                      kEdgeCorners[e2][1]};
    for (int axis = 0; axis < 3; ++axis) {
        int lo = 1, hi = 0;
        for (int k : c) {
            lo = std::min(lo, (k >> axis) & 1);
            hi = std::max(hi, (k >> axis) & 1);
        }
        varying += lo != hi;
    }
    return varying <= 2;
}

Vec3 edge_mid(int e) { return (corner_pos(kEdgeCorners[e][0]) + corner_pos(kEdgeCorners[e][1])) * 0.5; }

/// Derives the triangulation of every corner configuration from face contours.
/// On each face, intersected edges pair up; a face with four crossings pairs the
/// edges around each inside corner. Each face segment is directed so that, seen
/// against the face's outward normal, inside corners lie on a fixed side. A face
/// shared by two cells has opposite normals in each, so neighbouring triangles
/// agree on orientation and normals point from inside to outside.
CaseTable make_case_table() {
    CaseTable table;
    struct Face {
        std::array<int, 4> corners;  // cyclic order
        Vec3 normal;                 // pointing out of the cell
    };
    std::array<Face, 6> faces{};
    int fi = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            for (int i = 0; i < 4; ++i)
                faces[fi].corners[i] = (side << axis) | (uv[i][0] << u) | (uv[i][1] << v);
            Vec3 n{};
            n[axis] = side ? 1.0 : -1.0;
            faces[fi].normal = n;
            ++fi;
        }
    }

    for (int config = 0; config < 256; ++config) {
        auto inside = [&](int c) { return (config >> c) & 1; };
        std::array<int, 12> next;
        next.fill(-1);
        for (const auto& face : faces) {
            const auto& f = face.corners;
            std::array<int, 4> crossing{};
            int count = 0;
            for (int i = 0; i < 4; ++i) {
                crossing[i] = inside(f[i]) != inside(f[(i + 1) % 4]);
                count += crossing[i];
            }
            // Segment between face edges i and j, with an inside corner to orient it.
            auto link = [&](int i, int j, int inside_corner) {
                const int a = edge_between(f[i], f[(i + 1) % 4]);
                const int b = edge_between(f[j], f[(j + 1) % 4]);
                const Vec3 p = edge_mid(a);
                const Vec3 side = cross(face.normal, edge_mid(b) - p);
                if (dot(side, corner_pos(inside_corner) - p) < 0) next[a] = b;
                else next[b] = a;
            };
            if (count == 2) {
                int first = -1, second = -1, corner = -1;
                for (int i = 0; i < 4; ++i) {
                    if (crossing[i]) (first < 0 ? first : second) = i;
                    if (inside(f[i])) corner = f[i];
                }
                link(first, second, corner);
            } else if (count == 4) {
                // Corner i sits between face edges i-1 and i.
                for (int i = 0; i < 4; ++i)
                    if (inside(f[i])) link((i + 3) % 4, i, f[i]);
            }
        }

        std::array<bool, 12> visited{};
        for (int start = 0; start < 12; ++start) {
            if (next[start] < 0 || visited[start]) continue;
            std::vector<int> cycle;
            for (int e = start; !visited[e]; e = next[e]) {
                visited[e] = true;
                cycle.push_back(e);
            }
            // Fan from an apex whose chords stay off the cell faces; a chord on a face
            // could coincide with the neighbouring cell's contour.
            const size_t n = cycle.size();
            size_t apex = 0;
            for (size_t k = 0; k < n; ++k) {
                bool clean = true;
                for (size_t i = 2; i + 1 < n; ++i)
                    if (share_face(cycle[k], cycle[(k + i) % n])) clean = false;
                if (clean) {
                    apex = k;
                    break;
                }
            }
            for (size_t i = 1; i + 1 < n; ++i)
                table.triangles[config].push_back(
                    {cycle[apex], cycle[(apex + i) % n], cycle[(apex + i + 1) % n]});
        }
    }
    return table;
}

const CaseTable& case_table() {
    static const CaseTable table = make_case_table();
    return table;
}

}  // namespace

double default_iso(const DenseVolume& volume) { return 0.5 * volume.max_sigma(); }

ProxyMesh extract_proxy(const DenseVolume& volume, double iso) {
    const auto& sigma = volume.sigma_data();
    if (sigma.empty()) return {};
    const auto [mn, mx] = std::minmax_element(sigma.begin(), sigma.end());
    if (!(iso > *mn && iso < *mx)) return {};

    const GridSize& r = volume.resolution();
    const auto nx = r[0], ny = r[1], nz = r[2];
    if (nx < 2 || ny < 2 || nz < 2) return {};
    const CaseTable& table = case_table();

    std::vector<Vec3> vertices;
    std::vector<ProxyMesh::Triangle> triangles;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

    auto grid_point = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
        return volume.cell_center(x, y, z);
    };

    for (std::uint32_t z = 0; z + 1 < nz; ++z)
        for (std::uint32_t y = 0; y + 1 < ny; ++y)
            for (std::uint32_t x = 0; x + 1 < nx; ++x) {
                std::array<float, 8> value{};
                int config = 0;
                for (int c = 0; c < 8; ++c) {
                    value[c] = volume.sigma(volume.index(x + (c & 1), y + ((c >> 1) & 1),
                                                         z + ((c >> 2) & 1)));
                    if (value[c] > iso) config |= 1 << c;
                }
                const auto& tris = table.triangles[config];
                if (tris.empty()) continue;

                std::array<std::uint32_t, 12> local{};
                for (int e = 0; e < 12; ++e) {
                    const int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
                    if (((config >> a) & 1) == ((config >> b) & 1)) continue;
                    // Edge id from its lower grid point and axis.
                    const std::uint64_t gx = x + (a & 1), gy = y + ((a >> 1) & 1),
                                        gz = z + ((a >> 2) & 1);
                    const std::uint64_t id = ((gz * ny + gy) * nx + gx) * 3 + e / 4;
                    auto [it, fresh] = edge_vertex.try_emplace(id, 0);
                    if (fresh) {
                        const Vec3 pa = grid_point(static_cast<std::uint32_t>(gx),
                                                   static_cast<std::uint32_t>(gy),
                                                   static_cast<std::uint32_t>(gz));
                        const Vec3 pb = grid_point(x + (b & 1), y + ((b >> 1) & 1),
                                                   z + ((b >> 2) & 1));
                        const double t = (iso - value[a]) / (double(value[b]) - value[a]);
                        it->second = static_cast<std::uint32_t>(vertices.size());
                        vertices.push_back(pa + (pb - pa) * t);
                    }
                    local[e] = it->second;
                }
                for (const auto& t : tris) triangles.push_back({local[t[0]], local[t[1]], local[t[2]]});
            }
    return ProxyMesh(std::move(vertices), std::move(triangles));
}

DenseVolume downsample_sigma(const DenseVolume& volume, std::uint32_t resolution) {
    if (resolution < 1) throw InvalidArgument("proxy resolution must be >= 1");
    const GridSize& src = volume.resolution();
    GridSize dst{};
    for (int a = 0; a < 3; ++a) dst[a] = std::min(src[a], resolution);
    if (dst == src) return volume;

    DenseVolume out(volume.aabb(), dst);
    std::vector<float> weight(out.cell_count(), 0.0f);
    for (std::uint32_t z = 0; z < src[2]; ++z)
        for (std::uint32_t y = 0; y < src[1]; ++y)
            for (std::uint32_t x = 0; x < src[0]; ++x) {
                const size_t to = out.index(static_cast<std::uint32_t>(std::uint64_t{x} * dst[0] / src[0]),
                                            static_cast<std::uint32_t>(std::uint64_t{y} * dst[1] / src[1]),
                                            static_cast<std::uint32_t>(std::uint64_t{z} * dst[2] / src[2]));
                out.sigma_data()[to] += volume.sigma(volume.index(x, y, z));
                weight[to] += 1.0f;
            }
    for (size_t i = 0; i < weight.size(); ++i) out.sigma_data()[i] /= weight[i];
    return out;
}

}  // namespace deepboard
