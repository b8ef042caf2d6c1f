#include "deepboard/volume.hpp"

#include <algorithm>
#include <string>

#include "deepboard/errors.hpp"

namespace deepboard {

GridMapping::GridMapping(const Aabb& box, const GridSize& res) {
    lo = box.lo();
    const Vec3 extent = box.hi() - box.lo();
    for (int a = 0; a < 3; ++a) {
        n[a] = static_cast<int>(res[a]);
        voxel[a] = extent[a] / res[a];
        cells_per_unit[a] = res[a] / extent[a];
    }
}

DenseVolume::DenseVolume(const Aabb& aabb, const GridSize& resolution)
    : aabb_(aabb), res_(resolution) {
    const size_t n = static_cast<size_t>(res_[0]) * res_[1] * res_[2];
    sigma_.assign(n, 0.0f);
    sh_.assign(n * kShPerCell, 0.0f);
    validate();
}

DenseVolume::DenseVolume(const Aabb& aabb, const GridSize& resolution, std::vector<float> sigma,
                         std::vector<float> sh)
    : aabb_(aabb), res_(resolution), sigma_(std::move(sigma)), sh_(std::move(sh)) {
    validate();
}

Vec3 DenseVolume::cell_center(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    const GridMapping g = grid();
    return {g.lo.x + (x + 0.5) * g.voxel.x, g.lo.y + (y + 0.5) * g.voxel.y,
            g.lo.z + (z + 0.5) * g.voxel.z};
}

float DenseVolume::max_sigma() const {
    return sigma_.empty() ? 0.0f : *std::max_element(sigma_.begin(), sigma_.end());
}

void DenseVolume::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (res_[a] < 1) throw InvalidArgument("volume resolution must be >= 1 on every axis");
        if (!(aabb_.min[a] < aabb_.max[a]))
            throw InvalidArgument("volume aabb min must be < max on every axis");
    }
    const size_t n = static_cast<size_t>(res_[0]) * res_[1] * res_[2];
    if (sigma_.size() != n)
        throw InvalidArgument("sigma array has " + std::to_string(sigma_.size()) +
                              " cells, expected " + std::to_string(n));
    if (sh_.size() != n * kShPerCell)
        throw InvalidArgument("sh array has " + std::to_string(sh_.size()) +
                              " values, expected " + std::to_string(n * kShPerCell));
    for (size_t i = 0; i < n; ++i)
        if (!(sigma_[i] >= 0.0f))
            throw InvalidArgument("negative or NaN sigma at cell " + std::to_string(i));
}

SparseOctree::SparseOctree(const Aabb& source_aabb, const GridSize& source_resolution,
                           int max_depth, std::vector<Node> nodes, std::vector<float> leaf_sigma,
                           std::vector<float> leaf_sh)
    : aabb_(source_aabb),
      res_(source_resolution),
      max_depth_(max_depth),
      nodes_(std::move(nodes)),
      leaf_sigma_(std::move(leaf_sigma)),
      leaf_sh_(std::move(leaf_sh)) {
    validate();
}

Aabb SparseOctree::cube() const {
    const GridMapping g = grid();
    const double cells = static_cast<double>(1u << max_depth_);
    Aabb c = aabb_;
    for (int a = 0; a < 3; ++a) c.max[a] = static_cast<float>(g.lo[a] + g.voxel[a] * cells);
    return c;
}

size_t SparseOctree::empty_leaf_count() const {
    return static_cast<size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_empty_leaf(); }));
}

void SparseOctree::validate() const {
    if (max_depth_ < 1 || max_depth_ > kMaxOctreeDepth)
        throw InvalidArgument("octree max_depth out of range: " + std::to_string(max_depth_));
    for (int a = 0; a < 3; ++a) {
        if (res_[a] < 1 || res_[a] > (1u << max_depth_))
            throw InvalidArgument("octree source resolution does not fit 2^max_depth");
        if (!(aabb_.min[a] < aabb_.max[a])) throw InvalidArgument("octree aabb is empty");
    }
    if (nodes_.empty()) throw InvalidArgument("octree has no root");
    if (leaf_sh_.size() != leaf_sigma_.size() * kShPerCell)
        throw InvalidArgument("octree leaf payload arrays disagree in length");

    std::vector<char> seen_node(nodes_.size(), 0);
    std::vector<char> seen_leaf(leaf_sigma_.size(), 0);
    struct Item {
        std::int32_t node;
        int level;
    };
    std::vector<Item> stack{{0, 0}};
    seen_node[0] = 1;
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        const Node& n = nodes_[it.node];
        if (n.is_internal()) {
            if (it.level >= max_depth_) throw InvalidArgument("octree deeper than max_depth");
            if (static_cast<size_t>(n.first_child) + 8 > nodes_.size())
                throw InvalidArgument("octree child index out of range");
            for (int c = 0; c < 8; ++c) {
                const std::int32_t child = n.first_child + c;
                if (seen_node[child]) throw InvalidArgument("octree node reached twice");
                seen_node[child] = 1;
                stack.push_back({child, it.level + 1});
            }
        } else if (n.leaf >= 0) {
            if (static_cast<size_t>(n.leaf) >= leaf_sigma_.size() || seen_leaf[n.leaf])
                throw InvalidArgument("octree leaf payload index invalid");
            if (it.level != max_depth_)
                throw InvalidArgument("occupied octree leaf above max depth");
            if (!(leaf_sigma_[n.leaf] >= 0.0f)) throw InvalidArgument("negative leaf sigma");
            seen_leaf[n.leaf] = 1;
        }
    }
    if (std::find(seen_node.begin(), seen_node.end(), 0) != seen_node.end())
        throw InvalidArgument("octree has unreachable nodes");
    if (std::find(seen_leaf.begin(), seen_leaf.end(), 0) != seen_leaf.end())
        throw InvalidArgument("octree has unreferenced leaf payloads");
}

namespace {

/// Occupancy pyramid over the padded cube; level l has (2^l)^3 entries.
class OccupancyPyramid {
public:
    OccupancyPyramid(const DenseVolume& v, int depth, float threshold) : levels_(depth + 1) {
        const GridSize& r = v.resolution();
        const size_t side = size_t{1} << depth;
        auto& finest = levels_[depth];
        finest.assign(side * side * side, 0);
        for (std::uint32_t z = 0; z < r[2]; ++z)
            for (std::uint32_t y = 0; y < r[1]; ++y)
                for (std::uint32_t x = 0; x < r[0]; ++x)
                    finest[x + side * (y + side * z)] = v.sigma(v.index(x, y, z)) > threshold;
        for (int l = depth - 1; l >= 0; --l) {
            const size_t s = size_t{1} << l;
            const size_t fine = s * 2;
            levels_[l].assign(s * s * s, 0);
            for (size_t z = 0; z < s; ++z)
                for (size_t y = 0; y < s; ++y)
                    for (size_t x = 0; x < s; ++x) {
                        char any = 0;
                        for (int c = 0; c < 8 && !any; ++c) {
                            const size_t fx = 2 * x + (c & 1), fy = 2 * y + ((c >> 1) & 1),
                                         fz = 2 * z + ((c >> 2) & 1);
                            any = levels_[l + 1][fx + fine * (fy + fine * fz)];
                        }
                        levels_[l][x + s * (y + s * z)] = any;
                    }
        }
    }

    bool occupied(int level, size_t x, size_t y, size_t z) const {
        const size_t s = size_t{1} << level;
        return levels_[level][x + s * (y + s * z)] != 0;
    }

private:
    std::vector<std::vector<char>> levels_;
};

}  // namespace

SparseOctree build_octree(const DenseVolume& volume, float prune_threshold) {
    if (!(prune_threshold >= 0.0f)) throw InvalidArgument("prune_threshold must be >= 0");
    const GridSize& res = volume.resolution();
    const std::uint32_t longest = std::max({res[0], res[1], res[2]});
    int depth = 1;
    while ((1u << depth) < longest) {
        ++depth;
        if (depth > kMaxOctreeDepth)
            throw ResolutionOverflow("padded resolution exceeds 2^" +
                                     std::to_string(kMaxOctreeDepth) + " per axis (longest axis " +
                                     std::to_string(longest) + ")");
    }

    const OccupancyPyramid occ(volume, depth, prune_threshold);
    std::vector<SparseOctree::Node> nodes(1);
    std::vector<float> sigma;
    std::vector<float> sh;

    auto build = [&](auto&& self, std::int32_t ni, int level, size_t x, size_t y, size_t z) -> void {
        if (!occ.occupied(level, x, y, z)) return;  // stays an Empty leaf
        if (level == depth) {
            const size_t cell = volume.index(static_cast<std::uint32_t>(x),
                                             static_cast<std::uint32_t>(y),
                                             static_cast<std::uint32_t>(z));
            nodes[ni].leaf = static_cast<std::int32_t>(sigma.size());
            sigma.push_back(volume.sigma(cell));
            sh.insert(sh.end(), volume.sh(cell), volume.sh(cell) + kShPerCell);
            return;
        }
        const auto first = static_cast<std::int32_t>(nodes.size());
        nodes.resize(nodes.size() + 8);
        nodes[ni].first_child = first;
        for (int c = 0; c < 8; ++c)
            self(self, first + c, level + 1, 2 * x + (c & 1), 2 * y + ((c >> 1) & 1),
                 2 * z + ((c >> 2) & 1));
    };
    build(build, 0, 0, 0, 0, 0);

    return SparseOctree(volume.aabb(), res, depth, std::move(nodes), std::move(sigma),
                        std::move(sh));
}

DenseVolume to_dense(const SparseOctree& octree) {
    DenseVolume out(octree.aabb(), octree.resolution());
    const GridSize& r = octree.resolution();
    for (std::uint32_t z = 0; z < r[2]; ++z)
        for (std::uint32_t y = 0; y < r[1]; ++y)
            for (std::uint32_t x = 0; x < r[0]; ++x) {
                const auto look = octree.find_leaf({int(x), int(y), int(z)});
                if (look.node->leaf < 0) continue;
                const size_t cell = out.index(x, y, z);
                out.sigma_data()[cell] = octree.leaf_sigma(look.node->leaf);
                std::copy_n(octree.leaf_sh(look.node->leaf), kShPerCell,
                            out.sh_data().begin() + cell * kShPerCell);
            }
    return out;
}

}  // namespace deepboard
