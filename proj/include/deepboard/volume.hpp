#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "deepboard/math.hpp"
#include "deepboard/sh.hpp"

namespace deepboard {

/// Axis-aligned box stored in f32 so that persisted assets round-trip bitwise.
struct Aabb {
    std::array<float, 3> min{-0.5f, -0.5f, -0.5f};
    std::array<float, 3> max{0.5f, 0.5f, 0.5f};

    Vec3 lo() const { return {min[0], min[1], min[2]}; }
    Vec3 hi() const { return {max[0], max[1], max[2]}; }
    Vec3 center() const { return (lo() + hi()) * 0.5; }
    Vec3 half_extents() const { return (hi() - lo()) * 0.5; }
    double bounding_radius() const { return length(half_extents()); }

    bool operator==(const Aabb&) const = default;
};

using GridSize = std::array<std::uint32_t, 3>;

/// World position to nearest-cell index. Shared by every sampler so that all of
/// them agree on which cell a point falls in.
struct GridMapping {
    Vec3 lo;
    Vec3 cells_per_unit;
    Vec3 voxel;
    std::array<int, 3> n{};

    GridMapping(const Aabb& box, const GridSize& res);

    std::array<int, 3> cell_of(const Vec3& p) const {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const double f = std::floor((p[a] - lo[a]) * cells_per_unit[a]);
            c[a] = f < 0 ? 0 : (f >= n[a] ? n[a] - 1 : static_cast<int>(f));
        }
        return c;
    }

    double min_voxel() const { return std::min(voxel.x, std::min(voxel.y, voxel.z)); }
};

/// Regular grid of density and degree-2 SH color. Cell (x,y,z) is stored at
/// x + nx*(y + ny*z); SH is 27 floats per cell, channel-major.
class DenseVolume {
public:
    DenseVolume() = default;
    /// Zero density, zero SH.
    DenseVolume(const Aabb& aabb, const GridSize& resolution);
    /// Takes ownership of the arrays; throws InvalidArgument on any invariant violation.
    DenseVolume(const Aabb& aabb, const GridSize& resolution, std::vector<float> sigma,
                std::vector<float> sh);

    const Aabb& aabb() const { return aabb_; }
    const GridSize& resolution() const { return res_; }
    size_t cell_count() const { return sigma_.size(); }
    GridMapping grid() const { return {aabb_, res_}; }

    size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return x + static_cast<size_t>(res_[0]) * (y + static_cast<size_t>(res_[1]) * z);
    }

    /// World-space center of a cell.
    Vec3 cell_center(std::uint32_t x, std::uint32_t y, std::uint32_t z) const;

    float sigma(size_t cell) const { return sigma_[cell]; }
    const float* sh(size_t cell) const { return sh_.data() + cell * kShPerCell; }

    std::span<const float> sigma_data() const { return sigma_; }
    std::span<const float> sh_data() const { return sh_; }
    std::span<float> sigma_data() { return sigma_; }
    std::span<float> sh_data() { return sh_; }

    float max_sigma() const;

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;

    bool operator==(const DenseVolume&) const = default;

private:
    Aabb aabb_;
    GridSize res_{0, 0, 0};
    std::vector<float> sigma_;
    std::vector<float> sh_;
};

/// Sparse octree over a dense grid padded to a 2^depth cube. Occupied leaves
/// sit at max_depth and hold one source cell; Empty leaves may sit at any depth.
/// Nodes are laid out depth-first with the 8 children of a node contiguous,
/// child index = x | y<<1 | z<<2.
class SparseOctree {
public:
    struct Node {
        std::int32_t first_child = -1;  // >= 0 for internal nodes
        std::int32_t leaf = -1;         // payload index for Occupied leaves, -1 for Empty

        bool is_internal() const { return first_child >= 0; }
        bool is_empty_leaf() const { return first_child < 0 && leaf < 0; }
        bool operator==(const Node&) const = default;
    };

    SparseOctree() = default;
    SparseOctree(const Aabb& source_aabb, const GridSize& source_resolution, int max_depth,
                 std::vector<Node> nodes, std::vector<float> leaf_sigma,
                 std::vector<float> leaf_sh);

    /// Box that sampling is clipped to (the source volume's box).
    const Aabb& aabb() const { return aabb_; }
    const GridSize& resolution() const { return res_; }
    int max_depth() const { return max_depth_; }
    GridMapping grid() const { return {aabb_, res_}; }

    /// World-space extent of the padded 2^depth cube.
    Aabb cube() const;

    std::span<const Node> nodes() const { return nodes_; }
    size_t occupied_count() const { return leaf_sigma_.size(); }
    size_t empty_leaf_count() const;
    float leaf_sigma(std::int32_t leaf) const { return leaf_sigma_[leaf]; }
    const float* leaf_sh(std::int32_t leaf) const { return leaf_sh_.data() + leaf * kShPerCell; }
    std::span<const float> leaf_sigma_data() const { return leaf_sigma_; }
    std::span<const float> leaf_sh_data() const { return leaf_sh_; }

    struct Lookup {
        const Node* node;
        int level;  // 0 = root
    };

    /// Leaf containing the given cell of the padded grid.
    Lookup find_leaf(const std::array<int, 3>& cell) const {
        const Node* node = &nodes_[0];
        int level = 0;
        while (node->is_internal()) {
            const int shift = max_depth_ - 1 - level;
            const int child = ((cell[0] >> shift) & 1) | (((cell[1] >> shift) & 1) << 1) |
                              (((cell[2] >> shift) & 1) << 2);
            node = &nodes_[node->first_child + child];
            ++level;
        }
        return {node, level};
    }

    /// Throws InvalidArgument when the node structure is malformed.
    void validate() const;

    bool operator==(const SparseOctree&) const = default;

private:
    Aabb aabb_;
    GridSize res_{0, 0, 0};
    int max_depth_ = 1;
    std::vector<Node> nodes_{Node{}};
    std::vector<float> leaf_sigma_;
    std::vector<float> leaf_sh_;
};

inline constexpr int kMaxOctreeDepth = 10;

/// Subtrees whose cells all have sigma <= prune_threshold collapse into one Empty
/// leaf; every other cell becomes an Occupied leaf at max depth with its data copied.
/// Throws ResolutionOverflow past 2^10 cells per axis.
SparseOctree build_octree(const DenseVolume& volume, float prune_threshold = 0.0f);

/// Expands an octree back onto its source grid; Empty leaves become zero cells.
/// Inverse of build_octree with threshold 0.
DenseVolume to_dense(const SparseOctree& octree);

}  // namespace deepboard
