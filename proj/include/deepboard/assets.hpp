#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "deepboard/volume.hpp"

namespace deepboard {

enum class SceneName { Sphere, Box, LobedSphere, TwoSpheres };

/// Parses "sphere", "box", "lobed-sphere", "two-spheres"; throws UnknownScene.
SceneName parse_scene_name(std::string_view name);
std::string_view to_string(SceneName name);

/// Analytic stand-in for a captured object. Scenes live in the box [-0.5, 0.5]^3.
struct SceneSpec {
    SceneName name = SceneName::Sphere;
    std::uint32_t resolution = 32;  // one of 8..256, powers of two
    float density_scale = 5.0f;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Radius of the sphere scenes as a fraction of the box edge.
inline constexpr double kSphereRadiusFraction = 0.4;

/// Deterministic: the same spec always yields a bitwise-identical volume.
///  - sphere: sigma = density_scale inside radius 0.4, constant gray.
///  - lobed-sphere: same density, degree-1 SH so +z and -z views differ in color.
///  - box: axis-aligned slab with seeded per-cell colors.
///  - two-spheres: two disjoint colored spheres.
DenseVolume generate_scene(const SceneSpec& spec);

enum class AssetKind : std::uint8_t { Dense = 0, Octree = 1 };

using Asset = std::variant<DenseVolume, SparseOctree>;

inline constexpr std::uint16_t kAssetVersion = 1;

AssetKind kind_of(const Asset& asset);
const Aabb& aabb_of(const Asset& asset);

/// DBB1 encoding; see docs/asset-format.md for the byte layout.
std::vector<std::uint8_t> serialize_asset(const Asset& asset);
/// Throws BadMagic, UnsupportedVersion, TruncatedFile (with offsets), or InvalidArgument.
Asset deserialize_asset(std::span<const std::uint8_t> bytes);

void save_asset(const std::string& path, const Asset& asset);
Asset load_asset(const std::string& path);

}  // namespace deepboard
