#include <cmath>
#include <random>
#include <string>

#include "deepboard/assets.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

// std::*_distribution output differs between standard libraries; mt19937 output does not.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(
                                                   seed ^ (seed >> 32))) {}
    double uniform(double lo, double hi) {
        const double u = (engine_() >> 8) * (1.0 / 16777216.0);
        return lo + (hi - lo) * u;
    }

private:
    std::mt19937 engine_;
};

double logit(double p) { return std::log(p / (1.0 - p)); }

/// Degree-0 coefficient that makes a view-independent cell show `color`.
float dc_for(double color) { return static_cast<float>(logit(color) / kShC0); }

void set_dc(DenseVolume& v, size_t cell, double r, double g, double b) {
    float* sh = v.sh_data().data() + cell * kShPerCell;
    sh[0 * kShBasisCount] = dc_for(r);
    sh[1 * kShBasisCount] = dc_for(g);
    sh[2 * kShBasisCount] = dc_for(b);
}

}  // namespace

SceneName parse_scene_name(std::string_view name) {
    if (name == "sphere") return SceneName::Sphere;
    if (name == "box") return SceneName::Box;
    if (name == "lobed-sphere") return SceneName::LobedSphere;
    if (name == "two-spheres") return SceneName::TwoSpheres;
    throw UnknownScene("'" + std::string(name) + "'");
}

std::string_view to_string(SceneName name) {
    switch (name) {
        case SceneName::Sphere: return "sphere";
        case SceneName::Box: return "box";
        case SceneName::LobedSphere: return "lobed-sphere";
        case SceneName::TwoSpheres: return "two-spheres";
    }
    return "?";
}

void SceneSpec::validate() const {
    const bool pow2 = resolution >= 8 && resolution <= 256 && (resolution & (resolution - 1)) == 0;
    if (!pow2)
        throw InvalidArgument("scene resolution must be one of 8,16,32,64,128,256, got " +
                              std::to_string(resolution));
    if (!(density_scale > 0)) throw InvalidArgument("density_scale must be > 0");
}

DenseVolume generate_scene(const SceneSpec& spec) {
    spec.validate();
    const std::uint32_t n = spec.resolution;
    DenseVolume vol(Aabb{}, {n, n, n});
    PortableRng rng(spec.seed);

    const double radius = kSphereRadiusFraction;
    const Vec3 left{-0.22, 0.0, 0.0};
    const Vec3 right{0.22, 0.0, 0.0};
    const double small_radius = 0.18;
    // Colors of the two-spheres scene, jittered once per seed.
    const double jitter = rng.uniform(-0.1, 0.1);

    for (std::uint32_t z = 0; z < n; ++z)
        for (std::uint32_t y = 0; y < n; ++y)
            for (std::uint32_t x = 0; x < n; ++x) {
                const size_t cell = vol.index(x, y, z);
                const Vec3 p = vol.cell_center(x, y, z);
                float& sigma = vol.sigma_data()[cell];
                switch (spec.name) {
                    case SceneName::Sphere:
                        if (length(p) < radius) {
                            sigma = spec.density_scale;
                            set_dc(vol, cell, 0.6, 0.6, 0.6);
                        }
                        break;
                    case SceneName::LobedSphere:
                        if (length(p) < radius) {
                            sigma = spec.density_scale;
                            float* sh = vol.sh_data().data() + cell * kShPerCell;
                            // Red dominates for observers on the -z side, blue for observers on +z.
                            sh[0 * kShBasisCount + 2] = 3.0f;
                            sh[2 * kShBasisCount + 2] = -3.0f;
                            sh[1 * kShBasisCount] = dc_for(0.5);
                        }
                        break;
                    case SceneName::Box:
                        if (std::abs(p.x) < 0.3 && std::abs(p.y) < 0.3 && std::abs(p.z) < 0.15) {
                            sigma = spec.density_scale;
                            set_dc(vol, cell, rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                                   rng.uniform(0.2, 0.8));
                        }
                        break;
                    case SceneName::TwoSpheres:
                        if (length(p - left) < small_radius) {
                            sigma = spec.density_scale;
                            set_dc(vol, cell, 0.8 + jitter, 0.3, 0.2);
                        } else if (length(p - right) < small_radius) {
                            sigma = spec.density_scale;
                            set_dc(vol, cell, 0.2, 0.4, 0.8 + jitter);
                        }
                        break;
                }
            }
    return vol;
}

}  // namespace deepboard
