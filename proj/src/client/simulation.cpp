#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// World offset that moves an object's box center onto its scene position.
Vec3 placement(const SceneBillboard& b, const TextureSource& source) {
    return b.center - source.bounds(b.object_id).center();
}

void check_extents(const SceneDescription& scene, const TextureSource& source) {
    for (const auto& b : scene.billboards) {
        if (!b.half_extents) continue;
        const Vec3 actual = source.bounds(b.object_id).half_extents();
        if (length(actual - *b.half_extents) > 1e-4)
            throw InvalidArgument("billboard " + std::to_string(b.object_id) +
                                  ": half extents do not match the object's box");
    }
}

struct PlacedShadow {
    Vec3 offset;
    ShadowMask mask;
};

std::vector<PlacedShadow> scene_shadows(const SceneDescription& scene, const TextureSource& source,
                                        const GroundTruth& truth) {
    std::vector<PlacedShadow> out;
    if (!scene.shadows) return out;
    for (const auto& b : scene.billboards) {
        const auto it = truth.proxies.find(b.object_id);
        if (it == truth.proxies.end() || it->second.empty()) continue;
        const Vec3 offset = placement(b, source);
        out.push_back({offset, shadow_mask(it->second, scene.light_dir, scene.ground_y - offset.y, 256)});
    }
    return out;
}

RenderedImage background_with(const SceneDescription& scene, const Camera& camera,
                              const std::vector<PlacedShadow>& shadows) {
    RenderedImage img(camera.width, camera.height, scene.background);
    if (shadows.empty()) return img;
    const Rgba dark{scene.background.r * 0.5f, scene.background.g * 0.5f, scene.background.b * 0.5f,
                    scene.background.a};
    for (int row = 0; row < camera.height; ++row)
        for (int col = 0; col < camera.width; ++col) {
            const Ray r = camera.pixel_ray(col, row);
            if (r.direction.y >= 0) continue;
            const double t = (scene.ground_y - r.origin.y) / r.direction.y;
            if (t <= 0) continue;
            const Vec3 p = r.at(t);
            for (const auto& s : shadows)
                if (s.mask.shadows(p.x - s.offset.x, p.z - s.offset.z)) {
                    img.set(col, row, dark);
                    break;
                }
        }
    return img;
}

double percentile95(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const size_t rank = static_cast<size_t>(std::ceil(0.95 * v.size()));
    return v[std::max<size_t>(rank, 1) - 1];
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

void summarize(FidelityReport& r) {
    std::vector<double> p, lat, ren;
    for (const auto& f : r.frames) {
        if (std::isfinite(f.psnr_db)) p.push_back(f.psnr_db);
        lat.push_back(f.latency_ms);
        ren.push_back(f.render_ms);
    }
    r.mean_psnr = mean(p);
    r.p95_psnr = percentile95(p);
    r.min_psnr = p.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(p.begin(), p.end());
    r.mean_latency_ms = mean(lat);
    r.p95_latency_ms = percentile95(lat);
    r.mean_render_ms = mean(ren);
}

}  // namespace

InProcessSource::InProcessSource(std::vector<CatalogEntry> catalog) : catalog_(std::move(catalog)) {}

const BillboardBackend& InProcessSource::backend(std::uint32_t object) const {
    for (const auto& e : catalog_)
        if (e.id == object) return *e.backend;
    throw InvalidArgument("unknown object id " + std::to_string(object));
}

const Aabb& InProcessSource::bounds(std::uint32_t object) const { return backend(object).bounds(); }

BillboardQuad InProcessSource::quad(std::uint32_t object, const Vec3& observer, int width,
                                    int height) const {
    return backend(object).billboard(observer, width, height);
}

TextureSource::Texture InProcessSource::fetch(std::uint32_t object, const Pose& observer,
                                              double time_s, int width, int height) {
    const auto start = Clock::now();
    const BillboardBackend& b = backend(object);
    const auto render_start = Clock::now();
    Texture t{b.render(observer, time_s, width, height)};
    t.render_ms = ms_since(render_start);
    t.latency_ms = ms_since(start);
    t.seq = ++seq_;
    return t;
}

GroundTruth GroundTruth::from_catalog(const std::vector<CatalogEntry>& catalog, bool with_proxies) {
    GroundTruth g;
    for (const auto& e : catalog) {
        const auto* ob = dynamic_cast<const OctreeBackend*>(e.backend.get());
        if (!ob) continue;
        auto octree = std::make_shared<const SparseOctree>(ob->octree());
        if (with_proxies) {
            const DenseVolume coarse = downsample_sigma(to_dense(*octree), kDefaultProxyResolution);
            g.proxies.emplace(e.id, extract_proxy(coarse, default_iso(coarse)));
        }
        g.volumes.emplace(e.id, std::move(octree));
    }
    return g;
}

RenderedImage render_background(const SceneDescription& scene, const Camera& camera,
                                const TextureSource& source, const GroundTruth& truth) {
    return background_with(scene, camera, scene_shadows(scene, source, truth));
}

std::optional<RenderedImage> render_ground_truth(const SceneDescription& scene, const Camera& camera,
                                                 const RenderedImage& background,
                                                 const GroundTruth& truth,
                                                 const RenderSettings& settings) {
    struct Placed {
        const SparseOctree* volume;
        Vec3 offset;
    };
    std::vector<Placed> placed;
    for (const auto& b : scene.billboards) {
        const auto it = truth.volumes.find(b.object_id);
        if (it == truth.volumes.end()) return std::nullopt;
        placed.push_back({it->second.get(), b.center - it->second->aabb().center()});
    }

    RenderedImage out = background;
    std::vector<std::pair<double, RayAccumulation>> hits;
    for (int row = 0; row < camera.height; ++row)
        for (int col = 0; col < camera.width; ++col) {
            const Ray ray = camera.pixel_ray(col, row);
            hits.clear();
            for (const Placed& p : placed) {
                const RayAccumulation acc =
                    accumulate_octree(*p.volume, {ray.origin - p.offset, ray.direction}, settings);
                if (acc.hit) hits.emplace_back(acc.t_enter, acc);
            }
            if (hits.empty()) continue;
            std::stable_sort(hits.begin(), hits.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            RayAccumulation total = hits[0].second;
            for (size_t i = 1; i < hits.size(); ++i) {
                const double through = 1.0 - total.alpha;
                for (int c = 0; c < 3; ++c) total.premultiplied[c] += through * hits[i].second.premultiplied[c];
                total.alpha += through * hits[i].second.alpha;
            }
            out.set(col, row, total.over_background(background.at(col, row)));
        }
    return out;
}

RenderedImage composite_scene(const SceneDescription& scene, const Camera& camera,
                              const RenderedImage& background, TextureSource& source,
                              double time_s, int texture_width, int texture_height,
                              FrameRecord* record) {
    std::vector<size_t> order(scene.billboards.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const Vec3 eye = camera.pose.position;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return length(scene.billboards[a].center - eye) > length(scene.billboards[b].center - eye);
    });

    RenderedImage image = background;
    for (size_t i : order) {
        const SceneBillboard& b = scene.billboards[i];
        const Vec3 offset = placement(b, source);
        const Pose local{eye - offset, camera.pose.orientation};
        BillboardQuad quad;
        try {
            quad = source.quad(b.object_id, local.position, texture_width, texture_height);
        } catch (const DegenerateObserver&) {
            continue;  // observer at the object center: nothing sensible to draw
        }
        const TextureSource::Texture tex =
            source.fetch(b.object_id, local, time_s, texture_width, texture_height);
        if (record) {
            record->latency_ms += tex.latency_ms;
            record->render_ms += tex.render_ms;
        }
        quad.center = quad.center + offset;
        image = composite_billboard(image, quad, tex.image, camera);
    }
    return image;
}

FidelityReport run_simulation(const SceneDescription& scene, const TrajectoryScript& script,
                              TextureSource& source, const GroundTruth& truth,
                              const SimulationOptions& options) {
    scene.validate();
    script.validate();
    check_extents(scene, source);
    const int tw = options.texture_width > 0 ? options.texture_width : options.width;
    const int th = options.texture_height > 0 ? options.texture_height : options.height;
    RenderSettings truth_settings = options.truth_settings;
    truth_settings.background = scene.background;
    if (options.dump_dir) std::filesystem::create_directories(*options.dump_dir);

    FidelityReport report;
    const auto shadows = scene_shadows(scene, source, truth);
    try {
        for (size_t i = 0; i < script.keys.size(); ++i) {
            const Keyframe& key = script.keys[i];
            Camera camera;
            camera.pose = key.pose;
            camera.fov_y = options.fov_y;
            camera.width = options.width;
            camera.height = options.height;
            camera.validate();

            FrameRecord rec;
            rec.index = i;
            rec.time_s = key.time_s;
            const RenderedImage bg = background_with(scene, camera, shadows);
            const RenderedImage composite = composite_scene(scene, camera, bg, source, key.time_s, tw, th, &rec);
            const auto direct = render_ground_truth(scene, camera, bg, truth, truth_settings);
            rec.psnr_db = direct ? psnr(composite, *direct) : std::numeric_limits<double>::quiet_NaN();
            if (options.dump_dir) {
                char name[64];
                std::snprintf(name, sizeof name, "frame_%04zu.png", i);
                write_png_file((std::filesystem::path(*options.dump_dir) / name).string(), composite);
                if (direct) {
                    std::snprintf(name, sizeof name, "truth_%04zu.png", i);
                    write_png_file((std::filesystem::path(*options.dump_dir) / name).string(), *direct);
                }
            }
            report.frames.push_back(rec);
        }
    } catch (const ConnectionLost& e) {
        report.partial = true;
        report.error = e.what();
    }
    summarize(report);
    return report;
}

std::string FidelityReport::to_text() const {
    std::ostringstream out;
    char line[256];
    for (const auto& f : frames) {
        std::snprintf(line, sizeof line, "frame %zu t=%.4f psnr_db=%.3f latency_ms=%.3f render_ms=%.3f\n",
                      f.index, f.time_s, f.psnr_db, f.latency_ms, f.render_ms);
        out << line;
    }
    std::snprintf(line, sizeof line,
                  "summary frames=%zu mean_psnr_db=%.3f p95_psnr_db=%.3f min_psnr_db=%.3f "
                  "mean_latency_ms=%.3f p95_latency_ms=%.3f mean_render_ms=%.3f partial=%d\n",
                  frames.size(), mean_psnr, p95_psnr, min_psnr, mean_latency_ms, p95_latency_ms,
                  mean_render_ms, partial ? 1 : 0);
    out << line;
    if (!error.empty()) out << "error " << error << '\n';
    return out.str();
}

}  // namespace deepboard
