// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "deepboard/assets.hpp"
#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/proxy.hpp"
#include "deepboard/sh.hpp"
#include "deepboard/video_field.hpp"
#include "oracles.hpp"

using namespace deepboard;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { Pass, Report, Fail };

struct Outcome {
    Verdict verdict = Verdict::Pass;
    std::string detail;
};

/// Collects failed checks of one criterion; the first few are kept for the report.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) first_ += (first_.empty() ? "" : "; ") + what;
    }
    bool ok() const { return failures_ == 0; }
    Outcome outcome(const std::string& summary) const {
        if (ok()) return {Verdict::Pass, summary};
        return {Verdict::Fail, summary + " | " + std::to_string(failures_) + " failed: " + first_};
    }

private:
    int failures_ = 0;
    std::string first_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

const SceneName kScenes[] = {SceneName::Sphere, SceneName::Box, SceneName::LobedSphere, SceneName::TwoSpheres};

// 1. Octree and dense renders agree.
Outcome octree_matches_dense() {
    const auto start = Clock::now();
    Checks c;
    double worst = 0;
    for (SceneName name : kScenes) {
        const DenseVolume v = generate_scene({name, 32});
        const SparseOctree o = build_octree(v, 0.0f);
        Camera cam;
        cam.pose = Pose::look_at({1.3, 0.8, 1.6}, {});
        cam.fov_y = 0.9;
        cam.width = cam.height = 128;
        const double frame = oracle::max_image_diff(render_frame(v, cam, {}), render_frame(o, cam, {}));
        worst = std::max(worst, frame);
        c.expect(frame <= 1e-5, std::string(to_string(name)) + " frame diff " + fmt("%.3g", frame));
        for (const Ray& r : oracle::random_rays(100, 1000 + static_cast<int>(name), 2.0)) {
            const double d = oracle::max_channel_diff(render_ray_dense(v, r, {}), render_ray_octree(o, r, {}));
            worst = std::max(worst, d);
            c.expect(d <= 1e-5, std::string(to_string(name)) + " ray diff " + fmt("%.3g", d));
        }
    }
    const double secs = seconds_since(start);
    c.expect(secs < 60, "runtime " + fmt("%.1f s", secs));
    return c.outcome("4 scenes at 32^3, 128x128 + 100 rays each, max diff " + fmt("%.3g", worst) + ", " +
                     fmt("%.2f s", secs));
}

// 2. Homogeneous cube against the closed form.
Outcome homogeneous_cube() {
    DenseVolume v(Aabb{}, {4, 4, 4});
    for (auto& s : v.sigma_data()) s = 1.0f;  // unit path length, zero SH
    const SparseOctree o = build_octree(v);
    const double alpha = 1.0 - std::exp(-1.0);
    Checks c;
    double worst = 0;
    for (const Ray& r : {Ray{{0, 0, 3}, {0, 0, -1}}, Ray{{0.3, -0.2, -4}, {0, 0, 1}}, Ray{{5, 0.1, 0.4}, {-1, 0, 0}},
                         Ray{{0.1, 3, -0.3}, {0, -1, 0}}}) {
        for (const Rgba& px : {render_ray_dense(v, r, {}), render_ray_octree(o, r, {})}) {
            const double e = std::max({std::abs(px.a - alpha), std::abs(px.r - 0.5), std::abs(px.g - 0.5),
                                       std::abs(px.b - 0.5)});
            worst = std::max(worst, e);
            c.expect(e <= 1e-4, "error " + fmt("%.3g", e));
        }
    }
    return c.outcome("alpha target " + fmt("%.6f", alpha) + ", color 0.5, max error " + fmt("%.3g", worst));
}

// 3. SH constant and orthonormality.
Outcome sh_basis() {
    Checks c;
    const double c0 = eval_sh_basis({0, 0, 1})[0];
    c.expect(std::abs(c0 - 0.28209479) <= 1e-7, "C0 = " + fmt("%.10f", c0));
    c.expect(std::abs(c0 - 0.5 / std::sqrt(std::numbers::pi)) <= 1e-12, "C0 vs 1/(2 sqrt(pi))");

    // 10^6 samples: 1000 x 1000 jittered strata, uniform in (cos theta, phi).
    constexpr int n = 1000;
    std::mt19937_64 rng(2024);
    std::array<std::array<double, 9>, 9> gram{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double z = -1.0 + 2.0 * (i + oracle::uniform(rng, 0, 1)) / n;
            const double phi = 2.0 * std::numbers::pi * (j + oracle::uniform(rng, 0, 1)) / n;
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            const auto b = eval_sh_basis_unchecked({s * std::cos(phi), s * std::sin(phi), z});
            for (int a = 0; a < 9; ++a)
                for (int k = a; k < 9; ++k) gram[a][k] += b[a] * b[k];
        }
    const double w = 4.0 * std::numbers::pi / (double(n) * n);
    double worst = 0;
    for (int a = 0; a < 9; ++a)
        for (int k = a; k < 9; ++k) worst = std::max(worst, std::abs(gram[a][k] * w - (a == k ? 1.0 : 0.0)));
    c.expect(worst <= 5e-3, "Gram deviation " + fmt("%.3g", worst));
    return c.outcome("C0 " + fmt("%.9f", c0) + ", Gram max deviation " + fmt("%.3g", worst) + " at 1e6 samples");
}

// 4. Billboard composite against the direct render over an orbit.
Outcome billboard_fidelity() {
    Checks c;
    std::ostringstream summary;
    double worst = kPsnrCap;
    for (SceneName name : kScenes) {
        const std::vector<CatalogEntry> catalog{
            {0, std::string(to_string(name)),
             std::make_shared<const OctreeBackend>(
                 std::make_shared<const SparseOctree>(build_octree(generate_scene({name, 32}))))}};
        const GroundTruth truth = GroundTruth::from_catalog(catalog, false);
        SceneDescription scene;
        scene.billboards.push_back({0, {}, std::nullopt});

        const double radius = 2.0, height = 0.6, d = std::hypot(radius, height);
        const double r = catalog[0].backend->bounds().bounding_radius();
        SimulationOptions opt;
        opt.width = opt.height = 256;
        opt.fov_y = 2 * std::atan(r / std::sqrt(d * d - r * r));  // observer camera = billboard camera
        const auto script = TrajectoryScript::orbit(16, radius, height);

        std::vector<std::vector<double>> by_res;
        for (int tex : {256, 128, 64}) {
            opt.texture_width = opt.texture_height = tex;
            InProcessSource source(catalog);
            const FidelityReport rep = run_simulation(scene, script, source, truth, opt);
            std::vector<double> p;
            for (const auto& f : rep.frames) p.push_back(f.psnr_db);
            c.expect(p.size() == 16, std::string(to_string(name)) + " frame count");
            by_res.push_back(p);
        }
        for (size_t i = 0; i < by_res[0].size(); ++i) {
            worst = std::min(worst, by_res[0][i]);
            c.expect(by_res[0][i] >= 40, std::string(to_string(name)) + " pose " + std::to_string(i) + " " +
                                             fmt("%.2f dB", by_res[0][i]));
            c.expect(by_res[0][i] >= by_res[1][i] && by_res[1][i] >= by_res[2][i],
                     std::string(to_string(name)) + " pose " + std::to_string(i) + " not monotone");
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return s / v.size();
        };
        summary << to_string(name) << " " << fmt("%.1f", mean(by_res[0])) << "/" << fmt("%.1f", mean(by_res[1]))
                << "/" << fmt("%.1f", mean(by_res[2])) << " ";
    }
    return c.outcome("min PSNR at 256: " + fmt("%.2f dB", worst) + "; mean dB at 256/128/64: " + summary.str());
}

// 5. Render time budget.
Outcome render_budget() {
    const OctreeBackend backend(
        std::make_shared<const SparseOctree>(build_octree(generate_scene({SceneName::Sphere, 32}))));
    std::vector<double> ms;
    for (int i = 0; i < 41; ++i) {
        const double a = 2 * std::numbers::pi * i / 41;
        const Pose eye = Pose::look_at({2 * std::sin(a), 0.5, 2 * std::cos(a)}, {});
        const auto t = Clock::now();
        backend.render(eye, 0, 128, 128);
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t).count());
    }
    std::sort(ms.begin(), ms.end());
    const double median = ms[ms.size() / 2];
    const std::string detail = "median " + fmt("%.2f ms", median) + " over 41 renders (budget 33 ms)";
    if (median <= 33) return {Verdict::Pass, detail};
    if (median <= 66) return {Verdict::Report, detail + ", over budget but within 2x"};
    return {Verdict::Fail, detail + ", beyond 2x budget"};
}

// 6. Freshness over a live server and isolation under concurrent load.
Outcome freshness_and_isolation() {
    Checks c;
    const auto backend = std::make_shared<const OctreeBackend>(
        std::make_shared<const SparseOctree>(build_octree(generate_scene({SceneName::LobedSphere, 32}))));
    ServerConfig cfg;
    cfg.port = 0;
    cfg.asset_dir = "in-memory";
    cfg.metrics = false;
    Server server(cfg, {{0, "lobed", backend}});
    server.start();
    const auto port = server.port();

    auto request = [](std::uint64_t seq, const Vec3& eye, int size) {
        PoseRequest r;
        r.seq = seq;
        r.observer_pos = {float(eye.x), float(eye.y), float(eye.z)};
        r.width = r.height = static_cast<std::uint16_t>(size);
        return r;
    };
    auto fresh_pixels = [&](const PoseRequest& r) {
        return make_frame_response(0, r.seq, backend->render(r.pose(), 0, r.width, r.height), 0).payload;
    };

    std::uint64_t last = 0;
    size_t received = 0;
    try {
        StreamClient client("127.0.0.1", port, 0);
        for (std::uint64_t seq = 1; seq <= 100; ++seq)
            client.send(request(seq, {2 * std::sin(seq * 0.07), 0.3, 2 * std::cos(seq * 0.07)}, 64));
        std::uint64_t prev = 0;
        while (last < 100) {
            const FrameResponse f = client.receive();
            c.expect(f.seq > prev, "seq went backwards");
            prev = last = f.seq;
            ++received;
        }
    } catch (const Error& e) {
        c.expect(false, std::string("burst: ") + e.what());
    }
    c.expect(last == 100, "final seq " + std::to_string(last));

    constexpr int kClients = 4;
    std::vector<std::string> errors(kClients);
    std::vector<int> compared(kClients, 0);
    std::vector<std::thread> threads;
    for (int i = 0; i < kClients; ++i)
        threads.emplace_back([&, i] {
            try {
                StreamClient client("127.0.0.1", port, 0);
                auto eye = [i](std::uint64_t seq) {
                    const double a = i * 1.4 + seq * 0.06;
                    return Vec3{2.2 * std::sin(a), 0.25 * i - 0.3, 2.2 * std::cos(a)};
                };
                std::uint64_t got = 0;
                // Paced so that renders of different sessions interleave.
                for (std::uint64_t seq = 1; seq <= 30; ++seq) {
                    client.send(request(seq, eye(seq), 32 + 8 * i));
                    std::this_thread::sleep_for(std::chrono::milliseconds(3));
                }
                while (got < 30) {
                    const FrameResponse f = client.receive();
                    got = f.seq;
                    if (f.payload != fresh_pixels(request(f.seq, eye(f.seq), 32 + 8 * i)) ||
                        f.width != 32 + 8 * i)
                        errors[i] = "frame " + std::to_string(f.seq) + " differs from a fresh render";
                    ++compared[i];
                }
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        });
    for (auto& t : threads) t.join();
    int total = 0;
    for (int i = 0; i < kClients; ++i) {
        c.expect(errors[i].empty(), "client " + std::to_string(i) + ": " + errors[i]);
        total += compared[i];
    }
    server.stop();
    return c.outcome("burst of 100 ended at seq " + std::to_string(last) + " after " + std::to_string(received) +
                     " frames; " + std::to_string(total) + " concurrent frames byte-compared across " +
                     std::to_string(kClients) + " sessions");
}

// 7. Proxy mesh accuracy, collision queries and shadow area.
Outcome proxy_accuracy() {
    Checks c;
    const DenseVolume v = generate_scene({SceneName::Sphere, 64});
    const ProxyMesh m = extract_proxy(v, default_iso(v));
    const double voxel = 1.0 / 64, radius = kSphereRadiusFraction;
    double worst = 0;
    for (const Vec3& p : m.vertices()) worst = std::max(worst, std::abs(length(p) - radius));
    c.expect(!m.empty() && worst <= 1.5 * voxel, "radial error " + fmt("%.3g voxels", worst / voxel));

    auto tri = [&](std::uint32_t t, int k) { return m.vertices()[m.triangles()[t][k]]; };
    std::mt19937_64 rng(7);
    int ray_hits = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 o = oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 1.2);
        const Ray r{o, normalize(oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 0.45) - o)};
        double best = std::numeric_limits<double>::infinity();
        std::int64_t best_t = -1;
        for (std::uint32_t t = 0; t < m.triangles().size(); ++t)
            if (auto h = intersect_triangle(r, tri(t, 0), tri(t, 1), tri(t, 2)); h && *h < best) best = *h, best_t = t;
        const ContactReport got = ray_hit(m, r);
        c.expect(got.hit == (best_t >= 0) && (!got.hit || (got.t == best && got.triangle == best_t)),
                 "ray " + std::to_string(i));
        ray_hits += got.hit;
    }
    int sphere_hits = 0;
    for (int i = 0; i < 500; ++i) {
        const Vec3 center = oracle::random_unit(rng) * oracle::uniform(rng, 0.0, 0.7);
        const double rad = oracle::uniform(rng, 0.01, 0.25);
        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t t = 0; t < m.triangles().size(); ++t)
            best = std::min(best, length(center - oracle::closest_on_triangle(center, tri(t, 0), tri(t, 1), tri(t, 2))));
        const ContactReport got = sphere_contact(m, center, rad);
        c.expect(got.hit == (best < rad) && (!got.hit || std::abs(got.t - (rad - best)) <= 1e-9),
                 "sphere " + std::to_string(i));
        sphere_hits += got.hit;
    }
    const ShadowMask s = shadow_mask(m, {0, -1, 0}, -1.0, 256);
    const double disk = std::numbers::pi * radius * radius;
    const double rel = std::abs(s.covered_area() - disk) / disk;
    c.expect(rel <= 0.1, "shadow area off by " + fmt("%.1f%%", rel * 100));
    return c.outcome("radial error " + fmt("%.2f voxels", worst / voxel) + "; 1000 rays (" +
                     std::to_string(ray_hits) + " hits) and 500 spheres (" + std::to_string(sphere_hits) +
                     " contacts) equal brute force; shadow area off by " + fmt("%.2f%%", rel * 100));
}

// 8. Video-field viewpoint selection and playback.
Outcome world_billboard() {
    Checks c;
    std::mt19937_64 rng(88);
    std::vector<VideoSample> samples;
    for (int i = 0; i < 64; ++i) samples.push_back({0.0, oracle::random_unit(rng), RenderedImage(2, 2)});
    const VideoField vf = build_video_field(samples);
    for (int i = 0; i < 200; ++i) {
        const Vec3 d = oracle::random_unit(rng);
        int best = 0;
        for (int k = 1; k < vf.viewpoint_count(); ++k)
            if (dot(d, vf.viewpoints[k]) > dot(d, vf.viewpoints[best])) best = k;
        c.expect(nearest_viewpoint(vf, d) == best, "direction " + std::to_string(i));
    }

    const SparseOctree octree = build_octree(generate_scene({SceneName::LobedSphere, 32}));
    DemoFieldOptions opt;
    for (int i = 0; i < 6; ++i) {
        const double a = 2 * std::numbers::pi * i / 6;
        opt.viewpoints.push_back(normalize(Vec3{std::sin(a), 0.3 * (i % 2 ? 1 : -1), std::cos(a)}));
    }
    opt.width = opt.height = 48;
    const RotationScript spin{{0, 1, 0}, 1.5, 6, 0.2};
    const VideoField field = synthesize_demo_field(octree, spin, opt);
    const Vec3 center = octree.aabb().center();
    int frames = 0;
    for (int t = 0; t < spin.timesteps; ++t)
        for (int k = 0; k < field.viewpoint_count(); ++k) {
            // Spinning the object is the same as counter-rotating the camera about its center.
            const Quat inv = spin.rotation_at(t * spin.dt).conjugate();
            Camera cam = capture_camera(octree.aabb(), opt.viewpoints[k], opt.capture_distance, 48, 48);
            cam.pose.position = center + inv.rotate(cam.pose.position - center);
            cam.pose.orientation = (inv * cam.pose.orientation).normalized();
            const RenderedImage& played = sample_video_field(field, t * spin.dt, opt.viewpoints[k]);
            c.expect(played.to_rgba8() == render_frame(octree, cam, opt.settings).to_rgba8(),
                     "t=" + std::to_string(t) + " v=" + std::to_string(k));
            ++frames;
        }
    return c.outcome("200 directions match brute force over " + std::to_string(vf.viewpoint_count()) +
                     " viewpoints; " + std::to_string(frames) + " playback frames byte-equal to fresh renders");
}

// 9. Persistence and wire round trips, corrupt input rejected.
Outcome round_trips() {
    Checks c;
    int trips = 0, rejections = 0;
    for (SceneName name : kScenes) {
        const DenseVolume v = generate_scene({name, 16, 5.0f, 11});
        const Asset assets[] = {Asset{v}, Asset{build_octree(v)}};
        for (const Asset& a : assets) {
            const auto bytes = serialize_asset(a);
            const Asset back = deserialize_asset(bytes);
            c.expect(back == a && serialize_asset(back) == bytes, std::string(to_string(name)) + " asset");
            ++trips;
        }
    }
    auto rejects = [&](const std::function<void()>& fn, const std::string& what) {
        bool threw = false;
        try {
            fn();
        } catch (const Error&) {
            threw = true;
        }
        c.expect(threw, what + " accepted");
        ++rejections;
    };
    const auto bytes = serialize_asset(Asset{generate_scene({SceneName::Sphere, 8})});
    auto bad = bytes;
    std::memcpy(bad.data(), "XXXX", 4);
    rejects([&] { deserialize_asset(bad); }, "bad magic");
    bad = bytes;
    bad[4] = 0x7f;
    rejects([&] { deserialize_asset(bad); }, "unknown version");
    const size_t sigma_at = 4 + 2 + 1 + 24 + 12;
    rejects([&] { deserialize_asset({bytes.data(), sigma_at + 512 * 2}); }, "half sigma array");
    bad = bytes;
    bad.push_back(0);
    rejects([&] { deserialize_asset(bad); }, "trailing bytes");

    PoseRequest p;
    p.object_id = 5;
    p.seq = 0x0102030405060708ull;
    p.observer_pos = {0.25f, -1.5f, 3.0f};
    p.observer_quat = {0.5f, 0.5f, -0.5f, 0.5f};
    p.width = 640;
    p.height = 480;
    p.time_s = 12.75f;
    const auto pb = encode_pose_request(p);
    c.expect(pb.size() == kPoseRequestSize && decode_pose_request(pb) == p &&
                 encode_pose_request(decode_pose_request(pb)) == pb,
             "pose request");
    ++trips;
    Camera cam;
    cam.pose = Pose::look_at({1, 1, 2}, {});
    cam.width = 96;
    cam.height = 64;
    const RenderedImage img = render_frame(build_octree(generate_scene({SceneName::Box, 16})), cam, {});
    for (size_t threshold : {size_t{0}, kDefaultPngThreshold}) {
        const FrameResponse f = make_frame_response(5, 77, img, 2.5f, threshold);
        const auto fb = encode_frame_response(f);
        const FrameResponse back = decode_frame_response(fb);
        c.expect(back == f && encode_frame_response(back) == fb && frame_pixels(back) == img.to_rgba8(),
                 threshold == 0 ? "png frame" : "raw frame");
        ++trips;
    }
    auto pbad = pb;
    pbad[0] ^= 0xff;
    rejects([&] { decode_pose_request(pbad); }, "pose magic");
    rejects([&] { decode_pose_request({pb.data(), pb.size() - 1}); }, "short pose");
    pbad = pb;
    pbad.push_back(1);
    rejects([&] { decode_pose_request(pbad); }, "long pose");
    const auto fb = encode_frame_response(make_frame_response(1, 2, RenderedImage(16, 16, {1, 0, 0, 1}), 1));
    rejects([&] { decode_frame_response({fb.data(), fb.size() - 5}); }, "short frame");
    auto fbad = fb;
    fbad[2 + 4 + 8] = 4;  // width below the minimum
    rejects([&] { decode_frame_response(fbad); }, "tiny width");
    return c.outcome(std::to_string(trips) + " bitwise round trips, " + std::to_string(rejections) +
                     " corrupt inputs rejected");
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"octree-vs-dense", octree_matches_dense},
        {"homogeneous-cube", homogeneous_cube},
        {"sh-basis", sh_basis},
        {"billboard-fidelity", billboard_fidelity},
        {"render-budget", render_budget},
        {"freshness-isolation", freshness_and_isolation},
        {"proxy-accuracy", proxy_accuracy},
        {"world-billboard", world_billboard},
        {"round-trips", round_trips},
    };
    int failed = 0, index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Verdict::Fail, std::string("threw: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::Fail ? "FAIL" : "PASS";
        std::printf("%s %d %s: %s%s [%.1f s]\n", tag, index, name, o.detail.c_str(),
                    o.verdict == Verdict::Report ? " (reported)" : "", seconds_since(start));
        std::fflush(stdout);
        failed += o.verdict == Verdict::Fail;
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
