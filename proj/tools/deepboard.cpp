// deepboard: command-line front end for asset generation, serving and evaluation.

#include <csignal>
#include <pthread.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"

#include "deepboard/assets.hpp"
#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/video_field.hpp"

using namespace deepboard;

namespace {

std::shared_ptr<const SparseOctree> load_octree(const std::string& path) {
    Asset a = load_asset(path);
    if (auto* d = std::get_if<DenseVolume>(&a)) return std::make_shared<const SparseOctree>(build_octree(*d));
    return std::make_shared<const SparseOctree>(std::move(std::get<SparseOctree>(a)));
}

DenseVolume load_dense(const std::string& path) {
    Asset a = load_asset(path);
    if (auto* d = std::get_if<DenseVolume>(&a)) return std::move(*d);
    return to_dense(std::get<SparseOctree>(a));
}

/// Roughly even directions over the sphere (golden-angle spiral).
std::vector<Vec3> spiral_directions(int count) {
    std::vector<Vec3> out;
    const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double y = count == 1 ? 0 : 1 - 2 * (i + 0.5) / count;
        const double r = std::sqrt(1 - y * y);
        out.push_back({r * std::sin(golden * i), y, r * std::cos(golden * i)});
    }
    return out;
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("expected host:port, got '" + s + "'");
    const int port = std::stoi(s.substr(colon + 1));
    if (port < 1 || port > 65535) throw InvalidArgument("port out of range in '" + s + "'");
    return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

int run_gen(const std::string& scene, std::uint32_t resolution, float density, std::uint64_t seed,
            bool octree, float prune, const std::string& out) {
    SceneSpec spec{parse_scene_name(scene), resolution, density, seed};
    DenseVolume v = generate_scene(spec);
    if (octree) {
        const SparseOctree o = build_octree(v, prune);
        save_asset(out, Asset{o});
        std::cout << "wrote " << out << " (octree, " << o.occupied_count() << " occupied cells)\n";
    } else {
        save_asset(out, Asset{v});
        std::cout << "wrote " << out << " (dense, " << v.cell_count() << " cells)\n";
    }
    return 0;
}

int run_mesh(const std::string& in, std::uint32_t resolution, std::optional<double> iso, const std::string& out) {
    DenseVolume v = load_dense(in);
    if (resolution > 0) v = downsample_sigma(v, resolution);
    const ProxyMesh mesh = extract_proxy(v, iso ? *iso : default_iso(v));
    const std::string text = to_obj(mesh);
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out);
        if (!f) throw IoError("cannot write " + out);
        f << text;
        std::cerr << "wrote " << out << " (" << mesh.vertices().size() << " vertices, "
                  << mesh.triangles().size() << " triangles)\n";
    }
    return 0;
}

int run_serve(const std::string& config_path, const std::string& viewer, int port) {
    ServerConfig cfg = config_path.empty() ? ServerConfig{} : load_server_config(config_path);
    if (config_path.empty()) apply_environment(cfg);
    if (!viewer.empty()) cfg.viewer_dir = viewer;
    if (port >= 0) cfg.port = static_cast<std::uint16_t>(port);

    // Signals are taken synchronously below; block them before any thread starts.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto catalog = load_catalog(cfg.asset_dir, cfg.settings);
    std::cerr << format_object_listing(catalog);
    Server server(cfg, std::move(catalog));
    server.start(&std::cout);
    std::cerr << "listening on " << cfg.address << ":" << server.port()
              << (cfg.viewer_dir ? " with viewer from " + *cfg.viewer_dir : std::string()) << "\n";
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    server.stop();
    return 0;
}

struct SimulateArgs {
    std::string scene, script, server, assets, dump, report;
    int width = 256, height = 256, texture = 0;
    double fov = 0.8;
    bool no_truth = false;
};

int run_simulate(const SimulateArgs& a) {
    const SceneDescription scene = load_scene(a.scene);
    const TrajectoryScript script = load_script(a.script);
    SimulationOptions opt;
    opt.width = a.width;
    opt.height = a.height;
    opt.fov_y = a.fov;
    opt.texture_width = opt.texture_height = a.texture;
    if (!a.dump.empty()) opt.dump_dir = a.dump;

    std::string asset_dir = a.assets;
    if (asset_dir.empty())
        if (const char* env = std::getenv("DEEPBOARD_ASSET_DIR")) asset_dir = env;

    std::vector<CatalogEntry> catalog;
    if (!asset_dir.empty()) catalog = load_catalog(asset_dir, {});
    GroundTruth truth;
    if (!a.no_truth && !catalog.empty()) truth = GroundTruth::from_catalog(catalog, scene.shadows);

    FidelityReport report;
    if (!a.server.empty()) {
        const auto [host, port] = split_host_port(a.server);
        RemoteSource source(host, port);
        report = run_simulation(scene, script, source, truth, opt);
    } else {
        if (catalog.empty()) throw InvalidArgument("simulate needs --assets (or DEEPBOARD_ASSET_DIR) or --server");
        InProcessSource source(catalog);
        report = run_simulation(scene, script, source, truth, opt);
    }
    const std::string text = report.to_text();
    std::cout << text;
    if (!a.report.empty()) {
        std::ofstream f(a.report);
        if (!f) throw IoError("cannot write " + a.report);
        f << text;
    }
    return report.partial ? 3 : 0;
}

int run_bench(const std::string& asset, int resolution, int frames, int threads) {
    const auto octree = load_octree(asset);
    const OctreeBackend backend(octree);
    const double d = 2.5 * octree->aabb().bounding_radius();
    std::vector<double> ms;
    const auto all = std::chrono::steady_clock::now();
    for (int i = 0; i < frames; ++i) {
        const double ang = 2 * std::numbers::pi * i / frames;
        const Vec3 eye = octree->aabb().center() + Vec3{d * std::sin(ang), 0.3 * d, d * std::cos(ang)};
        const BillboardQuad quad = backend.billboard(eye, resolution, resolution);
        const auto start = std::chrono::steady_clock::now();
        render_frame(*octree, billboard_camera(eye, quad, resolution, resolution), backend.settings(), threads);
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    }
    const double total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - all).count();
    std::sort(ms.begin(), ms.end());
    std::printf("frames=%d resolution=%d threads=%d fps=%.2f median_ms=%.3f min_ms=%.3f max_ms=%.3f\n",
                frames, resolution, threads, frames / total_s, ms[ms.size() / 2], ms.front(), ms.back());
    return 0;
}

int run_fixtures(int count, double radius, const std::string& out) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty() && out != "-") {
        file.open(out);
        if (!file) throw IoError("cannot write " + out);
        os = &file;
    }
    auto emit = [&](const Vec3& observer, const Vec3& center) {
        const BillboardFrame f = billboard_orientation(observer, center);
        nlohmann::json j;
        j["observer"] = vec_json(observer);
        j["center"] = vec_json(center);
        j["normal"] = vec_json(f.normal);
        j["up"] = vec_json(f.up);
        j["right"] = vec_json(f.right);
        *os << j.dump() << '\n';
    };
    const Vec3 center{0.25, -0.1, 0.5};
    // A horizontal orbit, a tilted orbit, then both poles.
    for (int i = 0; i < count; ++i) {
        const double a = 2 * std::numbers::pi * i / count;
        emit(center + Vec3{radius * std::sin(a), 0, radius * std::cos(a)}, center);
    }
    for (int i = 0; i < count; ++i) {
        const double a = 2 * std::numbers::pi * i / count;
        emit(center + Vec3{radius * std::sin(a) * 0.6, radius * 0.8, radius * std::cos(a) * 0.6}, center);
    }
    emit(center + Vec3{0, radius, 0}, center);
    emit(center + Vec3{0, -radius, 0}, center);
    return 0;
}

int run_field(const std::string& asset, const std::string& out, int timesteps, double dt, double spin,
              int views, int size, double distance) {
    const auto octree = load_octree(asset);
    RotationScript script;
    script.timesteps = timesteps;
    script.dt = dt;
    script.radians_per_second = spin;
    DemoFieldOptions opt;
    opt.viewpoints = spiral_directions(views);
    opt.width = opt.height = size;
    opt.capture_distance = distance;
    save_video_field(out, synthesize_demo_field(*octree, script, opt));
    std::cout << "wrote " << out << " (" << timesteps << " steps x " << views << " views)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volumetric billboard server, asset tools and evaluation client"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate an analytic test object as a .dbb asset");
    std::string gen_scene = "sphere", gen_out;
    std::uint32_t gen_res = 32;
    float gen_density = 5.0f, gen_prune = 0.0f;
    std::uint64_t gen_seed = 0;
    bool gen_octree = false;
    gen->add_option("--scene", gen_scene, "sphere, box, lobed-sphere or two-spheres")->capture_default_str();
    gen->add_option("--resolution", gen_res, "Cells per axis (power of two, 8..256)")->capture_default_str();
    gen->add_option("--density", gen_density, "Density inside the object")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed for per-cell colors")->capture_default_str();
    gen->add_flag("--octree", gen_octree, "Store as a sparse octree instead of a dense grid");
    gen->add_option("--prune", gen_prune, "Octree prune threshold on density")->capture_default_str();
    gen->add_option("-o,--output", gen_out, "Output file")->required();

    auto* mesh = app.add_subcommand("mesh", "Extract the proxy mesh of an asset as OBJ text");
    std::string mesh_in, mesh_out;
    std::uint32_t mesh_res = kDefaultProxyResolution;
    std::optional<double> mesh_iso;
    mesh->add_option("asset", mesh_in, "Input .dbb file")->required()->check(CLI::ExistingFile);
    mesh->add_option("--resolution", mesh_res, "Downsample density to this grid first; 0 keeps the source grid")
        ->capture_default_str();
    mesh->add_option("--iso", mesh_iso, "Iso level (default half the peak density)");
    mesh->add_option("-o,--output", mesh_out, "Output file (stdout when omitted)");

    auto* serve = app.add_subcommand("serve", "Serve assets over HTTP and websocket");
    std::string serve_config, serve_viewer;
    int serve_port = -1;
    serve->add_option("--config", serve_config, "key = value config file")->check(CLI::ExistingFile);
    serve->add_option("--with-viewer", serve_viewer, "Also serve the static viewer from this directory")
        ->check(CLI::ExistingDirectory);
    serve->add_option("--port", serve_port, "Override the configured port");

    auto* sim = app.add_subcommand("simulate", "Replay an observer script and score fidelity");
    SimulateArgs sa;
    sim->add_option("--scene", sa.scene, "Scene file")->required()->check(CLI::ExistingFile);
    sim->add_option("--script", sa.script, "Trajectory script")->required()->check(CLI::ExistingFile);
    sim->add_option("--server", sa.server, "host:port of a running server (in-process when omitted)");
    sim->add_option("--assets", sa.assets, "Asset directory for in-process rendering and ground truth");
    sim->add_option("--dump", sa.dump, "Write per-frame composite and ground-truth PNGs here");
    sim->add_option("--report", sa.report, "Also write the report to this file");
    sim->add_option("--width", sa.width)->capture_default_str();
    sim->add_option("--height", sa.height)->capture_default_str();
    sim->add_option("--fov", sa.fov, "Vertical field of view in radians")->capture_default_str();
    sim->add_option("--texture", sa.texture, "Texture side requested per billboard (0: view size)");
    sim->add_flag("--no-truth", sa.no_truth, "Skip the direct render; PSNR is reported as nan");

    auto* bench = app.add_subcommand("bench", "Time billboard renders of an asset");
    std::string bench_in;
    int bench_res = 128, bench_frames = 50, bench_threads = 1;
    bench->add_option("asset", bench_in, "Input .dbb file")->required()->check(CLI::ExistingFile);
    bench->add_option("--resolution", bench_res)->capture_default_str();
    bench->add_option("--frames", bench_frames)->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--threads", bench_threads)->capture_default_str()->check(CLI::PositiveNumber);

    auto* fix = app.add_subcommand("fixtures", "Export billboard orientation fixtures as JSON lines");
    int fix_count = 16;
    double fix_radius = 3.0;
    std::string fix_out;
    fix->add_option("--count", fix_count, "Angles per orbit")->capture_default_str()->check(CLI::PositiveNumber);
    fix->add_option("--radius", fix_radius)->capture_default_str();
    fix->add_option("-o,--output", fix_out, "Output file (stdout when omitted)");

    auto* field = app.add_subcommand("field", "Record a spinning asset as a demo video field");
    std::string field_in, field_out;
    int field_steps = 8, field_views = 16, field_size = 64;
    double field_dt = 0.1, field_spin = 1.0, field_distance = 2.0;
    field->add_option("asset", field_in, "Input .dbb file")->required()->check(CLI::ExistingFile);
    field->add_option("-o,--output", field_out, "Output directory")->required();
    field->add_option("--timesteps", field_steps)->capture_default_str();
    field->add_option("--dt", field_dt, "Seconds between timesteps")->capture_default_str();
    field->add_option("--spin", field_spin, "Radians per second about +y")->capture_default_str();
    field->add_option("--views", field_views, "Viewpoints on a spiral")->capture_default_str();
    field->add_option("--size", field_size, "Frame side in pixels")->capture_default_str();
    field->add_option("--distance", field_distance, "Capture distance")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return run_gen(gen_scene, gen_res, gen_density, gen_seed, gen_octree, gen_prune, gen_out);
        if (*mesh) return run_mesh(mesh_in, mesh_res, mesh_iso, mesh_out);
        if (*serve) return run_serve(serve_config, serve_viewer, serve_port);
        if (*sim) return run_simulate(sa);
        if (*bench) return run_bench(bench_in, bench_res, bench_frames, bench_threads);
        if (*fix) return run_fixtures(fix_count, fix_radius, fix_out);
        if (*field)
            return run_field(field_in, field_out, field_steps, field_dt, field_spin, field_views, field_size,
                             field_distance);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
