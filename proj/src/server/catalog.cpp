#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "deepboard/assets.hpp"
#include "deepboard/errors.hpp"
#include "deepboard/server.hpp"
#include "deepboard/video_field.hpp"

namespace deepboard {

namespace fs = std::filesystem;

std::vector<CatalogEntry> load_catalog(const std::string& asset_dir, const RenderSettings& settings) {
    std::error_code ec;
    if (!fs::is_directory(asset_dir, ec)) throw IoError("asset directory not found: " + asset_dir);

    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(asset_dir)) {
        const fs::path& p = entry.path();
        if (entry.is_regular_file() && p.extension() == ".dbb") paths.push_back(p);
        else if (entry.is_directory() && fs::exists(p / "manifest.txt")) paths.push_back(p);
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw IoError("no assets in " + asset_dir);

    std::vector<CatalogEntry> out;
    for (const fs::path& p : paths) {
        CatalogEntry e;
        e.id = static_cast<std::uint32_t>(out.size());
        if (fs::is_directory(p)) {
            e.name = p.filename().string();
            e.backend = std::make_shared<VideoFieldBackend>(
                std::make_shared<const VideoField>(load_video_field(p.string())));
        } else {
            e.name = p.stem().string();
            Asset asset = load_asset(p.string());
            auto octree = std::holds_alternative<SparseOctree>(asset)
                              ? std::make_shared<const SparseOctree>(std::get<SparseOctree>(std::move(asset)))
                              : std::make_shared<const SparseOctree>(build_octree(std::get<DenseVolume>(asset)));
            e.backend = std::make_shared<OctreeBackend>(std::move(octree), settings);
        }
        // The listing is whitespace separated.
        std::replace_if(e.name.begin(), e.name.end(), [](unsigned char c) { return std::isspace(c); }, '_');
        out.push_back(std::move(e));
    }
    return out;
}

std::string format_object_listing(const std::vector<CatalogEntry>& catalog) {
    std::ostringstream out;
    out.precision(9);
    for (const auto& e : catalog) {
        const Aabb& b = e.backend->bounds();
        out << e.id << ' ' << e.name;
        for (float v : b.min) out << ' ' << v;
        for (float v : b.max) out << ' ' << v;
        out << ' ' << to_string(e.backend->kind());
        if (const auto* vf = dynamic_cast<const VideoFieldBackend*>(e.backend.get()))
            out << ' ' << vf->field().capture_distance;
        out << '\n';
    }
    return out.str();
}

std::vector<ObjectInfo> parse_object_listing(const std::string& text) {
    std::vector<ObjectInfo> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream parts(line);
        ObjectInfo o;
        parts >> o.id >> o.name;
        for (float& v : o.aabb.min) parts >> v;
        for (float& v : o.aabb.max) parts >> v;
        parts >> o.kind;
        if (!parts || o.kind.empty()) throw InvalidArgument("malformed object listing line: " + line);
        if (o.kind == "video-field" && !(parts >> o.capture_distance))
            throw InvalidArgument("video-field listing line lacks a capture distance: " + line);
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace deepboard
