#include <fstream>
#include <iterator>

#include "deepboard/assets.hpp"
#include "deepboard/bytes.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

constexpr char kMagic[4] = {'D', 'B', 'B', '1'};

enum NodeTag : std::uint8_t { kInternal = 0, kEmpty = 1, kOccupied = 2 };

using Reader = ByteReader<TruncatedFile>;

void write_header(ByteWriter& w, AssetKind kind, const Aabb& box) {
    w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    w.u16(kAssetVersion);
    w.u8(static_cast<std::uint8_t>(kind));
    for (float v : box.min) w.f32(v);
    for (float v : box.max) w.f32(v);
}

void write_octree_node(ByteWriter& w, const SparseOctree& o, std::int32_t index) {
    const SparseOctree::Node& n = o.nodes()[index];
    if (n.is_internal()) {
        w.u8(kInternal);
        for (int c = 0; c < 8; ++c) write_octree_node(w, o, n.first_child + c);
    } else if (n.leaf < 0) {
        w.u8(kEmpty);
    } else {
        w.u8(kOccupied);
        w.f32(o.leaf_sigma(n.leaf));
        const float* sh = o.leaf_sh(n.leaf);
        for (int i = 0; i < kShPerCell; ++i) w.f32(sh[i]);
    }
}

GridSize read_resolution(Reader& r) {
    GridSize res{};
    for (auto& v : res) v = r.u32("resolution");
    return res;
}

DenseVolume read_dense(Reader& r, const Aabb& box) {
    const GridSize res = read_resolution(r);
    const std::uint64_t cells = std::uint64_t{res[0]} * res[1] * res[2];
    if (cells == 0 || cells > (std::uint64_t{1} << 30))
        throw InvalidArgument("dense resolution out of range");
    r.require(cells * 4, "sigma array");
    std::vector<float> sigma(cells);
    for (auto& s : sigma) s = r.f32("sigma array");
    r.require(cells * kShPerCell * 4, "sh array");
    std::vector<float> sh(cells * kShPerCell);
    for (auto& s : sh) s = r.f32("sh array");
    return DenseVolume(box, res, std::move(sigma), std::move(sh));
}

SparseOctree read_octree(Reader& r, const Aabb& box) {
    const int depth = r.u8("max_depth");
    if (depth < 1 || depth > kMaxOctreeDepth)
        throw InvalidArgument("octree max_depth " + std::to_string(depth) + " out of range");
    const GridSize res = read_resolution(r);

    std::vector<SparseOctree::Node> nodes(1);
    std::vector<float> sigma;
    std::vector<float> sh;
    // Mirrors build_octree's allocation order so a reload is bitwise equal.
    auto read_node = [&](auto&& self, std::int32_t ni, int level) -> void {
        const size_t at = r.offset();
        const std::uint8_t tag = r.u8("node tag");
        switch (tag) {
            case kEmpty: return;
            case kOccupied:
                nodes[ni].leaf = static_cast<std::int32_t>(sigma.size());
                sigma.push_back(r.f32("leaf sigma"));
                for (int i = 0; i < kShPerCell; ++i) sh.push_back(r.f32("leaf sh"));
                return;
            case kInternal: {
                if (level >= depth)
                    throw InvalidArgument("internal node below max_depth at byte offset " +
                                          std::to_string(at));
                const auto first = static_cast<std::int32_t>(nodes.size());
                nodes.resize(nodes.size() + 8);
                nodes[ni].first_child = first;
                for (int c = 0; c < 8; ++c) self(self, first + c, level + 1);
                return;
            }
            default:
                throw InvalidArgument("unknown node tag " + std::to_string(tag) +
                                      " at byte offset " + std::to_string(at));
        }
    };
    read_node(read_node, 0, 0);
    return SparseOctree(box, res, depth, std::move(nodes), std::move(sigma), std::move(sh));
}

}  // namespace

AssetKind kind_of(const Asset& asset) {
    return std::holds_alternative<DenseVolume>(asset) ? AssetKind::Dense : AssetKind::Octree;
}

const Aabb& aabb_of(const Asset& asset) {
    return std::visit([](const auto& a) -> const Aabb& { return a.aabb(); }, asset);
}

std::vector<std::uint8_t> serialize_asset(const Asset& asset) {
    ByteWriter w;
    write_header(w, kind_of(asset), aabb_of(asset));
    if (const auto* dense = std::get_if<DenseVolume>(&asset)) {
        for (auto v : dense->resolution()) w.u32(v);
        w.buffer().reserve(w.buffer().size() + (dense->sigma_data().size() + dense->sh_data().size()) * 4);
        for (float s : dense->sigma_data()) w.f32(s);
        for (float s : dense->sh_data()) w.f32(s);
    } else {
        const auto& oct = std::get<SparseOctree>(asset);
        w.u8(static_cast<std::uint8_t>(oct.max_depth()));
        for (auto v : oct.resolution()) w.u32(v);
        write_octree_node(w, oct, 0);
    }
    return w.take();
}

Asset deserialize_asset(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.bytes(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        throw BadMagic("expected \"DBB1\" at byte offset 0, found \"" +
                       std::string(magic.begin(), magic.end()) + "\"");
    const std::uint16_t version = r.u16("version");
    if (version != kAssetVersion)
        throw UnsupportedVersion("version " + std::to_string(version) + " at byte offset 4 (" +
                                 "supported: " + std::to_string(kAssetVersion) + ")");
    const std::uint8_t kind = r.u8("kind");
    if (kind > 1)
        throw InvalidArgument("unknown asset kind " + std::to_string(kind) + " at byte offset 6");
    Aabb box;
    for (auto& v : box.min) v = r.f32("aabb");
    for (auto& v : box.max) v = r.f32("aabb");

    Asset out = kind == 0 ? Asset{read_dense(r, box)} : Asset{read_octree(r, box)};
    if (r.remaining() != 0)
        throw InvalidArgument(std::to_string(r.remaining()) + " trailing bytes at byte offset " +
                              std::to_string(r.offset()));
    return out;
}

void save_asset(const std::string& path, const Asset& asset) {
    const auto bytes = serialize_asset(asset);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

Asset load_asset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), {}};
    return deserialize_asset(bytes);
}

}  // namespace deepboard
