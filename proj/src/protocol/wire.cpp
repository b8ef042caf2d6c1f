#include "deepboard/wire.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "deepboard/bytes.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

using Reader = ByteReader<ShortBuffer>;

void check_side(const char* field, std::uint16_t v) {
    if (v < kMinFrameSide || v > kMaxFrameSide)
        throw FieldOutOfRange(std::string(field) + " = " + std::to_string(v) + " outside [" +
                              std::to_string(kMinFrameSide) + ", " +
                              std::to_string(kMaxFrameSide) + "]");
}

void check_finite(const char* field, float v) {
    if (!std::isfinite(v)) throw FieldOutOfRange(std::string(field) + " is not finite");
}

void check_magic(Reader& r, std::uint16_t expected) {
    const std::uint16_t magic = r.u16("magic");
    if (magic != expected) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "expected 0x%04X, found 0x%04X", expected, magic);
        throw BadMagic(buf);
    }
}

void check_request(const PoseRequest& p) {
    check_side("width", p.width);
    check_side("height", p.height);
    for (float v : p.observer_pos) check_finite("observer_pos", v);
    for (float v : p.observer_quat) check_finite("observer_quat", v);
    check_finite("time_s", p.time_s);
}

void check_response(const FrameResponse& f) {
    check_side("width", f.width);
    check_side("height", f.height);
    if (f.encoding != FrameEncoding::RawRgba8 && f.encoding != FrameEncoding::Png)
        throw FieldOutOfRange("unknown encoding " + std::to_string(int(f.encoding)));
    if (f.encoding == FrameEncoding::RawRgba8 &&
        f.payload.size() != size_t{f.width} * f.height * 4)
        throw FieldOutOfRange("raw payload holds " + std::to_string(f.payload.size()) +
                              " bytes, expected " + std::to_string(size_t{f.width} * f.height * 4));
    check_finite("render_ms", f.render_ms);
}

}  // namespace

Pose PoseRequest::pose() const {
    Quat q{observer_quat[0], observer_quat[1], observer_quat[2], observer_quat[3]};
    q = q.norm_sq() > 0 ? q.normalized() : Quat{};
    return {{observer_pos[0], observer_pos[1], observer_pos[2]}, q};
}

std::vector<std::uint8_t> encode_pose_request(const PoseRequest& p) {
    check_request(p);
    ByteWriter w;
    w.u16(kPoseRequestMagic);
    w.u32(p.object_id);
    w.u64(p.seq);
    for (float v : p.observer_pos) w.f32(v);
    for (float v : p.observer_quat) w.f32(v);
    w.u16(p.width);
    w.u16(p.height);
    w.f32(p.time_s);
    return w.take();
}

PoseRequest decode_pose_request(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    check_magic(r, kPoseRequestMagic);
    PoseRequest p;
    p.object_id = r.u32("object_id");
    p.seq = r.u64("seq");
    for (auto& v : p.observer_pos) v = r.f32("observer_pos");
    for (auto& v : p.observer_quat) v = r.f32("observer_quat");
    p.width = r.u16("width");
    p.height = r.u16("height");
    p.time_s = r.f32("time_s");
    if (r.remaining() != 0)
        throw FieldOutOfRange(std::to_string(r.remaining()) + " trailing bytes after PoseRequest");
    check_request(p);
    return p;
}

std::vector<std::uint8_t> encode_frame_response(const FrameResponse& f) {
    check_response(f);
    ByteWriter w;
    w.buffer().reserve(29 + f.payload.size());
    w.u16(kFrameResponseMagic);
    w.u32(f.object_id);
    w.u64(f.seq);
    w.u16(f.width);
    w.u16(f.height);
    w.u8(static_cast<std::uint8_t>(f.encoding));
    w.u32(static_cast<std::uint32_t>(f.payload.size()));
    w.bytes(f.payload);
    w.f32(f.render_ms);
    return w.take();
}

FrameResponse decode_frame_response(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    check_magic(r, kFrameResponseMagic);
    FrameResponse f;
    f.object_id = r.u32("object_id");
    f.seq = r.u64("seq");
    f.width = r.u16("width");
    f.height = r.u16("height");
    f.encoding = static_cast<FrameEncoding>(r.u8("encoding"));
    const std::uint32_t len = r.u32("payload_len");
    const auto payload = r.bytes(len, "payload");
    f.payload.assign(payload.begin(), payload.end());
    f.render_ms = r.f32("render_ms");
    if (r.remaining() != 0)
        throw FieldOutOfRange(std::to_string(r.remaining()) + " trailing bytes after FrameResponse");
    check_response(f);
    return f;
}

FrameResponse make_frame_response(std::uint32_t object_id, std::uint64_t seq,
                                  const RenderedImage& image, float render_ms,
                                  size_t png_threshold) {
    FrameResponse f;
    f.object_id = object_id;
    f.seq = seq;
    f.width = static_cast<std::uint16_t>(image.width());
    f.height = static_cast<std::uint16_t>(image.height());
    f.render_ms = render_ms;
    f.payload = image.to_rgba8();
    if (f.payload.size() > png_threshold) {
        f.payload = encode_png(image.width(), image.height(), f.payload);
        f.encoding = FrameEncoding::Png;
    }
    return f;
}

std::vector<std::uint8_t> frame_pixels(const FrameResponse& f) {
    if (f.encoding == FrameEncoding::RawRgba8) return f.payload;
    DecodedPng png = decode_png(f.payload);
    if (png.width != f.width || png.height != f.height)
        throw DimensionMismatch("PNG is " + std::to_string(png.width) + "x" +
                                std::to_string(png.height) + ", header says " +
                                std::to_string(f.width) + "x" + std::to_string(f.height));
    return std::move(png.rgba8);
}

RenderedImage frame_image(const FrameResponse& f) {
    return RenderedImage::from_rgba8(f.width, f.height, frame_pixels(f));
}

}  // namespace deepboard
