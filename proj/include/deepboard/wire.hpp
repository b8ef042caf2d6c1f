#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "deepboard/camera.hpp"
#include "deepboard/image.hpp"

namespace deepboard {

inline constexpr std::uint16_t kPoseRequestMagic = 0xDB01;
inline constexpr std::uint16_t kFrameResponseMagic = 0xDB02;
inline constexpr std::uint16_t kMinFrameSide = 16;
inline constexpr std::uint16_t kMaxFrameSide = 1024;
/// Fixed size of an encoded PoseRequest.
inline constexpr size_t kPoseRequestSize = 50;
/// Raw frames larger than this many bytes are sent as PNG.
inline constexpr size_t kDefaultPngThreshold = 64 * 1024;

/// Observer pose for one frame. Layout (little-endian): magic u16, object_id u32,
/// seq u64, observer_pos 3xf32, observer_quat 4xf32 (w,x,y,z), width u16,
/// height u16, time_s f32.
struct PoseRequest {
    std::uint32_t object_id = 0;
    std::uint64_t seq = 0;
    std::array<float, 3> observer_pos{0, 0, 0};
    std::array<float, 4> observer_quat{1, 0, 0, 0};
    std::uint16_t width = 64;
    std::uint16_t height = 64;
    float time_s = 0;

    /// Position as sent; orientation normalized (identity if the quaternion is zero).
    Pose pose() const;

    bool operator==(const PoseRequest&) const = default;
};

enum class FrameEncoding : std::uint8_t { RawRgba8 = 0, Png = 1 };

/// Rendered billboard texture. Layout (little-endian): magic u16, object_id u32,
/// seq u64, width u16, height u16, encoding u8, payload_len u32, payload bytes,
/// render_ms f32.
struct FrameResponse {
    std::uint32_t object_id = 0;
    std::uint64_t seq = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    FrameEncoding encoding = FrameEncoding::RawRgba8;
    std::vector<std::uint8_t> payload;
    float render_ms = 0;

    bool operator==(const FrameResponse&) const = default;
};

/// Both throw FieldOutOfRange for sizes outside [16, 1024] or non-finite floats.
std::vector<std::uint8_t> encode_pose_request(const PoseRequest& request);
/// Throws BadMagic, ShortBuffer, or FieldOutOfRange.
PoseRequest decode_pose_request(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_frame_response(const FrameResponse& response);
/// Raw payloads must hold exactly width*height*4 bytes.
FrameResponse decode_frame_response(std::span<const std::uint8_t> bytes);

/// Raw RGBA8 when the raw size is at most png_threshold bytes, PNG otherwise.
FrameResponse make_frame_response(std::uint32_t object_id, std::uint64_t seq,
                                  const RenderedImage& image, float render_ms,
                                  size_t png_threshold = kDefaultPngThreshold);

/// RGBA8 pixels of a response regardless of encoding.
std::vector<std::uint8_t> frame_pixels(const FrameResponse& response);
RenderedImage frame_image(const FrameResponse& response);

}  // namespace deepboard
