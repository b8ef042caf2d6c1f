#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deepboard {

/// Straight (non-premultiplied) RGBA, each channel in [0,1].
struct Rgba {
    float r = 0, g = 0, b = 0, a = 0;

    constexpr bool operator==(const Rgba&) const = default;
};

/// Straight-alpha "over": `front` composited onto `back`.
Rgba over(const Rgba& front, const Rgba& back);

/// Float RGBA image, row-major, row 0 at the top, straight alpha.
class RenderedImage {
public:
    RenderedImage() = default;
    RenderedImage(int width, int height, Rgba fill = {});

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    Rgba at(int col, int row) const;
    void set(int col, int row, const Rgba& c);

    std::span<const float> data() const { return pixels_; }
    std::span<float> data() { return pixels_; }

    /// Rounds each channel to the nearest of 256 levels.
    std::vector<std::uint8_t> to_rgba8() const;
    static RenderedImage from_rgba8(int width, int height, std::span<const std::uint8_t> bytes);

    bool operator==(const RenderedImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> pixels_;
};

std::uint8_t quantize_channel(float v);

/// Nearest-neighbour resample to a new size.
RenderedImage resample_nearest(const RenderedImage& src, int width, int height);

/// Lossless PNG (8-bit RGBA).
std::vector<std::uint8_t> encode_png(int width, int height, std::span<const std::uint8_t> rgba8);

struct DecodedPng {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba8;
};

/// Throws IoError on malformed input.
DecodedPng decode_png(std::span<const std::uint8_t> bytes);

void write_png_file(const std::string& path, const RenderedImage& image);
RenderedImage read_png_file(const std::string& path);

}  // namespace deepboard
