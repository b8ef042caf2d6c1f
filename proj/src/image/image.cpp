#include "deepboard/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "deepboard/errors.hpp"

namespace deepboard {

Rgba over(const Rgba& front, const Rgba& back) {
    const float back_weight = back.a * (1.0f - front.a);
    const float a = front.a + back_weight;
    if (a <= 0.0f) return {0, 0, 0, 0};
    auto mix = [&](float f, float b) {
        return std::clamp((f * front.a + b * back_weight) / a, 0.0f, 1.0f);
    };
    return {mix(front.r, back.r), mix(front.g, back.g), mix(front.b, back.b), std::min(a, 1.0f)};
}

RenderedImage::RenderedImage(int width, int height, Rgba fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("negative image size");
    pixels_.resize(static_cast<size_t>(width) * height * 4);
    for (size_t i = 0; i < pixels_.size(); i += 4) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
        pixels_[i + 3] = fill.a;
    }
}

Rgba RenderedImage::at(int col, int row) const {
    const size_t i = (static_cast<size_t>(row) * width_ + col) * 4;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2], pixels_[i + 3]};
}

void RenderedImage::set(int col, int row, const Rgba& c) {
    const size_t i = (static_cast<size_t>(row) * width_ + col) * 4;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
    pixels_[i + 3] = c.a;
}

std::uint8_t quantize_channel(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::vector<std::uint8_t> RenderedImage::to_rgba8() const {
    std::vector<std::uint8_t> out(pixels_.size());
    std::transform(pixels_.begin(), pixels_.end(), out.begin(), quantize_channel);
    return out;
}

RenderedImage RenderedImage::from_rgba8(int width, int height,
                                        std::span<const std::uint8_t> bytes) {
    if (bytes.size() != static_cast<size_t>(width) * height * 4)
        throw DimensionMismatch("expected " + std::to_string(size_t(width) * height * 4) +
                                " RGBA8 bytes, got " + std::to_string(bytes.size()));
    RenderedImage img(width, height);
    std::transform(bytes.begin(), bytes.end(), img.pixels_.begin(),
                   [](std::uint8_t b) { return b / 255.0f; });
    return img;
}

RenderedImage resample_nearest(const RenderedImage& src, int width, int height) {
    if (src.width() == width && src.height() == height) return src;
    RenderedImage out(width, height);
    for (int row = 0; row < height; ++row) {
        const int sr = std::min(src.height() - 1, row * src.height() / height);
        for (int col = 0; col < width; ++col) {
            const int sc = std::min(src.width() - 1, col * src.width() / width);
            out.set(col, row, src.at(sc, sr));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_png(int width, int height, std::span<const std::uint8_t> rgba8) {
    if (rgba8.size() != static_cast<size_t>(width) * height * 4)
        throw DimensionMismatch("PNG encode: pixel buffer does not match dimensions");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGBA;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgba8.data(), 0, nullptr))
        throw IoError(std::string("PNG size query failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgba8.data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

DecodedPng decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw IoError(std::string("PNG header: ") + image.message);
    image.format = PNG_FORMAT_RGBA;
    DecodedPng out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.rgba8.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.rgba8.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(std::string("PNG decode: ") + image.message);
    }
    return out;
}

void write_png_file(const std::string& path, const RenderedImage& image) {
    const auto png = encode_png(image.width(), image.height(), image.to_rgba8());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!f) throw IoError("write failed: " + path);
}

RenderedImage read_png_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), {}};
    const DecodedPng png = decode_png(bytes);
    return RenderedImage::from_rgba8(png.width, png.height, png.rgba8);
}

}  // namespace deepboard
