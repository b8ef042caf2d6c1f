#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepboard/errors.hpp"

namespace deepboard {

/// Little-endian encoder used by the asset and wire formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void text(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t>& buffer() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

/// Little-endian decoder. Running past the end throws `Short`, naming the field,
/// the offset, and the needed versus available byte counts.
template <class Short>
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(get(1, field)); }
    std::uint16_t u16(const char* field) { return static_cast<std::uint16_t>(get(2, field)); }
    std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(get(4, field)); }
    std::uint64_t u64(const char* field) { return get(8, field); }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }

    std::span<const std::uint8_t> bytes(size_t n, const char* field) {
        require(n, field);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    void require(size_t n, const char* field) const {
        if (data_.size() - pos_ < n)
            throw Short(std::string(field) + " at byte offset " + std::to_string(pos_) +
                        ": expected " + std::to_string(n) + " bytes, only " +
                        std::to_string(data_.size() - pos_) + " available (total length " +
                        std::to_string(data_.size()) + ")");
    }

    size_t offset() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

private:
    std::uint64_t get(int n, const char* field) {
        require(static_cast<size_t>(n), field);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += static_cast<size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace deepboard
