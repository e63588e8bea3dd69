#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "smcnn/errors.hpp"

namespace smcnn::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc = 0);

/// Accumulates a little-endian byte buffer in memory.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { raw(&v, sizeof v); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i32(std::int32_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void bytes(const char* data, std::size_t len) { raw(data, len); }

    void f32_array(const float* data, std::size_t count) { raw(data, count * sizeof(float)); }

    std::uint32_t checksum() const { return crc32(buf_.data(), buf_.size()); }
    const std::vector<unsigned char>& buffer() const { return buf_; }

private:
    void raw(const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + len);
    }
    std::vector<unsigned char> buf_;
};

/// Reads little-endian values; underruns throw TruncatedError.
class ByteReader {
public:
    ByteReader(const unsigned char* data, std::size_t len) : data_(data), len_(len) {}

    std::uint8_t u8() { return take<std::uint8_t>(); }
    std::uint16_t u16() { return take<std::uint16_t>(); }
    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    std::int32_t i32() { return take<std::int32_t>(); }
    float f32() { return take<float>(); }

    void f32_array(float* out, std::size_t count) {
        need(count * sizeof(float));
        std::memcpy(out, data_ + pos_, count * sizeof(float));
        pos_ += count * sizeof(float);
    }

    void expect_bytes(const char* expected, std::size_t len, const char* what) {
        need(len);
        if (std::memcmp(data_ + pos_, expected, len) != 0)
            throw FormatError(std::string("bad ") + what);
        pos_ += len;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return len_ - pos_; }

private:
    template <typename T>
    T take() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (len_ - pos_ < n) throw TruncatedError("unexpected end of file");
    }

    const unsigned char* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::string& path);         // IoError
void write_file(const std::string& path, const ByteWriter& writer);    // IoError

}  // namespace smcnn::io
