#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mhl/error.hpp"
#include "mhl/numerics/matrix.hpp"

// Matrix container: "MHLF" | u32 version=1 | u32 rows | u32 cols |
// rows*cols float32, all little-endian, row-major.

namespace mhl {

inline constexpr std::array<char, 4> kMatrixMagic{'M', 'H', 'L', 'F'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 16;

namespace detail {

inline void put_u32(std::vector<char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

}  // namespace detail

inline std::vector<char> encode_matrix(const Matrix<float>& m) {
    if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw ArgumentError("matrix too large for container");
    std::vector<char> buf(kMatrixMagic.begin(), kMatrixMagic.end());
    detail::put_u32(buf, kMatrixVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(buf, static_cast<std::uint32_t>(m.cols()));
    buf.reserve(buf.size() + 4 * m.size());
    for (float f : m.values()) detail::put_u32(buf, std::bit_cast<std::uint32_t>(f));
    return buf;
}

/// `origin` names the source in error messages.
inline Matrix<float> decode_matrix(const std::vector<char>& buf, const std::string& origin) {
    auto fail = [&](std::size_t offset, const std::string& what) {
        return FormatError(origin + ": " + what + " at offset " + std::to_string(offset));
    };
    if (buf.size() < kMatrixHeaderBytes) throw fail(buf.size(), "truncated header");
    if (std::memcmp(buf.data(), kMatrixMagic.data(), 4) != 0) throw fail(0, "bad magic");
    const auto version = detail::get_u32(buf.data() + 4);
    if (version != kMatrixVersion) throw fail(4, "unsupported version " + std::to_string(version));
    const std::size_t rows = detail::get_u32(buf.data() + 8);
    const std::size_t cols = detail::get_u32(buf.data() + 12);
    const std::size_t need = kMatrixHeaderBytes + 4 * rows * cols;
    if (buf.size() < need) {
        throw fail(buf.size(), "truncated payload for " + Matrix<float>::shape_string(rows, cols) + " (expected " +
                                   std::to_string(need) + " bytes)");
    }
    if (buf.size() > need) throw fail(need, "trailing bytes after payload");
    Matrix<float> m(rows, cols);
    const char* p = buf.data() + kMatrixHeaderBytes;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::bit_cast<float>(detail::get_u32(p + 4 * i));
    return m;
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::vector<char>(text.begin(), text.end()));
}

inline std::string read_file_text(const std::filesystem::path& path) {
    const auto b = read_file_bytes(path);
    return std::string(b.begin(), b.end());
}

inline void write_matrix(const std::filesystem::path& path, const Matrix<float>& m) {
    write_file_bytes(path, encode_matrix(m));
}

inline Matrix<float> read_matrix(const std::filesystem::path& path) {
    return decode_matrix(read_file_bytes(path), path.string());
}

}  // namespace mhl
