#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "dckd/errors.hpp"

namespace dckd {

// Little-endian scalar I/O for checkpoints plus the big-endian helpers the
// IDX image format needs. Streams are expected to be binary.

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64_le(std::istream& in, const char* what) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw FormatError(std::string("truncated file while reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_i64_le(std::ostream& out, std::int64_t v) {
    write_u64_le(out, static_cast<std::uint64_t>(v));
}

inline std::int64_t read_i64_le(std::istream& in, const char* what) {
    return static_cast<std::int64_t>(read_u64_le(in, what));
}

inline void write_f64_le(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64_le(out, bits);
}

inline double read_f64_le(std::istream& in, const char* what) {
    const std::uint64_t bits = read_u64_le(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * (3 - i)));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::uint32_t read_u32_be(std::istream& in, const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError(std::string("truncated file while reading ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | buf[i];
    return v;
}

// FNV-1a, used for parameter-block integrity and artifact manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& text) {
    return fnv1a64(text.data(), text.size());
}

}  // namespace dckd
