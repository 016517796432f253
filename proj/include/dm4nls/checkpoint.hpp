#pragma once

// Binary state snapshots, little-endian:
//   "DM4N" | u32 version | u32 n | u32 N | f64 L | f64 t | N^n x (f64 re, f64 im)
// Samples in row-major physical index order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "dm4nls/error.hpp"
#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Field state;
    double t = 0.0;
};

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu));
}

template <typename T>
T get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    if (pos + sizeof(T) > in.size()) throw ValidationError("checkpoint: truncated file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[pos + i]) << (8 * i);
    pos += sizeof(T);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
}

// Write bytes to a temporary sibling and rename over the target.
inline void atomic_write(const std::string& path, const void* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw ValidationError("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline void atomic_write(const std::string& path, const std::string& text) {
    atomic_write(path, text.data(), text.size());
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const Field& u, double t) {
    const auto& spec = u.spec();
    std::vector<unsigned char> out;
    out.reserve(32 + 16 * u.size());
    for (char c : {'D', 'M', '4', 'N'}) out.push_back(static_cast<unsigned char>(c));
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.n));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.N));
    detail::put_le<double>(out, spec.L);
    detail::put_le<double>(out, t);
    for (const auto& z : u.samples()) {
        detail::put_le<double>(out, z.real());
        detail::put_le<double>(out, z.imag());
    }
    return out;
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "DM4N", 4) != 0)
        throw ValidationError("checkpoint: bad magic (expected DM4N)");
    std::size_t pos = 4;
    const auto version = detail::get_le<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion)
        throw ValidationError("checkpoint: unsupported format version " + std::to_string(version));
    GridSpec spec;
    spec.n = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
    spec.N = detail::get_le<std::uint32_t>(bytes, pos);
    spec.L = detail::get_le<double>(bytes, pos);
    spec.validate();
    const double t = detail::get_le<double>(bytes, pos);
    const std::size_t count = spec.size();
    if (bytes.size() != pos + 16 * count) throw ValidationError("checkpoint: payload size does not match header");
    cvector samples(count);
    for (auto& z : samples) {
        const double re = detail::get_le<double>(bytes, pos);
        const double im = detail::get_le<double>(bytes, pos);
        z = complex{re, im};
    }
    return Checkpoint{Field::from_samples(SpectralGrid::get(spec), std::move(samples)), t};
}

inline void write_checkpoint(const std::string& path, const Field& u, double t) {
    const auto bytes = encode_checkpoint(u, t);
    detail::atomic_write(path, bytes.data(), bytes.size());
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("checkpoint: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace dm4nls
