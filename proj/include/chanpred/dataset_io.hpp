// SPDX-License-Identifier: Apache-2.0
#pragma once

// MCHD dataset container: little-endian, magic-tagged, versioned.
//   bytes 0..3   magic "MCHD"
//   4..5         version u16 (currently 1)
//   6..7         flags u16 (0)
//   8..11        n_samples u32
//   12..15       num_antennas u32
//   16..19       num_subcarriers u32
//   20..23       num_symbols u32
//   24           profile_id u8 (A=0 B=1 C=2 D=3)
//   25..31       zero padding
// payload: per sample / antenna / subcarrier / symbol: re f64, im f64.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "chanpred/channel.hpp"
#include "chanpred/errors.hpp"

namespace chanpred {
namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;

    void need(std::size_t k, const char* field) {
        if (pos + k > n) throw format_error(std::string("truncated file while reading ") + field);
    }
    std::uint16_t u16(const char* field) {
        need(2, field);
        std::uint16_t v = static_cast<std::uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint8_t u8(const char* field) {
        need(1, field);
        return p[pos++];
    }
    double f64(const char* field) {
        need(8, field);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void skip(std::size_t k, const char* field) {
        need(k, field);
        pos += k;
    }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to '" + path + "'");
}

}  // namespace detail

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

inline std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    const long long n = static_cast<long long>(ds.samples.size());
    const auto& c = ds.config;
    out.reserve(32 + static_cast<std::size_t>(n * c.num_rx_antennas * c.num_subcarriers *
                                              c.num_symbols * 2 * 8));
    out.append("MCHD");
    detail::put_u16(out, kDatasetFormatVersion);
    detail::put_u16(out, 0);  // flags
    detail::put_u32(out, static_cast<std::uint32_t>(n));
    detail::put_u32(out, static_cast<std::uint32_t>(c.num_rx_antennas));
    detail::put_u32(out, static_cast<std::uint32_t>(c.num_subcarriers));
    detail::put_u32(out, static_cast<std::uint32_t>(c.num_symbols));
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(ds.profile)));
    out.append(7, '\0');
    for (const auto& s : ds.samples) {
        if (s.num_antennas != c.num_rx_antennas || s.num_subcarriers != c.num_subcarriers ||
            s.num_symbols != c.num_symbols)
            throw shape_error("serialize_dataset: sample grid does not match dataset config");
        for (std::size_t i = 0; i < s.re.size(); ++i) {
            detail::put_f64(out, s.re[i]);
            detail::put_f64(out, s.im[i]);
        }
    }
    return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    detail::write_file_bytes(path, serialize_dataset(ds));
}

inline Dataset deserialize_dataset(const std::string& bytes) {
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "MCHD", 4) != 0) throw format_error("bad magic (expected MCHD)");
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kDatasetFormatVersion)
        throw format_error("unsupported dataset version " + std::to_string(version));
    r.u16("flags");
    const std::uint32_t n = r.u32("n_samples");
    const std::uint32_t K = r.u32("num_antennas");
    const std::uint32_t F = r.u32("num_subcarriers");
    const std::uint32_t T = r.u32("num_symbols");
    const std::uint8_t profile_id = r.u8("profile_id");
    if (profile_id > 3) throw format_error("invalid profile_id " + std::to_string(profile_id));
    r.skip(7, "header padding");
    if (K == 0 || F == 0 || T == 0) throw format_error("zero grid extent in header");

    Dataset ds;
    ds.profile = static_cast<ProfileId>(profile_id);
    ds.config.num_rx_antennas = K;
    ds.config.num_subcarriers = F;
    ds.config.num_symbols = T;
    ds.samples.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        ChannelSample& s = ds.samples[i];
        s.num_antennas = K;
        s.num_subcarriers = F;
        s.num_symbols = T;
        const std::size_t g = static_cast<std::size_t>(K) * F * T;
        s.re.resize(g);
        s.im.resize(g);
        for (std::size_t j = 0; j < g; ++j) {
            s.re[j] = r.f64("sample payload");
            s.im[j] = r.f64("sample payload");
        }
    }
    if (r.pos != bytes.size())
        throw format_error("trailing bytes after payload (" + std::to_string(bytes.size() - r.pos) + ")");
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    return deserialize_dataset(detail::read_file_bytes(path));
}

}  // namespace chanpred
