// SPDX-License-Identifier: Apache-2.0
#pragma once

// MMDL checkpoint container: little-endian, magic-tagged, versioned.
//   "MMDL", version u16, kind u8, reserved u8,
//   arch: in_c/in_h/in_w/out_c/latent_dim u32, encoder layer count u32,
//         per layer out_c/kh/kw/stride/pad u32,
//   codebook_size u32 (0 unless VQ-VAE),
//   blob count u32, per blob: name (u16 length + bytes), ndim u8,
//   dims u32 each, payload f64 little-endian.
// Blobs are written in ModelBundle::params() order; load is bit-exact.

#include <cstdint>
#include <string>
#include <vector>

#include "chanpred/dataset_io.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/models.hpp"

namespace chanpred {

inline constexpr std::uint16_t kModelFormatVersion = 1;

inline std::string serialize_model(ModelBundle& m) {
    std::string out;
    out.append("MMDL");
    detail::put_u16(out, kModelFormatVersion);
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(m.kind)));
    out.push_back('\0');
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.in_channels));
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.in_h));
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.in_w));
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.out_channels));
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.latent_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(m.arch.encoder.size()));
    for (const auto& l : m.arch.encoder) {
        detail::put_u32(out, static_cast<std::uint32_t>(l.out_channels));
        detail::put_u32(out, static_cast<std::uint32_t>(l.kh));
        detail::put_u32(out, static_cast<std::uint32_t>(l.kw));
        detail::put_u32(out, static_cast<std::uint32_t>(l.stride));
        detail::put_u32(out, static_cast<std::uint32_t>(l.pad));
    }
    detail::put_u32(out, static_cast<std::uint32_t>(m.kind == ModelKind::VQVAE ? m.codebook.size() : 0));

    ParamSet ps = m.params();
    detail::put_u32(out, static_cast<std::uint32_t>(ps.size()));
    for (auto& p : ps) {
        detail::put_u16(out, static_cast<std::uint16_t>(p.name.size()));
        out.append(p.name);
        out.push_back(static_cast<char>(p.value.shape().size()));
        for (long long e : p.value.shape()) detail::put_u32(out, static_cast<std::uint32_t>(e));
        for (long long i = 0; i < p.value.numel(); ++i) detail::put_f64(out, p.value.data()[i]);
    }
    return out;
}

inline void save_model(ModelBundle& m, const std::string& path) {
    detail::write_file_bytes(path, serialize_model(m));
}

inline ModelBundle deserialize_model(const std::string& bytes) {
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "MMDL", 4) != 0) throw format_error("bad magic (expected MMDL)");
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kModelFormatVersion)
        throw format_error("unsupported model version " + std::to_string(version));
    const std::uint8_t kind_byte = r.u8("kind");
    if (kind_byte > 2) throw format_error("invalid model kind " + std::to_string(kind_byte));
    r.u8("reserved");
    const ModelKind kind = static_cast<ModelKind>(kind_byte);

    const long long in_c = r.u32("arch.in_channels");
    const long long in_h = r.u32("arch.in_h");
    const long long in_w = r.u32("arch.in_w");
    const long long out_c = r.u32("arch.out_channels");
    const long long latent_dim = r.u32("arch.latent_dim");
    const std::uint32_t n_layers = r.u32("arch.encoder_layers");
    if (n_layers == 0 || n_layers > 64) throw format_error("implausible encoder layer count");
    std::vector<ConvSpec> encoder;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        ConvSpec l;
        l.out_channels = r.u32("layer.out_channels");
        l.kh = r.u32("layer.kh");
        l.kw = r.u32("layer.kw");
        l.stride = r.u32("layer.stride");
        l.pad = r.u32("layer.pad");
        encoder.push_back(l);
    }
    const std::uint32_t codebook_size = r.u32("codebook_size");
    if (kind == ModelKind::VQVAE && codebook_size == 0)
        throw format_error("codebook_size is zero for a vqvae checkpoint");

    ArchitectureSpec arch;
    try {
        arch = make_architecture(in_c, in_h, in_w, out_c, encoder, latent_dim);
    } catch (const config_error& e) {
        throw format_error(std::string("inconsistent architecture block: ") + e.what());
    }
    ModelBundle m = init_model(kind, arch, /*seed=*/0,
                               kind == ModelKind::VQVAE ? static_cast<long long>(codebook_size)
                                                        : kDefaultCodebookSize);

    const std::uint32_t n_blobs = r.u32("blob_count");
    ParamSet ps = m.params();
    if (n_blobs != ps.size())
        throw format_error("blob count " + std::to_string(n_blobs) + " does not match architecture (" +
                           std::to_string(ps.size()) + " expected)");
    for (auto& p : ps) {
        const std::uint16_t name_len = r.u16("blob.name_len");
        r.need(name_len, "blob.name");
        std::string name(reinterpret_cast<const char*>(r.p + r.pos), name_len);
        r.pos += name_len;
        if (name != p.name)
            throw format_error("blob '" + name + "' out of order (expected '" + p.name + "')");
        const std::uint8_t ndim = r.u8("blob.ndim");
        Shape shape;
        for (std::uint8_t i = 0; i < ndim; ++i)
            shape.push_back(static_cast<long long>(r.u32("blob.dim")));
        if (shape != p.value.shape())
            throw format_error("blob '" + name + "' shape mismatch: file " + shape_to_string(shape) +
                               " vs architecture " + shape_to_string(p.value.shape()));
        for (long long i = 0; i < p.value.numel(); ++i) p.value.data()[i] = r.f64("blob.payload");
    }
    if (r.pos != bytes.size()) throw format_error("trailing bytes after last blob");
    return m;
}

inline ModelBundle load_model(const std::string& path) {
    return deserialize_model(detail::read_file_bytes(path));
}

}  // namespace chanpred
