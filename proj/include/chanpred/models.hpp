// SPDX-License-Identifier: Apache-2.0
#pragma once

// AE / VAE / VQ-VAE sharing one convolutional trunk. The latent is a
// spatial grid of latent_dim vectors; the three kinds differ only in what
// happens between encoder and decoder (nothing / gaussian head / vector
// quantizer), so the latent mechanism is the only variable.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chanpred/adam.hpp"
#include "chanpred/autodiff.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/link.hpp"
#include "chanpred/rng.hpp"
#include "chanpred/tensor.hpp"

namespace chanpred {

enum class ModelKind : std::uint8_t { AE = 0, VAE = 1, VQVAE = 2 };

inline std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::AE: return "ae";
        case ModelKind::VAE: return "vae";
        case ModelKind::VQVAE: return "vqvae";
    }
    throw config_error("unknown model kind");
}

inline ModelKind parse_model_kind(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == "ae") return ModelKind::AE;
    if (name == "vae") return ModelKind::VAE;
    if (name == "vqvae" || name == "vq-vae") return ModelKind::VQVAE;
    throw config_error("unknown model '" + name + "' (expected ae, vae or vqvae)");
}

struct ConvSpec {
    long long out_channels, kh, kw, stride, pad;
};

struct DeconvSpec {
    long long out_channels, kh, kw, stride, pad, output_pad_h, output_pad_w;
};

// Encoder layer list plus the exactly-inverting decoder derived from it.
// Construction fails if any conv step is geometrically invalid; the mirror
// always restores the input extents (output padding is solved per layer).
struct ArchitectureSpec {
    long long in_channels = 4, in_h = 64, in_w = 16;
    long long out_channels = 4;
    long long latent_dim = 64;
    std::vector<ConvSpec> encoder;
    std::vector<DeconvSpec> decoder;  // derived
    long long grid_h = 0, grid_w = 0;  // latent spatial extents (derived)
};

inline ArchitectureSpec make_architecture(long long in_channels, long long in_h, long long in_w,
                                          long long out_channels, std::vector<ConvSpec> encoder,
                                          long long latent_dim = 64) {
    if (encoder.empty()) throw config_error("architecture: encoder needs at least one layer");
    ArchitectureSpec a;
    a.in_channels = in_channels;
    a.in_h = in_h;
    a.in_w = in_w;
    a.out_channels = out_channels;
    a.latent_dim = latent_dim;
    a.encoder = std::move(encoder);

    // Walk encoder geometry.
    struct Dim {
        long long c, h, w;
    };
    std::vector<Dim> dims;
    dims.push_back({in_channels, in_h, in_w});
    for (const auto& l : a.encoder) {
        const Dim& d = dims.back();
        if (l.stride < 1 || l.pad < 0 || l.out_channels < 1 || l.kh < 1 || l.kw < 1)
            throw config_error("architecture: invalid conv spec");
        if (l.kh > d.h + 2 * l.pad || l.kw > d.w + 2 * l.pad)
            throw config_error("architecture: kernel larger than padded input at some layer");
        dims.push_back({l.out_channels, (d.h + 2 * l.pad - l.kh) / l.stride + 1,
                        (d.w + 2 * l.pad - l.kw) / l.stride + 1});
    }
    if (dims.back().c != latent_dim)
        throw config_error("architecture: last encoder layer must emit latent_dim channels");
    a.grid_h = dims.back().h;
    a.grid_w = dims.back().w;

    // Mirror: decoder layer i inverts encoder layer n-1-i; output padding
    // is chosen so extents match exactly.
    const std::size_t n = a.encoder.size();
    for (std::size_t i = 0; i < n; ++i) {
        const ConvSpec& e = a.encoder[n - 1 - i];
        const Dim& from = dims[n - i];      // extents entering this decoder layer
        const Dim& to = dims[n - 1 - i];    // extents it must restore
        DeconvSpec d;
        d.out_channels = (i + 1 == n) ? out_channels : to.c;
        d.kh = e.kh;
        d.kw = e.kw;
        d.stride = e.stride;
        d.pad = e.pad;
        d.output_pad_h = to.h - ((from.h - 1) * e.stride - 2 * e.pad + e.kh);
        d.output_pad_w = to.w - ((from.w - 1) * e.stride - 2 * e.pad + e.kw);
        if (d.output_pad_h < 0 || d.output_pad_h >= e.stride || d.output_pad_w < 0 ||
            d.output_pad_w >= e.stride)
            throw config_error("architecture: encoder layer not invertible by its mirror");
        a.decoder.push_back(d);
    }
    return a;
}

// Default trunk: 3x3 stride-2 conv x2 then a 1x1 projection to the latent
// dim; yields a [latent_dim x h/4 x w/4] grid for multiple-of-4 extents.
inline ArchitectureSpec default_architecture(long long in_channels, long long in_h, long long in_w,
                                             long long out_channels, long long latent_dim = 64) {
    return make_architecture(in_channels, in_h, in_w, out_channels,
                             {{32, 3, 3, 2, 1}, {64, 3, 3, 2, 1}, {latent_dim, 1, 1, 1, 0}},
                             latent_dim);
}

struct Codebook {
    Tensor embeddings;  // [k, d]

    long long size() const { return embeddings.defined() ? embeddings.shape()[0] : 0; }
    long long dim() const { return embeddings.defined() ? embeddings.shape()[1] : 0; }
};

inline constexpr long long kDefaultCodebookSize = 512;

// Uniform(-1/k, 1/k) init; rejects duplicate rows (they would make the
// nearest-neighbour map ambiguous).
inline Codebook make_codebook(long long k, long long d, std::uint64_t seed) {
    if (k < 1 || d < 1) throw config_error("codebook: size and dim must be >= 1");
    Rng rng(seed);
    Tensor e = Tensor::zeros({k, d});
    const double lim = 1.0 / static_cast<double>(k);
    for (long long i = 0; i < k * d; ++i) e.data()[i] = rng.uniform(-lim, lim);
    for (long long i = 0; i < k; ++i)
        for (long long j = i + 1; j < k; ++j) {
            bool same = true;
            for (long long c = 0; c < d && same; ++c)
                same = e.data()[i * d + c] == e.data()[j * d + c];
            if (same) throw config_error("codebook: duplicate rows " + std::to_string(i) + " and " +
                                         std::to_string(j) + " at init");
        }
    return Codebook{e};
}

struct ModelBundle {
    ModelKind kind = ModelKind::AE;
    ArchitectureSpec arch;
    std::vector<Tensor> enc_kernels, enc_biases;
    std::vector<Tensor> dec_kernels, dec_biases;
    Tensor mu_kernel, mu_bias, logvar_kernel, logvar_bias;  // VAE heads (1x1 convs)
    Codebook codebook;                                      // VQVAE

    // Ordered, named parameter view; order is part of the checkpoint format.
    ParamSet params() {
        ParamSet ps;
        for (std::size_t i = 0; i < enc_kernels.size(); ++i) {
            ps.push_back({"enc" + std::to_string(i) + ".kernel", enc_kernels[i]});
            ps.push_back({"enc" + std::to_string(i) + ".bias", enc_biases[i]});
        }
        for (std::size_t i = 0; i < dec_kernels.size(); ++i) {
            ps.push_back({"dec" + std::to_string(i) + ".kernel", dec_kernels[i]});
            ps.push_back({"dec" + std::to_string(i) + ".bias", dec_biases[i]});
        }
        if (kind == ModelKind::VAE) {
            ps.push_back({"vae.mu.kernel", mu_kernel});
            ps.push_back({"vae.mu.bias", mu_bias});
            ps.push_back({"vae.logvar.kernel", logvar_kernel});
            ps.push_back({"vae.logvar.bias", logvar_bias});
        }
        if (kind == ModelKind::VQVAE) ps.push_back({"codebook", codebook.embeddings});
        return ps;
    }

    void set_requires_grad(bool v) {
        for (auto& p : params()) p.value.set_requires_grad(v);
    }
};

inline long long param_count(ModelBundle& m) { return param_count(m.params()); }

// He-normal kernels (std = sqrt(2 / fan_in)), zero biases; all draws come
// from per-layer sub-seeds of `seed`.
inline ModelBundle init_model(ModelKind kind, const ArchitectureSpec& arch, std::uint64_t seed,
                              long long codebook_size = kDefaultCodebookSize) {
    ModelBundle m;
    m.kind = kind;
    m.arch = arch;
    long long c = arch.in_channels;
    std::uint64_t layer_tag = 0;
    for (const auto& l : arch.encoder) {
        const double std = std::sqrt(2.0 / static_cast<double>(c * l.kh * l.kw));
        m.enc_kernels.push_back(Tensor::gaussian({l.out_channels, c, l.kh, l.kw},
                                                 derive_seed(seed, seed_purpose::kParamInit, layer_tag++),
                                                 0.0, std));
        m.enc_biases.push_back(Tensor::zeros({l.out_channels}));
        c = l.out_channels;
    }
    for (const auto& l : arch.decoder) {
        const double std = std::sqrt(2.0 / static_cast<double>(c * l.kh * l.kw));
        m.dec_kernels.push_back(Tensor::gaussian({c, l.out_channels, l.kh, l.kw},
                                                 derive_seed(seed, seed_purpose::kParamInit, layer_tag++),
                                                 0.0, std));
        m.dec_biases.push_back(Tensor::zeros({l.out_channels}));
        c = l.out_channels;
    }
    if (kind == ModelKind::VAE) {
        const long long d = arch.latent_dim;
        const double std = std::sqrt(2.0 / static_cast<double>(d));
        m.mu_kernel = Tensor::gaussian({d, d, 1, 1}, derive_seed(seed, seed_purpose::kParamInit, layer_tag++), 0.0, std);
        m.mu_bias = Tensor::zeros({d});
        m.logvar_kernel =
            Tensor::gaussian({d, d, 1, 1}, derive_seed(seed, seed_purpose::kParamInit, layer_tag++), 0.0, std);
        m.logvar_bias = Tensor::zeros({d});
    }
    if (kind == ModelKind::VQVAE)
        m.codebook = make_codebook(codebook_size, arch.latent_dim, derive_seed(seed, seed_purpose::kCodebook));
    m.set_requires_grad(true);
    return m;
}

namespace detail {

inline Tensor conv_bias_act(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                            long long stride, long long pad, bool act, Tape* tape) {
    Tensor y = conv2d(x, kernel, stride, pad, tape);
    Tensor b = expand_channels(bias, y.shape()[1], y.shape()[2], tape);
    y = add(y, b, tape);
    return act ? relu(y, tape) : y;
}

inline Tensor deconv_bias_act(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                              const DeconvSpec& spec, bool act, Tape* tape) {
    Tensor y = conv_transpose2d(x, kernel, spec.stride, spec.pad, spec.output_pad_h,
                                spec.output_pad_w, tape);
    Tensor b = expand_channels(bias, y.shape()[1], y.shape()[2], tape);
    y = add(y, b, tape);
    return act ? relu(y, tape) : y;
}

}  // namespace detail

struct EncodeResult {
    Tensor z;            // z_e for AE / VQVAE
    Tensor mu, logvar;   // VAE heads
};

inline EncodeResult encode(ModelBundle& m, const Tensor& input, Tape* tape = nullptr) {
    if (input.shape() != Shape{m.arch.in_channels, m.arch.in_h, m.arch.in_w})
        throw shape_error("encode: input shape " + shape_to_string(input.shape()) + " does not match architecture " +
                          shape_to_string({m.arch.in_channels, m.arch.in_h, m.arch.in_w}));
    Tensor h = input;
    for (std::size_t i = 0; i < m.arch.encoder.size(); ++i) {
        const bool last = (i + 1 == m.arch.encoder.size());
        h = detail::conv_bias_act(h, m.enc_kernels[i], m.enc_biases[i], m.arch.encoder[i].stride,
                                  m.arch.encoder[i].pad, !last, tape);
    }
    EncodeResult r;
    if (m.kind == ModelKind::VAE) {
        r.mu = detail::conv_bias_act(h, m.mu_kernel, m.mu_bias, 1, 0, false, tape);
        r.logvar = detail::conv_bias_act(h, m.logvar_kernel, m.logvar_bias, 1, 0, false, tape);
    } else {
        r.z = h;
    }
    return r;
}

inline Tensor decode(ModelBundle& m, const Tensor& latent, Tape* tape = nullptr) {
    if (latent.shape() != Shape{m.arch.latent_dim, m.arch.grid_h, m.arch.grid_w})
        throw shape_error("decode: latent shape " + shape_to_string(latent.shape()) +
                          " does not match architecture grid " +
                          shape_to_string({m.arch.latent_dim, m.arch.grid_h, m.arch.grid_w}));
    Tensor h = latent;
    for (std::size_t i = 0; i < m.arch.decoder.size(); ++i) {
        const bool last = (i + 1 == m.arch.decoder.size());
        h = detail::deconv_bias_act(h, m.dec_kernels[i], m.dec_biases[i], m.arch.decoder[i], !last, tape);
    }
    return h;
}

// z = mu + exp(logvar/2) * eps with an explicit noise tensor; gradients
// flow to mu and logvar, eps is a constant.
inline Tensor reparameterize_with_eps(const Tensor& mu, const Tensor& logvar, const Tensor& eps,
                                      Tape* tape = nullptr) {
    if (!same_shape(mu, logvar) || !same_shape(mu, eps))
        throw shape_error("reparameterize: mu/logvar/eps shapes differ");
    Tensor sigma = exp(mul_scalar(logvar, 0.5, tape), tape);
    return add(mu, mul(sigma, eps, tape), tape);
}

inline Tensor reparameterize(const Tensor& mu, const Tensor& logvar, std::uint64_t eps_seed,
                             Tape* tape = nullptr) {
    Rng rng(eps_seed);
    Tensor eps = Tensor::gaussian(mu.shape(), rng, 0.0, 1.0);
    return reparameterize_with_eps(mu, logvar, eps, tape);
}

struct QuantizeResult {
    Tensor z_q;                      // [d, gh, gw], rows bit-copied from the codebook
    std::vector<long long> indices;  // one codeword id per latent grid position
};

// Nearest codeword per latent grid position, squared euclidean metric,
// ties broken toward the lowest index. The index search is not part of
// the gradient graph; the row gather is, so VQ-loss gradients reach the
// codebook.
inline QuantizeResult vq_quantize(const Tensor& z, const Codebook& codebook, Tape* tape = nullptr) {
    if (codebook.size() < 1) throw config_error("vq_quantize: empty codebook");
    if (z.shape().size() != 3 || z.shape()[0] != codebook.dim())
        throw shape_error("vq_quantize: latent " + shape_to_string(z.shape()) +
                          " does not match codebook dim " + std::to_string(codebook.dim()));
    const long long d = codebook.dim(), k = codebook.size();
    const long long P = z.shape()[1] * z.shape()[2];
    const double* zv = z.data();
    const double* e = codebook.embeddings.data();

    QuantizeResult out;
    out.indices.resize(static_cast<std::size_t>(P));
    std::vector<double> q(static_cast<std::size_t>(d));
    for (long long pos = 0; pos < P; ++pos) {
        for (long long c = 0; c < d; ++c) q[static_cast<std::size_t>(c)] = zv[c * P + pos];
        long long best = 0;
        double best_dist = 0.0;
        for (long long i = 0; i < k; ++i) {
            const double* row = e + i * d;
            double dist = 0.0;
            for (long long c = 0; c < d; ++c) {
                const double diff = q[static_cast<std::size_t>(c)] - row[c];
                dist += diff * diff;
            }
            if (i == 0 || dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        out.indices[static_cast<std::size_t>(pos)] = best;
    }

    Tensor rows = gather_rows(codebook.embeddings, out.indices, tape);         // [P, d]
    Tensor grid = transpose2d(rows, tape);                                     // [d, P]
    out.z_q = reshape(grid, {d, z.shape()[1], z.shape()[2]}, tape);
    return out;
}

enum class Mode { Train, Eval };

struct ForwardOptions {
    Mode mode = Mode::Eval;
    LinkConfig link = LinkConfig::disabled();
    Tape* tape = nullptr;
    std::uint64_t eps_seed = 0;  // VAE reparameterization noise
};

struct ForwardResult {
    Tensor prediction;               // predicted H_r tensor
    Tensor mu, logvar;               // VAE auxiliaries
    Tensor z_e, z_q;                 // VQVAE auxiliaries (z_e = clean encoder output)
    std::vector<long long> indices;  // VQVAE codeword choices
};

// Full pipeline for one sample: encode, (optional) link noise on the
// transmitted latent, the kind-specific latent mechanism, decode.
inline ForwardResult forward(ModelBundle& m, const Tensor& input, const ForwardOptions& opts = {}) {
    ForwardResult r;
    Tape* tape = opts.tape;
    EncodeResult enc = encode(m, input, tape);
    switch (m.kind) {
        case ModelKind::AE: {
            Tensor zt = awgn(enc.z, opts.link, tape);
            r.prediction = decode(m, zt, tape);
            break;
        }
        case ModelKind::VAE: {
            r.mu = enc.mu;
            r.logvar = enc.logvar;
            Tensor z = (opts.mode == Mode::Train)
                           ? reparameterize(enc.mu, enc.logvar, opts.eps_seed, tape)
                           : enc.mu;  // eval decodes the posterior mean
            Tensor zt = awgn(z, opts.link, tape);
            r.prediction = decode(m, zt, tape);
            break;
        }
        case ModelKind::VQVAE: {
            r.z_e = enc.z;
            Tensor zt = awgn(enc.z, opts.link, tape);
            QuantizeResult q = vq_quantize(zt, m.codebook, tape);
            r.z_q = q.z_q;
            r.indices = std::move(q.indices);
            Tensor dec_in = (opts.mode == Mode::Train) ? straight_through(zt, r.z_q, tape) : r.z_q;
            r.prediction = decode(m, dec_in, tape);
            break;
        }
    }
    return r;
}

// Receiver view of the transmitted latent: AE/VAE pass the noisy latent
// straight to the decoder, VQ-VAE snaps it to the nearest codeword.
inline Tensor transmit(ModelBundle& m, const Tensor& z_e, const LinkConfig& link) {
    Tensor noisy = awgn(z_e, link, nullptr);
    if (m.kind == ModelKind::VQVAE) return vq_quantize(noisy, m.codebook, nullptr).z_q;
    return noisy;
}

}  // namespace chanpred
