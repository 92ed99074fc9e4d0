// SPDX-License-Identifier: Apache-2.0
#pragma once

// Mini-batch Adam training, NMSE evaluation over SNR sweeps and OOD
// profiles. Everything is a pure function of (inputs, seed): shuffles,
// VAE sampling noise and link noise all come from derived sub-seeds, so
// runs reproduce bit-for-bit on one platform.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chanpred/adam.hpp"
#include "chanpred/channel.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/losses.hpp"
#include "chanpred/metrics.hpp"
#include "chanpred/model_io.hpp"
#include "chanpred/models.hpp"

namespace chanpred {

struct TrainConfig {
    double lr = 1e-3;
    long long batch_size = 32;
    long long epochs = 30;
    double kl_weight = 2.5e-5;
    double commit_beta = 0.25;
    std::uint64_t seed = 1;
    long long codebook_size = kDefaultCodebookSize;
    // Optional training-time link noise; off by default (train clean,
    // evaluate noisy). When on, one SNR is drawn per batch from the range.
    bool noise_aware = false;
    double noise_db_min = 0.0;
    double noise_db_max = 30.0;

    void validate() const {
        if (lr <= 0.0) throw config_error("train config: lr must be > 0");
        if (batch_size < 1) throw config_error("train config: batch_size must be >= 1");
        if (epochs < 0) throw config_error("train config: epochs must be >= 0");
        if (kl_weight < 0.0) throw config_error("train config: kl_weight must be >= 0");
        if (commit_beta < 0.0) throw config_error("train config: commit_beta must be >= 0");
        if (codebook_size < 1) throw config_error("train config: codebook_size must be >= 1");
        if (noise_aware && noise_db_min > noise_db_max)
            throw config_error("train config: noise_db_min exceeds noise_db_max");
    }
};

struct EpochTrace {
    long long epoch = 0;
    LossBreakdown loss;
};

struct TrainResult {
    ModelBundle model;
    std::vector<EpochTrace> trace;
};

inline std::string trace_to_csv(const std::vector<EpochTrace>& trace, std::uint64_t seed,
                                std::uint64_t config_hash) {
    std::string out = csv_provenance(seed, config_hash);
    out += "epoch,total,mse,kl,vq,commit\n";
    for (const auto& t : trace) {
        out += std::to_string(t.epoch) + "," + detail::fmt("%.9e", t.loss.total) + "," +
               detail::fmt("%.9e", t.loss.mse) + "," + detail::fmt("%.9e", t.loss.kl) + "," +
               detail::fmt("%.9e", t.loss.vq) + "," + detail::fmt("%.9e", t.loss.commit) + "\n";
    }
    return out;
}

inline SampleLoss sample_loss(ModelKind kind, const Tensor& target, const ForwardResult& fwd,
                              const TrainConfig& cfg, Tape* tape) {
    switch (kind) {
        case ModelKind::AE: return loss_ae(target, fwd, tape);
        case ModelKind::VAE: return loss_vae(target, fwd, cfg.kl_weight, tape);
        case ModelKind::VQVAE: return loss_vqvae(target, fwd, cfg.commit_beta, tape);
    }
    throw config_error("unknown model kind");
}

inline TrainResult train(ModelKind kind, const Dataset& dataset, const ArchitectureSpec& arch,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.samples.empty()) throw config_error("train: dataset is empty");
    dataset.config.validate();

    TrainResult result;
    result.model = init_model(kind, arch, cfg.seed, cfg.codebook_size);
    ModelBundle& model = result.model;
    ParamSet params = model.params();
    AdamState adam(cfg.lr);

    const long long n = static_cast<long long>(dataset.samples.size());
    std::vector<std::size_t> order(static_cast<std::size_t>(n));

    // Pre-split once; tensors are read-only during training.
    std::vector<Tensor> inputs, targets;
    inputs.reserve(order.size());
    for (const auto& s : dataset.samples) {
        auto [hs, hr] = split_antennas(s, dataset.config);
        inputs.push_back(hs);
        targets.push_back(hr);
    }
    if (inputs[0].shape() != Shape{arch.in_channels, arch.in_h, arch.in_w})
        throw shape_error("train: dataset sample shape " + shape_to_string(inputs[0].shape()) +
                          " does not match architecture input " +
                          shape_to_string({arch.in_channels, arch.in_h, arch.in_w}));

    for (long long epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, seed_purpose::kShuffle, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }

        LossBreakdown epoch_sum;
        const std::uint64_t epoch_tag = static_cast<std::uint64_t>(epoch);
        long long batch_index = 0;
        for (long long start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const long long stop = std::min(n, start + cfg.batch_size);
            const long long bsz = stop - start;
            Tape tape;
            zero_grads(params);

            LinkConfig batch_link = LinkConfig::disabled();
            if (cfg.noise_aware) {
                Rng noise_rng(derive_seed(derive_seed(cfg.seed, seed_purpose::kTrainNoise, epoch_tag),
                                          static_cast<std::uint64_t>(batch_index)));
                batch_link.snr_db = noise_rng.uniform(cfg.noise_db_min, cfg.noise_db_max);
            }

            Tensor batch_total;
            for (long long slot = 0; slot < bsz; ++slot) {
                const std::size_t idx = order[static_cast<std::size_t>(start + slot)];
                const std::uint64_t pos_tag = static_cast<std::uint64_t>(start + slot);
                ForwardOptions opts;
                opts.mode = Mode::Train;
                opts.tape = &tape;
                opts.eps_seed = derive_seed(derive_seed(cfg.seed, seed_purpose::kVaeEps, epoch_tag), pos_tag);
                if (cfg.noise_aware) {
                    opts.link = batch_link;
                    opts.link.seed =
                        derive_seed(derive_seed(cfg.seed, seed_purpose::kTrainNoise, epoch_tag),
                                    0x10000000ULL + pos_tag);
                }
                ForwardResult fwd = forward(model, inputs[idx], opts);
                SampleLoss l = sample_loss(kind, targets[idx], fwd, cfg, &tape);
                batch_total = batch_total.defined() ? add(batch_total, l.total, &tape) : l.total;
                epoch_sum.total += l.total.item();
                epoch_sum.mse += l.mse;
                epoch_sum.kl += l.kl;
                epoch_sum.vq += l.vq;
                epoch_sum.commit += l.commit;
            }
            Tensor batch_loss = mul_scalar(batch_total, 1.0 / static_cast<double>(bsz), &tape);
            if (!std::isfinite(batch_loss.item()))
                throw numeric_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            backward(batch_loss, tape);
            adam.step(params);
        }

        EpochTrace t;
        t.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(n);
        t.loss.total = epoch_sum.total * inv;
        t.loss.mse = epoch_sum.mse * inv;
        t.loss.kl = epoch_sum.kl * inv;
        t.loss.vq = epoch_sum.vq * inv;
        t.loss.commit = epoch_sum.commit * inv;
        result.trace.push_back(t);
    }
    return result;
}

using SnrPoint = std::optional<double>;  // nullopt == link off

inline std::uint64_t snr_tag(const SnrPoint& snr) {
    return snr ? std::bit_cast<std::uint64_t>(*snr) : 0xffffffffffffffffULL;
}

// One NMSE figure per SNR point, aggregated over the concatenated
// (target, prediction) pairs of the whole dataset. Noise streams are
// derived per (seed, snr, sample), so results are schedule-independent.
inline std::vector<MetricsRow> evaluate_sweep(ModelBundle& model, const Dataset& dataset,
                                              const std::vector<SnrPoint>& snr_list,
                                              std::uint64_t seed) {
    if (snr_list.empty()) throw config_error("evaluate_sweep: snr list is empty");
    if (dataset.samples.empty()) throw config_error("evaluate_sweep: dataset is empty");
    dataset.config.validate();

    std::vector<Tensor> inputs, targets;
    for (const auto& s : dataset.samples) {
        auto [hs, hr] = split_antennas(s, dataset.config);
        inputs.push_back(hs);
        targets.push_back(hr);
    }

    // Population variance of the concatenated reference elements.
    double sum = 0.0, sumsq = 0.0;
    long long count = 0;
    for (const auto& t : targets) {
        for (long long i = 0; i < t.numel(); ++i) {
            sum += t.data()[i];
            sumsq += t.data()[i] * t.data()[i];
        }
        count += t.numel();
    }
    const double mean_x = sum / static_cast<double>(count);
    const double var = sumsq / static_cast<double>(count) - mean_x * mean_x;
    if (var <= 0.0) throw numeric_error("evaluate_sweep: reference has zero variance");

    std::vector<MetricsRow> rows;
    for (const auto& snr : snr_list) {
        const std::uint64_t noise_base = derive_seed(seed, seed_purpose::kLinkNoise, snr_tag(snr));
        double sse = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            ForwardOptions opts;
            opts.mode = Mode::Eval;
            if (snr) opts.link = LinkConfig::at(*snr, derive_seed(noise_base, static_cast<std::uint64_t>(i)));
            ForwardResult fwd = forward(model, inputs[i], opts);
            const Tensor& t = targets[i];
            for (long long j = 0; j < t.numel(); ++j) {
                const double d = t.data()[j] - fwd.prediction.data()[j];
                sse += d * d;
            }
        }
        MetricsRow row;
        row.model = model_kind_name(model.kind);
        row.profile = profile_name(dataset.profile);
        row.snr_db = snr;
        row.nmse_db = nmse_to_db((sse / static_cast<double>(count)) / var);
        row.n_samples = static_cast<long long>(inputs.size());
        rows.push_back(row);
    }
    return rows;
}

// Fresh test sets per profile, evaluated at the given SNR points.
// Per-profile dataset and noise seeds are derived from (seed, profile id),
// so evaluating CDL-C here reproduces an equally-seeded direct sweep.
inline std::vector<MetricsRow> evaluate_ood(ModelBundle& model, const std::vector<ProfileId>& profiles,
                                            const ChannelConfig& config, long long n, std::uint64_t seed,
                                            const std::vector<SnrPoint>& snr_list = {SnrPoint{30.0},
                                                                                     SnrPoint{}}) {
    std::vector<MetricsRow> rows;
    for (ProfileId p : profiles) {
        const std::uint64_t tag = static_cast<std::uint64_t>(p);
        Dataset ds = generate_dataset(make_profile(p, config.delay_spread_s), config, n,
                                      derive_seed(seed, seed_purpose::kDataset, tag));
        auto profile_rows = evaluate_sweep(model, ds, snr_list, derive_seed(seed, tag));
        rows.insert(rows.end(), profile_rows.begin(), profile_rows.end());
    }
    return rows;
}

}  // namespace chanpred
