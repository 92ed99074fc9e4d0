// SPDX-License-Identifier: Apache-2.0
#pragma once

// Complexity measurements: median single-sample inference latency, wall
// time of one training epoch on a fixed 32-sample reference set, parameter
// count, and the live-tensor high-water mark during inference.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "chanpred/metrics.hpp"
#include "chanpred/models.hpp"
#include "chanpred/train.hpp"

namespace chanpred {

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// A channel config whose split matches the model's input/output tensors.
inline ChannelConfig config_for_arch(const ArchitectureSpec& arch) {
    ChannelConfig c;
    c.m_s = arch.in_channels / 2;
    c.m_r = arch.out_channels / 2;
    c.num_rx_antennas = c.m_s + c.m_r;
    c.num_subcarriers = arch.in_h;
    c.num_symbols = arch.in_w;
    c.observed_antennas.clear();
    c.predicted_antennas.clear();
    for (long long i = 0; i < c.m_s; ++i) c.observed_antennas.push_back(i);
    for (long long i = 0; i < c.m_r; ++i) c.predicted_antennas.push_back(c.m_s + i);
    return c;
}

}  // namespace detail

inline constexpr long long kBenchTrainSamples = 32;

inline BenchRow benchmark(ModelBundle& model, long long n_warmup = 10, long long n_iters = 100) {
    if (n_iters < 1) throw config_error("benchmark: n_iters must be >= 1");
    using clock = std::chrono::steady_clock;

    BenchRow row;
    row.model = model_kind_name(model.kind);
    row.param_count = param_count(model);

    Tensor input = Tensor::gaussian({model.arch.in_channels, model.arch.in_h, model.arch.in_w},
                                    /*seed=*/42, 0.0, 1.0);
    ForwardOptions opts;  // eval mode, link off
    for (long long i = 0; i < n_warmup; ++i) (void)forward(model, input, opts);

    reset_peak_tensor_bytes();
    std::vector<double> times_ms;
    times_ms.reserve(static_cast<std::size_t>(n_iters));
    for (long long i = 0; i < n_iters; ++i) {
        const auto t0 = clock::now();
        (void)forward(model, input, opts);
        const auto t1 = clock::now();
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    row.inference_ms_median = detail::median(std::move(times_ms));
    row.peak_mem_bytes = peak_tensor_bytes();

    // One epoch over a fixed small reference set; relative figure only.
    ChannelConfig cfg = detail::config_for_arch(model.arch);
    Dataset ds = generate_dataset(make_profile(ProfileId::CdlC, cfg.delay_spread_s), cfg,
                                  kBenchTrainSamples, /*seed=*/7);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = kBenchTrainSamples;
    tc.seed = 7;
    if (model.kind == ModelKind::VQVAE) tc.codebook_size = model.codebook.size();
    const auto t0 = clock::now();
    (void)train(model.kind, ds, model.arch, tc);
    const auto t1 = clock::now();
    row.train_s_per_epoch = std::chrono::duration<double>(t1 - t0).count();
    return row;
}

}  // namespace chanpred
