// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>

#include "chanpred/autodiff.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/models.hpp"
#include "chanpred/tensor.hpp"

namespace chanpred {

// MSE(x, x_hat) = (1/N) sum (x_i - x_hat_i)^2 as a recorded graph node.
inline Tensor mse_loss(const Tensor& target, const Tensor& prediction, Tape* tape = nullptr) {
    return mean(square(sub(prediction, target, tape), tape), tape);
}

// Plain-value MSE for evaluation paths.
inline double mse_value(const Tensor& target, const Tensor& prediction) {
    if (!same_shape(target, prediction))
        throw shape_error("mse: shape mismatch " + shape_to_string(target.shape()) + " vs " +
                          shape_to_string(prediction.shape()));
    const long long n = target.numel();
    double acc = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double d = target.data()[i] - prediction.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

// NMSE = MSE / Var(x), population variance of the reference. Scale
// invariant by construction; a zero-variance reference is rejected.
inline double nmse_value(const Tensor& target, const Tensor& prediction) {
    const double m = mse_value(target, prediction);
    const long long n = target.numel();
    double mean_x = 0.0;
    for (long long i = 0; i < n; ++i) mean_x += target.data()[i];
    mean_x /= static_cast<double>(n);
    double var = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double d = target.data()[i] - mean_x;
        var += d * d;
    }
    var /= static_cast<double>(n);
    if (var == 0.0) throw numeric_error("nmse: reference has zero variance (degenerate input)");
    return m / var;
}

inline constexpr double kNmseDbFloor = -100.0;

inline double nmse_to_db(double nmse) {
    if (nmse <= 0.0) return kNmseDbFloor;
    return std::max(kNmseDbFloor, 10.0 * std::log10(nmse));
}

inline double nmse_db_value(const Tensor& target, const Tensor& prediction) {
    return nmse_to_db(nmse_value(target, prediction));
}

// KL(q || N(0,I)) for a diagonal gaussian, summed over elements:
// 0.5 * sum(mu^2 + exp(logvar) - logvar - 1). Batch reduction (mean over
// samples) happens where per-sample losses are averaged.
inline Tensor kl_gaussian(const Tensor& mu, const Tensor& logvar, Tape* tape = nullptr) {
    if (!same_shape(mu, logvar)) throw shape_error("kl_gaussian: mu/logvar shapes differ");
    const double n = static_cast<double>(mu.numel());
    Tensor ones = Tensor::constant(mu.shape(), 1.0);
    Tensor inner = sub(add(square(mu, tape), exp(logvar, tape), tape), add(logvar, ones, tape), tape);
    return mul_scalar(mul_scalar(mean(inner, tape), n, tape), 0.5, tape);
}

// Per-sample loss with its graph-node total and plain-value parts.
struct SampleLoss {
    Tensor total;
    double mse = 0.0, kl = 0.0, vq = 0.0, commit = 0.0;
};

// Aggregated over a batch; total == mse + kl_weight*kl + vq + beta*commit
// (absent terms are zero).
struct LossBreakdown {
    double total = 0.0, mse = 0.0, kl = 0.0, vq = 0.0, commit = 0.0;
};

inline SampleLoss loss_ae(const Tensor& target, const ForwardResult& fwd, Tape* tape = nullptr) {
    SampleLoss l;
    l.total = mse_loss(target, fwd.prediction, tape);
    l.mse = l.total.item();
    return l;
}

inline SampleLoss loss_vae(const Tensor& target, const ForwardResult& fwd, double kl_weight,
                           Tape* tape = nullptr) {
    if (!fwd.mu.defined() || !fwd.logvar.defined())
        throw config_error("loss_vae: forward result is missing mu/logvar auxiliaries");
    SampleLoss l;
    Tensor rec = mse_loss(target, fwd.prediction, tape);
    Tensor kl = mul_scalar(kl_gaussian(fwd.mu, fwd.logvar, tape), kl_weight, tape);
    l.total = add(rec, kl, tape);
    l.mse = rec.item();
    l.kl = kl.item();  // weighted contribution, so total == mse + kl
    return l;
}

// VQ terms use the mean over latent grid positions of the per-position
// squared distance (= sum over the vector dim, mean over positions):
//   vq     = mean_pos || sg[z_e] - z_q ||^2   -> updates the codebook only
//   commit = mean_pos || z_e - sg[z_q] ||^2   -> updates the encoder only
inline SampleLoss loss_vqvae(const Tensor& target, const ForwardResult& fwd, double commit_beta,
                             Tape* tape = nullptr) {
    if (!fwd.z_e.defined() || !fwd.z_q.defined())
        throw config_error("loss_vqvae: forward result is missing z_e/z_q auxiliaries");
    SampleLoss l;
    Tensor rec = mse_loss(target, fwd.prediction, tape);
    const double d = static_cast<double>(fwd.z_e.shape()[0]);
    Tensor vq = mul_scalar(mean(square(sub(detach(fwd.z_e), fwd.z_q, tape), tape), tape), d, tape);
    Tensor commit = mul_scalar(
        mul_scalar(mean(square(sub(fwd.z_e, detach(fwd.z_q), tape), tape), tape), d, tape),
        commit_beta, tape);
    l.total = add(add(rec, vq, tape), commit, tape);
    l.mse = rec.item();
    l.vq = vq.item();
    l.commit = commit.item();  // beta-weighted contribution, so total == mse + vq + commit
    return l;
}

}  // namespace chanpred
