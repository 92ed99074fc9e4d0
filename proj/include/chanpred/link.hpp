// SPDX-License-Identifier: Apache-2.0
#pragma once

// AWGN model for the latent feedback link. SNR is defined against the
// per-sample latent power: sigma_n^2 = mean(z^2) / 10^(snr_db/10), so a
// given snr_db means the same thing for models with different latent
// scales. "off" is a bit-exact identity.

#include <cmath>
#include <cstdint>
#include <optional>

#include "chanpred/autodiff.hpp"
#include "chanpred/rng.hpp"
#include "chanpred/tensor.hpp"

namespace chanpred {

struct LinkConfig {
    std::optional<double> snr_db;  // nullopt == link off
    std::uint64_t seed = 0;

    bool off() const { return !snr_db.has_value(); }
    static LinkConfig disabled() { return LinkConfig{}; }
    static LinkConfig at(double snr_db, std::uint64_t seed) { return LinkConfig{snr_db, seed}; }
};

// z + n with n ~ N(0, sigma_n^2 I). The noise tensor is a constant: when a
// tape is supplied, the gradient passes through the add to z only.
inline Tensor awgn(const Tensor& z, const LinkConfig& link, Tape* tape = nullptr) {
    if (link.off()) return z;
    const long long n = z.numel();
    double power = 0.0;
    for (long long i = 0; i < n; ++i) power += z.data()[i] * z.data()[i];
    power /= static_cast<double>(n);
    const double sigma = std::sqrt(power / std::pow(10.0, *link.snr_db / 10.0));
    Rng rng(link.seed);
    Tensor noise = Tensor::gaussian(z.shape(), rng, 0.0, sigma);
    return add(z, noise, tape);
}

}  // namespace chanpred
