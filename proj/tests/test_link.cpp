// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chanpred/chanpred.hpp"

using namespace chanpred;
using Catch::Approx;

namespace {

double noise_power_ratio(double snr_db, std::uint64_t seed, long long n) {
    Tensor z = Tensor::gaussian({n}, seed, 0.0, 1.3);
    Tensor noisy = awgn(z, LinkConfig::at(snr_db, seed + 1));
    double zp = 0.0, np = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double d = noisy.data()[i] - z.data()[i];
        np += d * d;
        zp += z.data()[i] * z.data()[i];
    }
    return np / zp;
}

}  // namespace

TEST_CASE("awgn: off link is a bit-exact identity") {
    Tensor z = Tensor::gaussian({4096}, 3, 0.0, 1.0);
    Tensor out = awgn(z, LinkConfig::disabled());
    CHECK(out.storage_id() == z.storage_id());
    CHECK(out.values() == z.values());
}

TEST_CASE("awgn: realized noise power tracks the configured SNR") {
    CHECK(noise_power_ratio(0.0, 11, 1000000) == Approx(1.0).epsilon(0.05));
    CHECK(noise_power_ratio(10.0, 12, 1000000) == Approx(0.1).epsilon(0.05));
    CHECK(noise_power_ratio(20.0, 13, 1000000) == Approx(0.01).epsilon(0.05));
}

TEST_CASE("awgn: deterministic per seed and scale-relative") {
    Tensor z = Tensor::gaussian({512}, 21, 0.0, 0.7);
    Tensor a = awgn(z, LinkConfig::at(5.0, 99));
    Tensor b = awgn(z, LinkConfig::at(5.0, 99));
    CHECK(a.values() == b.values());

    // SNR is defined against the latent's own power: scaling z scales the
    // noise with it, so the ratio is invariant.
    Tensor z2 = Tensor::zeros({512});
    for (long long i = 0; i < 512; ++i) z2.data()[i] = 37.0 * z.data()[i];
    Tensor a2 = awgn(z2, LinkConfig::at(5.0, 99));
    for (long long i = 0; i < 512; ++i)
        CHECK(a2.data()[i] - z2.data()[i] == Approx(37.0 * (a.data()[i] - z.data()[i])).epsilon(1e-12));
}

TEST_CASE("transmit: identity for AE, quantization for VQVAE") {
    ArchitectureSpec arch = default_architecture(2, 8, 8, 2, 8);
    ModelBundle ae = init_model(ModelKind::AE, arch, 1);
    ModelBundle vq = init_model(ModelKind::VQVAE, arch, 1, /*codebook_size=*/32);

    Tensor z = Tensor::gaussian({8, 2, 2}, 5, 0.0, 0.01);
    CHECK(transmit(ae, z, LinkConfig::disabled()).values() == z.values());
    CHECK(transmit(vq, z, LinkConfig::disabled()).values() == vq_quantize(z, vq.codebook).z_q.values());
}

TEST_CASE("transmit: snapping recovers the codeword below the d_min/2 threshold") {
    // Scaled one-hot rows: pairwise distance is a*sqrt(2) exactly.
    const long long k = 8, d = 8;
    const double a = 2.0;
    Codebook cb;
    cb.embeddings = Tensor::zeros({k, d});
    for (long long i = 0; i < k; ++i) cb.embeddings.data()[i * d + i] = a;
    const double d_min = a * std::sqrt(2.0);

    ArchitectureSpec arch = default_architecture(2, 8, 8, 2, d);
    ModelBundle vq = init_model(ModelKind::VQVAE, arch, 2, k);
    vq.codebook = cb;

    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const long long target = static_cast<long long>(rng.next_u64() % k);
        // One latent position holding codeword `target` plus noise of norm
        // strictly below d_min/2.
        Tensor z = Tensor::zeros({d, 1, 1});
        std::vector<double> n(static_cast<std::size_t>(d));
        double norm = 0.0;
        for (auto& v : n) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double target_norm = 0.95 * d_min / 2.0;
        for (long long c = 0; c < d; ++c)
            z.data()[c] = cb.embeddings.data()[target * d + c] + n[static_cast<std::size_t>(c)] * target_norm / norm;
        QuantizeResult q = vq_quantize(z, vq.codebook);
        REQUIRE(q.indices[0] == target);
    }
}
