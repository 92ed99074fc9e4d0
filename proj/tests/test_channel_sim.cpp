// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "chanpred/chanpred.hpp"
#include "support/oracles.hpp"

using namespace chanpred;
using Catch::Approx;

namespace {

ClusterProfile single_cluster(double delay_s, double aoa_rad, double doppler_rad) {
    ClusterProfile p;
    p.id = ProfileId::CdlA;
    p.name = "single";
    p.clusters = {{delay_s, 1.0, aoa_rad, doppler_rad}};
    return p;
}

ChannelConfig small_config() {
    ChannelConfig c;
    c.num_rx_antennas = 4;
    c.num_subcarriers = 64;
    c.num_symbols = 16;
    return c;
}

double phase_delta(std::complex<double> a, std::complex<double> b) {
    return std::arg(b * std::conj(a));
}

}  // namespace

TEST_CASE("make_profile: normalization, delay scaling, LOS flag") {
    for (ProfileId id : {ProfileId::CdlA, ProfileId::CdlB, ProfileId::CdlC, ProfileId::CdlD}) {
        ClusterProfile p = make_profile(id);
        double total = 0.0;
        double min_delay = 1.0;
        for (const auto& c : p.clusters) {
            total += c.power;
            min_delay = std::min(min_delay, c.delay_s);
        }
        INFO(p.name);
        CHECK(total == Approx(1.0).margin(1e-12));
        CHECK(min_delay == 0.0);
        CHECK(std::abs(p.rms_delay_spread() - 30e-9) <= 1e-12);
        CHECK(p.los == (id == ProfileId::CdlD));
    }
    CHECK(make_profile(ProfileId::CdlD).k_factor_db == Approx(13.0));
    CHECK(make_profile("cdl-d").los);
    CHECK_THROWS_AS(make_profile("cdl-x"), config_error);
}

TEST_CASE("make_profile: distinct cluster sets per profile") {
    ClusterProfile a = make_profile(ProfileId::CdlA);
    ClusterProfile c = make_profile(ProfileId::CdlC);
    CHECK(a.clusters.size() != c.clusters.size());
}

TEST_CASE("synthesize: single unit-power cluster gives a constant grid") {
    ClusterProfile p = single_cluster(0.0, 0.0, std::numbers::pi / 2.0);  // cos(alpha) == 0
    ChannelConfig cfg = small_config();
    ChannelSample s = synthesize_channel_with_phases(p, cfg, {0.0});
    const auto first = s.at(0, 0, 0);
    CHECK(std::abs(first) == Approx(1.0).margin(1e-12));
    for (long long k = 0; k < cfg.num_rx_antennas; ++k)
        for (long long f = 0; f < cfg.num_subcarriers; f += 13)
            for (long long t = 0; t < cfg.num_symbols; ++t)
                CHECK(std::abs(s.at(k, f, t) - first) < 1e-12);
}

TEST_CASE("synthesize: two equal-power taps cancel at the half-cycle subcarrier") {
    const double df = 15e3;
    const long long nf = 32;
    const double tau2 = 0.5 / (static_cast<double>(nf) * df);
    ClusterProfile p;
    p.id = ProfileId::CdlA;
    p.name = "two-tap";
    p.clusters = {{0.0, 0.5, 0.0, std::numbers::pi / 2.0}, {tau2, 0.5, 0.0, std::numbers::pi / 2.0}};
    ChannelConfig cfg = small_config();
    cfg.subcarrier_spacing_hz = df;
    ChannelSample s = synthesize_channel_with_phases(p, cfg, {0.0, 0.0});
    for (long long t = 0; t < cfg.num_symbols; ++t) CHECK(std::abs(s.at(0, nf, t)) < 1e-9);
}

TEST_CASE("synthesize: steering, Doppler and delay phase laws") {
    ChannelConfig cfg = small_config();
    const double theta = 0.7, alpha = 1.1, tau = 100e-9;
    ClusterProfile p = single_cluster(tau, theta, alpha);
    ChannelSample s = synthesize_channel_with_phases(p, cfg, {1.234});

    // Adjacent antennas: -pi * sin(theta) at half-wavelength spacing.
    CHECK(phase_delta(s.at(0, 3, 5), s.at(1, 3, 5)) ==
          Approx(-std::numbers::pi * std::sin(theta)).margin(1e-9));
    // Adjacent symbols: 2 pi nu_max cos(alpha) T_sym.
    CHECK(phase_delta(s.at(2, 10, 7), s.at(2, 10, 8)) ==
          Approx(2.0 * std::numbers::pi * cfg.max_doppler_hz * std::cos(alpha) * cfg.symbol_time_s())
              .margin(1e-9));
    // Adjacent subcarriers: -2 pi tau delta_f.
    CHECK(phase_delta(s.at(1, 20, 3), s.at(1, 21, 3)) ==
          Approx(-2.0 * std::numbers::pi * tau * cfg.subcarrier_spacing_hz).margin(1e-9));
}

TEST_CASE("synthesize: per-sample mean power is one") {
    ClusterProfile p = make_profile(ProfileId::CdlC);
    ChannelConfig cfg = small_config();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ChannelSample s = synthesize_channel(p, cfg, seed);
        CHECK(s.mean_power() == Approx(1.0).margin(1e-9));
        for (double v : s.re) REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("generate_dataset: derivation, determinism, seed independence") {
    ClusterProfile p = make_profile(ProfileId::CdlB);
    ChannelConfig cfg = small_config();

    Dataset one = generate_dataset(p, cfg, 1, 77);
    ChannelSample direct = synthesize_channel(p, cfg, derive_seed(77, 0));
    CHECK(one.samples[0].re == direct.re);
    CHECK(one.samples[0].im == direct.im);

    Dataset a = generate_dataset(p, cfg, 6, 123);
    Dataset b = generate_dataset(p, cfg, 6, 123);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].re == b.samples[i].re);
        CHECK(a.samples[i].im == b.samples[i].im);
    }

    Dataset c = generate_dataset(p, cfg, 6, 124);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(a.samples[i].re != c.samples[i].re);
}

TEST_CASE("empirical RMS delay spread from the inverse-FFT power-delay profile") {
    // High-resolution grid: 4096 x 60 kHz spans 245.76 MHz, so the delay
    // bin is ~4.07 ns against a 30 ns target spread. A Hann window keeps
    // sidelobe energy from leaking into the tau^2 moment.
    ChannelConfig cfg;
    cfg.num_rx_antennas = 2;
    cfg.m_s = 1;
    cfg.m_r = 1;
    cfg.observed_antennas = {0};
    cfg.predicted_antennas = {1};
    cfg.num_subcarriers = 4096;
    cfg.num_symbols = 1;
    cfg.subcarrier_spacing_hz = 60e3;
    const long long F = cfg.num_subcarriers;
    ClusterProfile prof = make_profile(ProfileId::CdlC, cfg.delay_spread_s);

    std::vector<double> pdp(static_cast<std::size_t>(F), 0.0);
    std::vector<std::complex<double>> line(static_cast<std::size_t>(F));
    const int n_seeds = 200;
    for (int seed = 0; seed < n_seeds; ++seed) {
        ChannelSample s = synthesize_channel(prof, cfg, static_cast<std::uint64_t>(seed));
        for (long long k = 0; k < cfg.num_rx_antennas; ++k) {
            for (long long f = 0; f < F; ++f) {
                const double w =
                    0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(f) /
                                         static_cast<double>(F - 1));
                line[static_cast<std::size_t>(f)] = w * s.at(k, f, 0);
            }
            oracles::fft(line, /*inverse=*/true);
            for (long long f = 0; f < F; ++f)
                pdp[static_cast<std::size_t>(f)] += std::norm(line[static_cast<std::size_t>(f)]);
        }
    }

    // Signed delays; restrict moments to |tau| <= 1 us (the profile support
    // is < 200 ns, the rest of the range only holds estimator noise).
    const double bin = 1.0 / (static_cast<double>(F) * cfg.subcarrier_spacing_hz);
    double p0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (long long f = 0; f < F; ++f) {
        const double tau = (f <= F / 2 ? static_cast<double>(f) : static_cast<double>(f - F)) * bin;
        if (std::abs(tau) > 1e-6) continue;
        const double p = pdp[static_cast<std::size_t>(f)];
        p0 += p;
        m1 += p * tau;
        m2 += p * tau * tau;
    }
    m1 /= p0;
    m2 /= p0;
    const double rms = std::sqrt(m2 - m1 * m1);
    INFO("empirical rms delay spread " << rms * 1e9 << " ns");
    CHECK(rms == Approx(30e-9).epsilon(0.10));
}

TEST_CASE("split_antennas: shapes, defaults, bit-exact reassembly") {
    ClusterProfile p = make_profile(ProfileId::CdlC);
    ChannelConfig cfg = small_config();
    ChannelSample s = synthesize_channel(p, cfg, 5);
    auto [hs, hr] = split_antennas(s, cfg);
    CHECK(hs.shape() == Shape{4, 64, 16});
    CHECK(hr.shape() == Shape{4, 64, 16});

    // Default split observes antennas {0,1} and predicts {2,3}.
    CHECK(cfg.observed_antennas == std::vector<long long>{0, 1});
    CHECK(cfg.predicted_antennas == std::vector<long long>{2, 3});
    CHECK(hs.data()[0] == s.re[s.index(0, 0, 0)]);
    CHECK(hr.data()[0] == s.re[s.index(2, 0, 0)]);

    ChannelSample rebuilt = s;
    std::fill(rebuilt.re.begin(), rebuilt.re.end(), 0.0);
    std::fill(rebuilt.im.begin(), rebuilt.im.end(), 0.0);
    tensor_to_antennas(hs, cfg.observed_antennas, rebuilt);
    tensor_to_antennas(hr, cfg.predicted_antennas, rebuilt);
    CHECK(rebuilt.re == s.re);
    CHECK(rebuilt.im == s.im);

    ChannelConfig bad = cfg;
    bad.predicted_antennas = {1, 2};
    CHECK_THROWS_AS(split_antennas(s, bad), config_error);
}

TEST_CASE("dataset files: round-trip, size, corruption") {
    ClusterProfile p = make_profile(ProfileId::CdlD);
    ChannelConfig cfg = small_config();
    Dataset ds = generate_dataset(p, cfg, 3, 99);

    const std::string bytes = serialize_dataset(ds);
    CHECK(bytes.size() == 32 + 3ull * 4 * 64 * 16 * 2 * 8);

    Dataset back = deserialize_dataset(bytes);
    CHECK(back.profile == ds.profile);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].re == ds.samples[i].re);
        CHECK(back.samples[i].im == ds.samples[i].im);
    }

    const std::string path = "test_dataset_roundtrip.mchd";
    save_dataset(ds, path);
    Dataset loaded = load_dataset(path);
    CHECK(serialize_dataset(loaded) == bytes);
    std::remove(path.c_str());

    std::string corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(deserialize_dataset(corrupt), format_error);

    std::string truncated = bytes.substr(0, 40);
    CHECK_THROWS_AS(deserialize_dataset(truncated), format_error);

    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    CHECK_THROWS_WITH(deserialize_dataset(wrong_version),
                      Catch::Matchers::ContainsSubstring("version"));
}
