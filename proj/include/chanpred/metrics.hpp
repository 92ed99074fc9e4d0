// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "chanpred/dataset_io.hpp"

namespace chanpred {

inline constexpr const char* kVersion = "0.1.0";

struct MetricsRow {
    std::string model;
    std::string profile;
    std::optional<double> snr_db;  // nullopt == link off
    double nmse_db = 0.0;
    long long n_samples = 0;
};

struct BenchRow {
    std::string model;
    double inference_ms_median = 0.0;
    double train_s_per_epoch = 0.0;
    long long param_count = 0;
    long long peak_mem_bytes = 0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;
    std::vector<BenchRow> bench;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace detail

inline std::string snr_to_string(const std::optional<double>& snr_db) {
    if (!snr_db) return "off";
    return detail::fmt("%g", *snr_db);
}

// Provenance line carried by every CSV so runs can be audited and
// compared byte-for-byte.
inline std::string csv_provenance(std::uint64_t seed, std::uint64_t config_hash) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# seed=%llu, version=%s, config-hash=%016llx\n",
                  static_cast<unsigned long long>(seed), kVersion,
                  static_cast<unsigned long long>(config_hash));
    return buf;
}

inline std::string metrics_to_csv(const std::vector<MetricsRow>& rows, std::uint64_t seed,
                                  std::uint64_t config_hash) {
    std::string out = csv_provenance(seed, config_hash);
    out += "model,profile,snr_db,nmse_db,n_samples\n";
    for (const auto& r : rows) {
        out += r.model + "," + r.profile + "," + snr_to_string(r.snr_db) + "," +
               detail::fmt("%.6f", r.nmse_db) + "," + std::to_string(r.n_samples) + "\n";
    }
    return out;
}

inline std::string bench_to_csv(const std::vector<BenchRow>& rows, std::uint64_t seed,
                                std::uint64_t config_hash) {
    std::string out = csv_provenance(seed, config_hash);
    out += "model,inference_ms_median,train_s_per_epoch,param_count,peak_mem_bytes\n";
    for (const auto& r : rows) {
        out += r.model + "," + detail::fmt("%.6f", r.inference_ms_median) + "," +
               detail::fmt("%.6f", r.train_s_per_epoch) + "," + std::to_string(r.param_count) + "," +
               std::to_string(r.peak_mem_bytes) + "\n";
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    detail::write_file_bytes(path, text);
}

}  // namespace chanpred
