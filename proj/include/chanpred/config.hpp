// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: a flat JSON document of dotted keys. Every key has a
// built-in default; unknown keys are rejected so typos fail loudly.
// Precedence: built-in defaults < config file < command-line flags.

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "chanpred/channel.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/models.hpp"
#include "chanpred/train.hpp"

namespace chanpred {

class RunConfig {
  public:
    RunConfig() : values_(defaults()) {}

    static nlohmann::json defaults() {
        return {
            {"channel.num_antennas", 4},
            {"channel.antenna_spacing", 0.5},
            {"channel.carrier_hz", 40e9},
            {"channel.subcarrier_spacing_hz", 15e3},
            {"channel.num_subcarriers", 64},
            {"channel.num_symbols", 16},
            {"channel.delay_spread_s", 30e-9},
            {"channel.max_doppler_hz", 30.0},
            {"channel.m_s", 2},
            {"channel.m_r", 2},
            {"channel.observed_antennas", nlohmann::json::array({0, 1})},
            {"channel.predicted_antennas", nlohmann::json::array({2, 3})},
            {"arch.latent_dim", 64},
            {"model.codebook_size", 512},
            {"train.lr", 0.001},
            {"train.batch_size", 32},
            {"train.epochs", 30},
            {"train.kl_weight", 0.000025},
            {"train.commit_beta", 0.25},
            {"train.seed", 1},
            {"train.noise_aware", false},
            {"train.noise_db_min", 0.0},
            {"train.noise_db_max", 30.0},
        };
    }

    void merge_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config file '" + path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw format_error("config file '" + path + "': " + e.what());
        }
        if (!doc.is_object()) throw format_error("config file '" + path + "' must hold a JSON object");
        merge(doc);
    }

    void merge(const nlohmann::json& doc) {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (!values_.contains(it.key()))
                throw config_error("unknown config key '" + it.key() + "'");
            values_[it.key()] = it.value();
        }
    }

    void set(const std::string& key, const nlohmann::json& value) {
        if (!values_.contains(key)) throw config_error("unknown config key '" + key + "'");
        values_[key] = value;
    }

    const nlohmann::json& raw() const { return values_; }

    // Paper-scale grid (full OFDM frame, 16-antenna array).
    void apply_full_scale() {
        values_["channel.num_antennas"] = 16;
        values_["channel.num_subcarriers"] = 624;
        values_["channel.num_symbols"] = 140;
    }

    ChannelConfig channel_config() const {
        ChannelConfig c;
        c.num_rx_antennas = get_int("channel.num_antennas");
        c.antenna_spacing = get_double("channel.antenna_spacing");
        c.carrier_hz = get_double("channel.carrier_hz");
        c.subcarrier_spacing_hz = get_double("channel.subcarrier_spacing_hz");
        c.num_subcarriers = get_int("channel.num_subcarriers");
        c.num_symbols = get_int("channel.num_symbols");
        c.delay_spread_s = get_double("channel.delay_spread_s");
        c.max_doppler_hz = get_double("channel.max_doppler_hz");
        c.m_s = get_int("channel.m_s");
        c.m_r = get_int("channel.m_r");
        c.observed_antennas = get_int_list("channel.observed_antennas");
        c.predicted_antennas = get_int_list("channel.predicted_antennas");
        c.validate();
        return c;
    }

    TrainConfig train_config() const {
        TrainConfig t;
        t.lr = get_double("train.lr");
        t.batch_size = get_int("train.batch_size");
        t.epochs = get_int("train.epochs");
        t.kl_weight = get_double("train.kl_weight");
        t.commit_beta = get_double("train.commit_beta");
        t.seed = static_cast<std::uint64_t>(get_int("train.seed"));
        t.codebook_size = get_int("model.codebook_size");
        t.noise_aware = get_bool("train.noise_aware");
        t.noise_db_min = get_double("train.noise_db_min");
        t.noise_db_max = get_double("train.noise_db_max");
        t.validate();
        return t;
    }

    ArchitectureSpec architecture() const {
        const ChannelConfig c = channel_config();
        return default_architecture(2 * c.m_s, c.num_subcarriers, c.num_symbols, 2 * c.m_r,
                                    get_int("arch.latent_dim"));
    }

    // FNV-1a over the canonical dump (object keys are stored sorted).
    std::uint64_t hash() const {
        const std::string dump = values_.dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : dump) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

  private:
    long long get_int(const std::string& key) const {
        const auto& v = values_.at(key);
        if (!v.is_number_integer())
            throw config_error("config key '" + key + "' must be an integer");
        return v.get<long long>();
    }
    double get_double(const std::string& key) const {
        const auto& v = values_.at(key);
        if (!v.is_number())
            throw config_error("config key '" + key + "' must be a number");
        return v.get<double>();
    }
    bool get_bool(const std::string& key) const {
        const auto& v = values_.at(key);
        if (!v.is_boolean()) throw config_error("config key '" + key + "' must be a boolean");
        return v.get<bool>();
    }
    std::vector<long long> get_int_list(const std::string& key) const {
        const auto& v = values_.at(key);
        if (!v.is_array()) throw config_error("config key '" + key + "' must be an array");
        std::vector<long long> out;
        for (const auto& e : v) {
            if (!e.is_number_integer())
                throw config_error("config key '" + key + "' must hold integers");
            out.push_back(e.get<long long>());
        }
        return out;
    }

    nlohmann::json values_;
};

}  // namespace chanpred
