// SPDX-License-Identifier: Apache-2.0
//
// chanpred CLI: dataset generation, model training, NMSE/SNR sweeps,
// out-of-distribution evaluation and complexity benchmarks.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O or file-format
// error, 4 numeric/training error, 5 shape mismatch.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chanpred/chanpred.hpp"

namespace {

using namespace chanpred;

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<SnrPoint> parse_snr_list(const std::string& text) {
    std::vector<SnrPoint> out;
    for (const auto& tok : split_csv_list(text)) {
        if (tok.empty()) continue;
        if (tok == "off") {
            out.push_back(std::nullopt);
            continue;
        }
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw config_error("invalid SNR token '" + tok + "' (expected a dB value or 'off')");
        out.push_back(v);
    }
    if (out.empty()) throw config_error("empty SNR list");
    return out;
}

struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> sets;

    RunConfig load() const {
        RunConfig rc;
        if (!config_path.empty()) rc.merge_file(config_path);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw config_error("--set expects key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(val);
            } catch (const nlohmann::json::exception&) {
                parsed = val;  // fall back to a raw string
            }
            rc.set(key, parsed);
        }
        return rc;
    }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file with flat dotted keys");
    cmd->add_option("--set", flags.sets, "override a config key, e.g. --set train.lr=0.0005");
}

int cmd_gen(const ConfigFlags& flags, const std::string& profile, long long samples,
            std::uint64_t seed, const std::string& out, bool full_scale) {
    RunConfig rc = flags.load();
    if (full_scale) rc.apply_full_scale();
    const ChannelConfig cc = rc.channel_config();
    const ClusterProfile prof = make_profile(profile, cc.delay_spread_s);
    if (samples < 1) throw config_error("--samples must be >= 1");
    Dataset ds = generate_dataset(prof, cc, samples, seed);
    save_dataset(ds, out);
    std::printf("wrote %s: n=%lld, grid [%lld x %lld x %lld], profile %s, rms delay spread %.3f ns (target %.3f)\n",
                out.c_str(), samples, cc.num_rx_antennas, cc.num_subcarriers, cc.num_symbols,
                prof.name.c_str(), prof.rms_delay_spread() * 1e9, cc.delay_spread_s * 1e9);
    return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& model_name, const std::string& data_path,
              const std::string& out, std::optional<long long> epochs,
              std::optional<std::uint64_t> seed, std::optional<double> lr,
              std::optional<long long> batch_size) {
    RunConfig rc = flags.load();
    if (epochs) rc.set("train.epochs", *epochs);
    if (seed) rc.set("train.seed", static_cast<long long>(*seed));
    if (lr) rc.set("train.lr", *lr);
    if (batch_size) rc.set("train.batch_size", *batch_size);

    const ModelKind kind = parse_model_kind(model_name);
    Dataset ds = load_dataset(data_path);
    // The dataset header fixes the grid; the config supplies the split.
    rc.set("channel.num_antennas", ds.config.num_rx_antennas);
    rc.set("channel.num_subcarriers", ds.config.num_subcarriers);
    rc.set("channel.num_symbols", ds.config.num_symbols);
    ds.config = rc.channel_config();
    const TrainConfig tc = rc.train_config();
    const ArchitectureSpec arch = rc.architecture();

    TrainResult res = train(kind, ds, arch, tc);
    save_model(res.model, out);
    write_text_file(out + ".trace.csv", trace_to_csv(res.trace, tc.seed, rc.hash()));
    if (res.trace.empty()) {
        std::printf("trained %s for 0 epochs (initialized model written to %s)\n",
                    model_kind_name(kind).c_str(), out.c_str());
    } else {
        const auto& last = res.trace.back().loss;
        std::printf("trained %s for %lld epochs: total=%.6e mse=%.6e kl=%.6e vq=%.6e commit=%.6e\n",
                    model_kind_name(kind).c_str(), tc.epochs, last.total, last.mse, last.kl, last.vq,
                    last.commit);
    }
    return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& ckpt, const std::string& data_path,
              const std::string& snr_text, std::uint64_t seed, const std::string& out) {
    RunConfig rc = flags.load();
    ModelBundle model = load_model(ckpt);
    Dataset ds = load_dataset(data_path);
    rc.set("channel.num_antennas", ds.config.num_rx_antennas);
    rc.set("channel.num_subcarriers", ds.config.num_subcarriers);
    rc.set("channel.num_symbols", ds.config.num_symbols);
    ds.config = rc.channel_config();
    const auto snrs = parse_snr_list(snr_text);
    const auto rows = evaluate_sweep(model, ds, snrs, seed);
    write_text_file(out, metrics_to_csv(rows, seed, rc.hash()));
    std::printf("wrote %s: %zu rows (%s on %s)\n", out.c_str(), rows.size(),
                model_kind_name(model.kind).c_str(), profile_name(ds.profile).c_str());
    return 0;
}

int cmd_ood(const ConfigFlags& flags, const std::string& ckpt, const std::string& profiles_text,
            long long samples, std::uint64_t seed, const std::string& out) {
    RunConfig rc = flags.load();
    ModelBundle model = load_model(ckpt);
    std::vector<ProfileId> profiles;
    for (const auto& tok : split_csv_list(profiles_text))
        if (!tok.empty()) profiles.push_back(parse_profile(tok));
    if (profiles.empty()) throw config_error("empty profile list");
    if (samples < 1) throw config_error("--samples must be >= 1");
    const ChannelConfig cc = rc.channel_config();
    const auto rows = evaluate_ood(model, profiles, cc, samples, seed);
    write_text_file(out, metrics_to_csv(rows, seed, rc.hash()));
    std::printf("wrote %s: %zu rows over %zu profiles\n", out.c_str(), rows.size(), profiles.size());
    return 0;
}

int cmd_bench(const ConfigFlags& flags, const std::vector<std::string>& ckpts, long long iters,
              long long warmup, const std::string& out) {
    RunConfig rc = flags.load();
    if (ckpts.empty()) throw config_error("bench needs at least one --ckpt");
    std::vector<BenchRow> rows;
    for (const auto& path : ckpts) {
        ModelBundle model = load_model(path);
        rows.push_back(benchmark(model, warmup, iters));
    }
    write_text_file(out, bench_to_csv(rows, /*seed=*/0, rc.hash()));
    std::string order;
    for (const auto& r : rows) {
        if (!order.empty()) order += " <= ";
        order += r.model + " (" + detail::fmt("%.3f", r.inference_ms_median) + " ms)";
    }
    std::printf("wrote %s; inference medians: %s\n", out.c_str(), order.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chanpred: cross-antenna channel prediction with AE/VAE/VQ-VAE over a noisy latent link"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "synthesize a channel dataset (MCHD)");
    ConfigFlags gen_flags;
    std::string gen_profile = "cdl-c", gen_out = "dataset.mchd";
    long long gen_samples = 2048;
    std::uint64_t gen_seed = 1;
    bool gen_full_scale = false;
    add_config_flags(gen, gen_flags);
    gen->add_option("--profile", gen_profile, "channel profile: cdl-a, cdl-b, cdl-c, cdl-d")
        ->capture_default_str();
    gen->add_option("--samples", gen_samples, "number of samples")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generation seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output path")->capture_default_str();
    gen->add_flag("--full-scale", gen_full_scale, "use the full-scale grid (624 x 140, 16 antennas)");
    gen->callback([&]() {
        (void)cmd_gen(gen_flags, gen_profile, gen_samples, gen_seed, gen_out, gen_full_scale);
    });

    // train
    auto* tr = app.add_subcommand("train", "train a model on an MCHD dataset, write an MMDL checkpoint");
    ConfigFlags tr_flags;
    std::string tr_model = "ae", tr_data, tr_out = "model.mmdl";
    std::optional<long long> tr_epochs, tr_batch;
    std::optional<std::uint64_t> tr_seed;
    std::optional<double> tr_lr;
    add_config_flags(tr, tr_flags);
    tr->add_option("--model", tr_model, "model kind: ae, vae, vqvae")->capture_default_str();
    tr->add_option("--data", tr_data, "dataset path")->required();
    tr->add_option("--out", tr_out, "checkpoint path (trace CSV lands next to it)")->capture_default_str();
    tr->add_option("--epochs", tr_epochs, "override train.epochs");
    tr->add_option("--seed", tr_seed, "override train.seed");
    tr->add_option("--lr", tr_lr, "override train.lr");
    tr->add_option("--batch-size", tr_batch, "override train.batch_size");
    tr->callback([&]() {
        (void)cmd_train(tr_flags, tr_model, tr_data, tr_out, tr_epochs, tr_seed, tr_lr, tr_batch);
    });

    // sweep
    auto* sw = app.add_subcommand("sweep", "NMSE vs SNR sweep of a checkpoint over a dataset");
    ConfigFlags sw_flags;
    std::string sw_ckpt, sw_data, sw_out = "sweep.csv";
    std::string sw_snr = "-10,-5,0,5,10,20,30,off";
    std::uint64_t sw_seed = 1;
    add_config_flags(sw, sw_flags);
    sw->add_option("--ckpt", sw_ckpt, "checkpoint path")->required();
    sw->add_option("--data", sw_data, "dataset path")->required();
    sw->add_option("--snr", sw_snr, "comma list of dB values and/or 'off'")->capture_default_str();
    sw->add_option("--seed", sw_seed, "link-noise seed")->capture_default_str();
    sw->add_option("--out", sw_out, "output CSV path")->capture_default_str();
    sw->callback([&]() { (void)cmd_sweep(sw_flags, sw_ckpt, sw_data, sw_snr, sw_seed, sw_out); });

    // ood
    auto* ood = app.add_subcommand("ood", "evaluate a checkpoint on freshly generated profiles");
    ConfigFlags ood_flags;
    std::string ood_ckpt, ood_profiles = "a,b,d", ood_out = "ood.csv";
    long long ood_samples = 200;
    std::uint64_t ood_seed = 1;
    add_config_flags(ood, ood_flags);
    ood->add_option("--ckpt", ood_ckpt, "checkpoint path")->required();
    ood->add_option("--profiles", ood_profiles, "comma list of profiles")->capture_default_str();
    ood->add_option("--samples", ood_samples, "test samples per profile")->capture_default_str();
    ood->add_option("--seed", ood_seed, "dataset/noise seed")->capture_default_str();
    ood->add_option("--out", ood_out, "output CSV path")->capture_default_str();
    ood->callback([&]() {
        (void)cmd_ood(ood_flags, ood_ckpt, ood_profiles, ood_samples, ood_seed, ood_out);
    });

    // bench
    auto* be = app.add_subcommand("bench", "inference/training complexity benchmark");
    ConfigFlags be_flags;
    std::vector<std::string> be_ckpts;
    long long be_iters = 100, be_warmup = 10;
    std::string be_out = "bench.csv";
    add_config_flags(be, be_flags);
    be->add_option("--ckpt", be_ckpts, "checkpoint path (repeatable)")->required()->take_all();
    be->add_option("--iters", be_iters, "timed inference iterations")->capture_default_str();
    be->add_option("--warmup", be_warmup, "discarded warmup iterations")->capture_default_str();
    be->add_option("--out", be_out, "output CSV path")->capture_default_str();
    be->callback([&]() { (void)cmd_bench(be_flags, be_ckpts, be_iters, be_warmup, be_out); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const chanpred::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const chanpred::format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const chanpred::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const chanpred::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const chanpred::shape_error& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
