// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chanpred/chanpred.hpp"

namespace fs = std::filesystem;
using Catch::Approx;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out, err;
};

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(CHANPRED_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_all(out);
    r.err = read_all(err);
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("chanpred_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> lines;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("cli: help exits zero on every subcommand") {
    TempDir tmp;
    CHECK(run_cli("--help", tmp.path).exit_code == 0);
    for (const std::string sub : {"gen", "train", "sweep", "ood", "bench"}) {
        CmdResult r = run_cli(sub + " --help", tmp.path);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("--help") != std::string::npos);
    }
}

TEST_CASE("cli gen: file size, determinism, unknown profile") {
    TempDir tmp;
    CmdResult r = run_cli("gen --profile cdl-c --samples 4 --seed 1 --out " + tmp.file("a.mchd"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::file_size(tmp.file("a.mchd")) == 32 + 4ull * 4 * 64 * 16 * 2 * 8);
    CHECK(r.out.find("rms delay spread") != std::string::npos);

    run_cli("gen --profile cdl-c --samples 4 --seed 1 --out " + tmp.file("b.mchd"), tmp.path);
    CHECK(read_all(tmp.file("a.mchd")) == read_all(tmp.file("b.mchd")));

    CmdResult bad = run_cli("gen --profile cdl-x --samples 4 --seed 1 --out " + tmp.file("c.mchd"),
                            tmp.path);
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("unknown profile") != std::string::npos);
}

TEST_CASE("cli gen: --set overrides and unknown keys") {
    TempDir tmp;
    CmdResult r = run_cli("gen --profile cdl-a --samples 2 --seed 3 --set channel.num_subcarriers=32 --out " +
                              tmp.file("small.mchd"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::file_size(tmp.file("small.mchd")) == 32 + 2ull * 4 * 32 * 16 * 2 * 8);

    CmdResult bad =
        run_cli("gen --samples 2 --set channel.subcariers=32 --out " + tmp.file("x.mchd"), tmp.path);
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("unknown config key") != std::string::npos);

    std::ofstream cfg(tmp.file("bad.json"));
    cfg << "{\"train.lrr\": 0.01}";
    cfg.close();
    CmdResult bad2 = run_cli("gen --samples 1 --config " + tmp.file("bad.json") + " --out " +
                                 tmp.file("y.mchd"),
                             tmp.path);
    CHECK(bad2.exit_code == 2);
}

TEST_CASE("cli train: overfit, trace columns, missing inputs") {
    TempDir tmp;
    REQUIRE(run_cli("gen --profile cdl-c --samples 4 --seed 1 --out " + tmp.file("d.mchd"), tmp.path)
                .exit_code == 0);

    CmdResult r = run_cli("train --model ae --data " + tmp.file("d.mchd") +
                              " --epochs 800 --batch-size 1 --seed 2 --out " + tmp.file("ae.mmdl"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    const std::string trace = read_all(tmp.file("ae.mmdl.trace.csv"));
    auto lines = data_lines(trace);
    REQUIRE(lines.size() == 801);  // header + 800 epochs
    // Final mse column below 1e-3.
    const std::string last = lines.back();
    std::vector<double> cols;
    std::stringstream ss(last);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(std::strtod(tok.c_str(), nullptr));
    REQUIRE(cols.size() == 6);
    CHECK(cols[2] < 1e-3);

    CmdResult rq = run_cli("train --model vqvae --data " + tmp.file("d.mchd") + " --epochs 3 --out " +
                               tmp.file("vq.mmdl"),
                           tmp.path);
    REQUIRE(rq.exit_code == 0);
    auto qlines = data_lines(read_all(tmp.file("vq.mmdl.trace.csv")));
    std::stringstream qs(qlines.back());
    std::vector<double> qcols;
    while (std::getline(qs, tok, ',')) qcols.push_back(std::strtod(tok.c_str(), nullptr));
    CHECK(qcols[4] > 0.0);  // vq
    CHECK(qcols[5] > 0.0);  // commit

    CmdResult missing = run_cli("train --model ae --data " + tmp.file("nope.mchd") + " --out " +
                                    tmp.file("z.mmdl"),
                                tmp.path);
    CHECK(missing.exit_code == 3);
}

TEST_CASE("cli sweep: row count, off-row consistency, determinism, shape mismatch") {
    TempDir tmp;
    REQUIRE(run_cli("gen --profile cdl-c --samples 12 --seed 5 --out " + tmp.file("d.mchd"), tmp.path)
                .exit_code == 0);
    REQUIRE(run_cli("train --model ae --data " + tmp.file("d.mchd") + " --epochs 2 --out " +
                        tmp.file("ae.mmdl"),
                    tmp.path)
                .exit_code == 0);

    CmdResult r = run_cli("sweep --ckpt " + tmp.file("ae.mmdl") + " --data " + tmp.file("d.mchd") +
                              " --snr \"-10,-5,0,5,10,20,30,off\" --seed 9 --out " + tmp.file("s.csv"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    auto lines = data_lines(read_all(tmp.file("s.csv")));
    REQUIRE(lines.size() == 9);  // header + 8 rows
    CHECK(lines.back().find("off") != std::string::npos);

    run_cli("sweep --ckpt " + tmp.file("ae.mmdl") + " --data " + tmp.file("d.mchd") +
                " --snr off --seed 9 --out " + tmp.file("off.csv"),
            tmp.path);
    auto off_lines = data_lines(read_all(tmp.file("off.csv")));
    CHECK(off_lines.back() == lines.back());

    run_cli("sweep --ckpt " + tmp.file("ae.mmdl") + " --data " + tmp.file("d.mchd") +
                " --snr \"-10,-5,0,5,10,20,30,off\" --seed 9 --out " + tmp.file("s2.csv"),
            tmp.path);
    CHECK(read_all(tmp.file("s.csv")) == read_all(tmp.file("s2.csv")));

    REQUIRE(run_cli("gen --profile cdl-c --samples 4 --seed 5 --set channel.num_subcarriers=32 --out " +
                        tmp.file("d32.mchd"),
                    tmp.path)
                .exit_code == 0);
    CmdResult mismatch = run_cli("sweep --ckpt " + tmp.file("ae.mmdl") + " --data " +
                                     tmp.file("d32.mchd") + " --snr off --seed 1 --out " +
                                     tmp.file("bad.csv"),
                                 tmp.path);
    CHECK(mismatch.exit_code == 5);

    CmdResult badsnr = run_cli("sweep --ckpt " + tmp.file("ae.mmdl") + " --data " + tmp.file("d.mchd") +
                                   " --snr \"0,fast\" --seed 1 --out " + tmp.file("bad2.csv"),
                               tmp.path);
    CHECK(badsnr.exit_code == 2);
}

TEST_CASE("cli ood: row layout, profile-stable rows, unknown profile") {
    TempDir tmp;
    REQUIRE(run_cli("gen --profile cdl-c --samples 12 --seed 5 --out " + tmp.file("d.mchd"), tmp.path)
                .exit_code == 0);
    REQUIRE(run_cli("train --model vqvae --data " + tmp.file("d.mchd") + " --epochs 2 --out " +
                        tmp.file("vq.mmdl"),
                    tmp.path)
                .exit_code == 0);

    CmdResult r = run_cli("ood --ckpt " + tmp.file("vq.mmdl") +
                              " --profiles a,b,d --samples 4 --seed 3 --out " + tmp.file("o.csv"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    auto lines = data_lines(read_all(tmp.file("o.csv")));
    REQUIRE(lines.size() == 7);  // header + 3 profiles x 2 snr points

    // Per-profile rows only depend on (seed, profile), not on the list.
    run_cli("ood --ckpt " + tmp.file("vq.mmdl") + " --profiles c,a --samples 4 --seed 3 --out " +
                tmp.file("o2.csv"),
            tmp.path);
    auto lines2 = data_lines(read_all(tmp.file("o2.csv")));
    REQUIRE(lines2.size() == 5);
    CHECK(lines2[3] == lines[1]);  // CDL-A @ 30 dB row identical
    CHECK(lines2[4] == lines[2]);  // CDL-A @ off row identical

    CmdResult bad = run_cli("ood --ckpt " + tmp.file("vq.mmdl") +
                                " --profiles a,q --samples 4 --seed 3 --out " + tmp.file("o3.csv"),
                            tmp.path);
    CHECK(bad.exit_code == 2);
}

TEST_CASE("cli bench: rows, parameter ordering, repeatability") {
    TempDir tmp;
    REQUIRE(run_cli("gen --profile cdl-c --samples 8 --seed 5 --out " + tmp.file("d.mchd"), tmp.path)
                .exit_code == 0);
    for (const std::string kind : {"ae", "vae", "vqvae"})
        REQUIRE(run_cli("train --model " + kind + " --data " + tmp.file("d.mchd") +
                            " --epochs 1 --out " + tmp.file(kind + ".mmdl"),
                        tmp.path)
                    .exit_code == 0);

    CmdResult r = run_cli("bench --ckpt " + tmp.file("ae.mmdl") + " --ckpt " + tmp.file("vae.mmdl") +
                              " --ckpt " + tmp.file("vqvae.mmdl") + " --iters 200 --out " +
                              tmp.file("b.csv"),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    auto lines = data_lines(read_all(tmp.file("b.csv")));
    REQUIRE(lines.size() == 4);  // header + 3 rows

    auto field = [](const std::string& line, int idx) {
        std::stringstream ss(line);
        std::string tok;
        for (int i = 0; i <= idx; ++i) std::getline(ss, tok, ',');
        return tok;
    };
    const long long ae_params = std::atoll(field(lines[1], 3).c_str());
    const long long vq_params = std::atoll(field(lines[3], 3).c_str());
    CHECK(ae_params < vq_params);
    CHECK(vq_params - ae_params == 512 * 64);

    CmdResult r2 = run_cli("bench --ckpt " + tmp.file("ae.mmdl") + " --iters 200 --out " +
                               tmp.file("b2.csv"),
                           tmp.path);
    REQUIRE(r2.exit_code == 0);
    const double m1 = std::strtod(field(data_lines(read_all(tmp.file("b.csv")))[1], 1).c_str(), nullptr);
    const double m2 = std::strtod(field(data_lines(read_all(tmp.file("b2.csv")))[1], 1).c_str(), nullptr);
    INFO("medians " << m1 << " vs " << m2);
    CHECK(m2 == Approx(m1).epsilon(0.20));

    CmdResult missing = run_cli("bench --ckpt " + tmp.file("nope.mmdl") + " --out " + tmp.file("b3.csv"),
                                tmp.path);
    CHECK(missing.exit_code == 3);
}
