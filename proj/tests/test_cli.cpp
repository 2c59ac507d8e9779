// Copyright 2026 The pdcloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// End-to-end tests of the pdcloop binary.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "pdcloop/commands.hpp"
#include "pdcloop/stateio.hpp"
#include "test_util.hpp"

using namespace pdcloop;
using namespace pdcloop::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("pdcloop_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config_path(const std::string &name) { return std::string(PDCLOOP_CONFIGS) + "/" + name; }

void write_file(const fs::path &p, const std::string &text) { std::ofstream(p) << text; }

int run_cli(const std::string &args, const std::string &env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(PDCLOOP_CLI) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_dir(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path().string());
    return out;
}

std::string first_line(const std::string &text) { return text.substr(0, text.find('\n')); }

const char *kSmallFidelityRun =
    "objective = fidelity\ntarget = heralded_w\ntarget_eta = 0.2\nmodes = 3\nleakage_threshold = 0.01\n"
    "restarts = 2\nmax_evaluations = 200\nseed = 4\n";

const char *kSmallEnergyRun =
    "objective = energy\nherald = true\npreset = xy\nsites = 2\nJ = -1\nB = -2\nmodes = 3\nleakage_threshold = 0.01\n"
    "restarts = 1\nmax_evaluations = 150\nseed = 2\nmin_probability = 0.01\n";

}  // namespace

TEST(cli, vacuum_program_summary) {
    const auto out = scratch("vacuum");
    ASSERT_EQ(run_cli("simulate --config " + config_path("vacuum.program") + " --out " + out.string()), 0);
    const auto j = nlohmann::json::parse(read_file((out / "summary.json").string()));
    EXPECT_EQ(j["postselection_probability"].get<double>(), 1.0);
    EXPECT_EQ(j["total_mean_photon_number"].get<double>(), 0.0);
    for (const auto &n : j["mean_photon_numbers"]) EXPECT_EQ(n.get<double>(), 0.0);
}

TEST(cli, simulate_state_round_trips_against_library) {
    const auto out = scratch("simulate_fixture");
    const std::string program = fixture_path("loop_m2.program");
    ASSERT_EQ(run_cli("simulate --config " + program + " --out " + out.string()), 0);
    const auto parsed = parse_fock_state(read_file((out / "state.txt").string()));
    const auto direct = run_pure(load_program(program));
    EXPECT_EQ(parsed.layout().labels(), direct.layout().labels());
    EXPECT_EQ((parsed.amplitudes() - direct.amplitudes()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(format_fock_state(parsed), read_file((out / "state.txt").string()));
}

TEST(cli, every_command_is_byte_identical_on_rerun) {
    const auto cfg = scratch("determinism_cfg");
    write_file(cfg / "state.run", kSmallFidelityRun);
    write_file(cfg / "ground.run", kSmallEnergyRun);
    write_file(cfg / "sweep_loss.conf", std::string(kSmallFidelityRun) + "loss_grid = 0 0.1\ncorrection_evaluations = 100\n");
    write_file(cfg / "sweep_shots.conf", std::string(kSmallEnergyRun) + "shots_grid = exact 100\nseeds = 2\n");
    const std::vector<std::pair<std::string, std::string>> cases{
        {"simulate", fixture_path("loop_m2.program")},
        {"extract-mps", fixture_path("loop_m2_bond3.program")},
        {"optimize-state", (cfg / "state.run").string()},
        {"optimize-ground", (cfg / "ground.run").string()},
        {"sweep-loss", (cfg / "sweep_loss.conf").string()},
        {"sweep-shots", (cfg / "sweep_shots.conf").string()},
        {"lattice-map", config_path("lattice_15.conf")}};
    for (const auto &[command, config] : cases) {
        const auto a = scratch("det_a"), b = scratch("det_b");
        const std::string input_before = read_file(config);
        ASSERT_EQ(run_cli(command + " --config " + config + " --out " + a.string() + " --threads 1"), 0) << command;
        ASSERT_EQ(run_cli(command + " --config " + config + " --out " + b.string() + " --threads 2"), 0) << command;
        const auto fa = read_dir(a), fb = read_dir(b);
        EXPECT_FALSE(fa.empty()) << command;
        EXPECT_EQ(fa, fb) << command;
        EXPECT_EQ(read_file(config), input_before) << command;
    }
}

TEST(cli, seed_changes_optimizer_output) {
    const auto cfg = scratch("seed_cfg");
    write_file(cfg / "state.run", kSmallFidelityRun);
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    ASSERT_EQ(run_cli("optimize-state --config " + (cfg / "state.run").string() + " --out " + a.string() + " --seed 1"), 0);
    ASSERT_EQ(run_cli("optimize-state --config " + (cfg / "state.run").string() + " --out " + b.string() + " --seed 2"), 0);
    EXPECT_NE(read_file((a / "trace.csv").string()), read_file((b / "trace.csv").string()));
    EXPECT_EQ(parse_run(read_file((a / "run.txt").string())).optimizer.seed, 1u);
}

TEST(cli, malformed_config_exits_nonzero_without_output) {
    const auto cfg = scratch("malformed_cfg");
    write_file(cfg / "bad.program", "cutoff = 4\ncycle = 0.1 0 0\n");
    write_file(cfg / "unknown.program", "cutoff = 4\nwhat = 3\ncycle = 0 0 0 0 0\n");
    write_file(cfg / "bad.run", "objective = fidelity\nmodes = 3\nrestarts = zero\n");
    const fs::path out = fs::temp_directory_path() / "pdcloop_cli_test_malformed_out";
    fs::remove_all(out);
    EXPECT_EQ(run_cli("simulate --config " + (cfg / "bad.program").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("simulate --config " + (cfg / "unknown.program").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("optimize-state --config " + (cfg / "bad.run").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("optimize-ground --config " + config_path("w_state.run") + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("simulate --config " + (cfg / "missing.program").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("simulate --config " + config_path("vacuum.program") + " --loss 0,0.1 --out " + out.string()), 2);
    EXPECT_FALSE(fs::exists(out));
}

TEST(cli, leakage_threshold_abort_exits_3) {
    const auto cfg = scratch("leak_cfg");
    write_file(cfg / "leaky.program", "cutoff = 4\nleakage_threshold = 1e-8\ncycle = 0.5 0 0 0 0\n");
    const fs::path out = fs::temp_directory_path() / "pdcloop_cli_test_leak_out";
    fs::remove_all(out);
    EXPECT_EQ(run_cli("simulate --config " + (cfg / "leaky.program").string() + " --out " + out.string()), 3);
    EXPECT_FALSE(fs::exists(out));
}

TEST(cli, output_directory_from_environment) {
    const auto out = scratch("env_out");
    fs::remove_all(out);
    ASSERT_EQ(run_cli("lattice-map --config " + config_path("lattice_15.conf"), "PDCLOOP_OUT_DIR=" + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "lattice_sites.csv"));
}

TEST(cli, csv_headers_are_stable) {
    const auto cfg = scratch("schema_cfg");
    write_file(cfg / "state.run", kSmallFidelityRun);
    write_file(cfg / "sweep_loss.conf", std::string(kSmallFidelityRun) + "loss_grid = 0\ncorrection_evaluations = 50\n");
    write_file(cfg / "sweep_shots.conf", std::string(kSmallEnergyRun) + "shots_grid = 100\nseeds = 1\n");
    const auto o1 = scratch("schema_1"), o2 = scratch("schema_2"), o3 = scratch("schema_3"), o4 = scratch("schema_4");
    ASSERT_EQ(run_cli("optimize-state --config " + (cfg / "state.run").string() + " --out " + o1.string()), 0);
    ASSERT_EQ(run_cli("sweep-loss --config " + (cfg / "sweep_loss.conf").string() + " --out " + o2.string()), 0);
    ASSERT_EQ(run_cli("sweep-shots --config " + (cfg / "sweep_shots.conf").string() + " --out " + o3.string()), 0);
    ASSERT_EQ(run_cli("lattice-map --config " + config_path("lattice_15.conf") + " --out " + o4.string()), 0);
    std::string trace_header = "evaluation,restart";
    for (int i = 1; i <= 3; ++i)
        for (const char *n : {"abs_eta", "arg_eta", "theta", "phi", "lambda"})
            trace_header += ",c" + std::to_string(i) + "_" + n;
    trace_header += ",objective";
    EXPECT_EQ(first_line(read_file((o1 / "trace.csv").string())), trace_header);
    EXPECT_EQ(first_line(read_file((o2 / "sweep_loss.csv").string())), "loss,fidelity_fixed,fidelity_selfcorrected");
    EXPECT_EQ(first_line(read_file((o3 / "sweep_shots.csv").string())),
              "shots,seed,fidelity,energy,objective,postselection_probability");
    EXPECT_EQ(first_line(read_file((o3 / "sweep_shots_summary.csv").string())),
              "shots,seeds,mean_fidelity,stderr_fidelity,mean_energy");
    EXPECT_EQ(first_line(read_file((o4 / "lattice_sites.csv").string())), "mode,row,col,emission_time");
    EXPECT_EQ(first_line(read_file((o4 / "lattice_neighbors.csv").string())), "mode_a,mode_b,axis");
}

TEST(cli, sweep_loss_zero_grid_matches_lossless_value) {
    const auto cfg = scratch("sweep0_cfg");
    write_file(cfg / "sweep.conf", std::string("objective = fidelity\ntarget = heralded_w\ntarget_eta = 0.2\n"
                                               "loss_grid = 0\ncorrection_evaluations = 200\n") +
                                       read_file(fixture_path("w_converged.program")));
    const auto out = scratch("sweep0_out");
    ASSERT_EQ(run_cli("sweep-loss --config " + (cfg / "sweep.conf").string() + " --out " + out.string()), 0);
    const auto csv = read_file((out / "sweep_loss.csv").string());
    std::string row = csv.substr(csv.find('\n') + 1);
    row = row.substr(0, row.find('\n'));
    std::replace(row.begin(), row.end(), ',', ' ');
    const auto cols = kv::split_ws(row);
    ASSERT_EQ(cols.size(), 3u);
    const double lossless = 1.0 - objective_infidelity(load_program(fixture_path("w_converged.program")),
                                                       target_heralded_w(4, 0.2));
    EXPECT_EQ(std::stod(cols[1]), lossless);
    EXPECT_GE(std::stod(cols[2]), lossless);
    EXPECT_NEAR(std::stod(cols[2]), lossless, 1e-12);
}

TEST(cli, grid_parsing) {
    using cli::parse_grid;
    EXPECT_EQ(parse_grid("g", "0.1"), std::vector<double>{0.1});
    EXPECT_EQ(parse_grid("g", "0,0.05, 0.1"), (std::vector<double>{0, 0.05, 0.1}));
    const auto r = parse_grid("g", "0:0.2:0.02");
    ASSERT_EQ(r.size(), 11u);
    EXPECT_DOUBLE_EQ(r[5], 0.1);
    EXPECT_DOUBLE_EQ(r.back(), 0.2);
    EXPECT_THROW(parse_grid("g", "0:0.2:0"), ConfigError);
    EXPECT_THROW(parse_grid("g", "a,b"), ConfigError);
    EXPECT_EQ(cli::parse_shot_grid("s", "exact 100"), (std::vector<long>{0, 100}));
    EXPECT_THROW(cli::parse_shot_grid("s", "0"), ConfigError);
}
