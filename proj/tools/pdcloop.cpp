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


// pdcloop: command-line driver for loop simulations, optimizations and sweeps.
//
//   pdcloop <command> --config <path> [--out <dir>] [--seed <int>]
//           [--shots <int|exact>] [--loss <float|grid>] [--threads <int>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical-threshold abort.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "pdcloop/commands.hpp"

int main(int argc, char **argv) {
    using namespace pdcloop::cli;
    CLI::App app{"Looped parametric down-conversion simulator and variational toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    const char *env_out = std::getenv(kOutDirEnv);
    cfg.out_dir = env_out && *env_out ? env_out : "pdcloop_out";
    cfg.threads = pdcloop::default_thread_count();
    std::uint64_t seed = 0;
    std::string shots, loss;

    const char *help[] = {"Run a loop program and dump the state", "Export the MPS of a lossless program",
                          "Maximize fidelity with a target state", "Minimize the energy of a spin Hamiltonian",
                          "Fixed vs self-corrected fidelity over a loss grid",
                          "Variational ground-state fidelity over a shot grid", "Two-loop lattice coordinates"};
    std::vector<CLI::App *> subs;
    for (std::size_t i = 0; i < command_names().size(); ++i) {
        CLI::App *sub = app.add_subcommand(command_names()[i], help[i]);
        sub->add_option("--config", cfg.config, "Input config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", cfg.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or pdcloop_out)");
        sub->add_option("--seed", seed, "Seed for restarts and shot noise");
        sub->add_option("--shots", shots, "Shots per observable, or 'exact'");
        sub->add_option("--loss", loss, "Per-cycle loss: a value, a list a,b,c or start:stop:step");
        sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (CLI::App *sub : subs) {
        if (!sub->parsed()) continue;
        cfg.command = sub->get_name();
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--shots")) cfg.shots = shots;
        if (sub->count("--loss")) cfg.loss = loss;
    }
    return execute(cfg, std::cerr);
}
