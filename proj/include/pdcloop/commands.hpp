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

#pragma once

// Command implementations behind the `pdcloop` tool.
//
// Every command returns its output files in memory; nothing touches the
// output directory until the command has succeeded, so a failing run leaves
// no partial files behind.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdcloop/encoding.hpp"
#include "pdcloop/errors.hpp"
#include "pdcloop/kvtext.hpp"
#include "pdcloop/loopcircuit.hpp"
#include "pdcloop/mps.hpp"
#include "pdcloop/parallel.hpp"
#include "pdcloop/singlerail.hpp"
#include "pdcloop/stateio.hpp"
#include "pdcloop/varopt.hpp"

namespace pdcloop::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitThreshold = 3;

/// Environment variable naming the default output directory.
inline constexpr const char *kOutDirEnv = "PDCLOOP_OUT_DIR";

inline const std::vector<std::string> &command_names() {
    static const std::vector<std::string> names{"simulate",      "extract-mps", "optimize-state", "optimize-ground",
                                                "sweep-loss",    "sweep-shots", "lattice-map"};
    return names;
}

/// Command-line overrides. Unset fields keep the config's values.
struct RunConfig {
    std::string command;
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> shots;
    std::optional<std::string> loss;
    int threads = 1;
};

struct OutputFile {
    std::string name;
    std::string content;
};

struct CommandResult {
    std::vector<OutputFile> files;
};

// ---------------------------------------------------------------------------
// Grids and small helpers.

/// "0.1", "0,0.05,0.1", "0 0.05 0.1" or "start:stop:step" (inclusive; points
/// are start + k*step).
inline std::vector<double> parse_grid(const std::string &key, const std::string &text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    const auto tok = kv::split_ws(s);
    if (tok.size() == 1 && tok[0].find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(tok[0]);
        std::string p;
        while (std::getline(ss, p, ':')) parts.push_back(kv::Document::to_double(key, p));
        if (parts.size() != 3 || !(parts[2] > 0.0) || !(parts[1] >= parts[0]))
            throw ConfigError("key '" + key + "': range must be start:stop:step with step > 0 and stop >= start");
        const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        std::vector<double> out;
        for (long k = 0; k <= n; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
        return out;
    }
    std::vector<double> out;
    for (const auto &t : tok) out.push_back(kv::Document::to_double(key, t));
    if (out.empty()) throw ConfigError("key '" + key + "': empty grid");
    return out;
}

inline double parse_single_loss(const std::string &text) {
    const auto g = parse_grid("--loss", text);
    if (g.size() != 1) throw ConfigError("--loss: this command takes a single value");
    return g[0];
}

/// Shot grid entries: positive integers or "exact". Exact is encoded as 0.
inline std::vector<long> parse_shot_grid(const std::string &key, const std::string &text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::vector<long> out;
    for (const auto &t : kv::split_ws(s)) {
        if (t == "exact") {
            out.push_back(0);
            continue;
        }
        const long n = kv::Document::to_long(key, t);
        if (n < 1) throw ConfigError("key '" + key + "': shot counts must be >= 1 or 'exact'");
        out.push_back(n);
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty shot grid");
    return out;
}

inline std::string read_text(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string csv_number(double x) { return std::isfinite(x) ? kv::format_double(x) : std::string(); }

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

inline json leakage_json(const LoopProgram &p, const LeakageReport &r) {
    return json{{"total", r.total}, {"threshold", p.leakage_threshold}, {"per_cycle", r.per_cycle}};
}

/// Applies --seed, --shots, --loss, --threads to a run.
inline void apply_overrides(VariationalRun &run, const RunConfig &cfg, bool allow_loss) {
    if (cfg.seed) {
        run.optimizer.seed = *cfg.seed;
        run.shots.seed = *cfg.seed;
    }
    if (cfg.shots) {
        const auto g = parse_shot_grid("--shots", *cfg.shots);
        if (g.size() != 1) throw ConfigError("--shots: this command takes a single value");
        run.shots = g[0] == 0 ? ShotPlan{1, run.optimizer.seed, true} : ShotPlan{g[0], run.optimizer.seed, false};
    }
    if (cfg.loss) {
        if (!allow_loss) throw ConfigError("--loss is a grid for this command; set it in the sweep instead");
        run.program.loss_per_cycle = parse_single_loss(*cfg.loss);
    }
    run.optimizer.threads = cfg.threads;
    run.validate();
}

inline void add_run_outputs(CommandResult &out, const VariationalRun &run) {
    out.files.push_back({"run.txt", format_run(run)});
    out.files.push_back({"trace.csv", format_trace_csv(run.result, parameter_space(run.program))});
    out.files.push_back({"best.program", format_program(run.best_program())});
}

inline json optimizer_json(const VariationalRun &run) {
    return json{{"best_value", run.result.best_value},
                {"converged", run.result.converged},
                {"evaluations", run.result.evaluations},
                {"restarts", run.optimizer.restarts},
                {"max_evaluations", run.optimizer.max_evaluations},
                {"best_restart", run.result.best_restart},
                {"seed", run.optimizer.seed},
                {"effective_ftol", run.effective_ftol()}};
}

// ---------------------------------------------------------------------------
// Fidelity and energy reports of a finished program.

struct StateReport {
    double fidelity = 0.0;
    double postselection_probability = 0.0;
    /// heralded_w: fidelity of the herald-conditioned state with W.
    std::optional<double> herald_fidelity, herald_probability;
    /// diluted_ghz: fidelity of the two-excitation sector with the relabeled GHZ state.
    std::optional<double> sector_fidelity, sector_probability;
};

inline StateReport report_state(const LoopProgram &p, const TargetSpec &target) {
    const QubitDensity s = single_rail_state(p);
    StateReport r;
    r.fidelity = fidelity(s, target.build(s.qubits));
    r.postselection_probability = s.postselection_probability;
    if (target.kind == TargetKind::heralded_w) {
        const auto h = condition_on_qubit(s, s.qubits - 1, 1);
        r.herald_fidelity = fidelity(h, w_state(h.qubits));
        r.herald_probability = h.postselection_probability / s.postselection_probability;
    }
    if (target.kind == TargetKind::diluted_ghz) {
        const auto sec = project_excitation_sector(s, 2);
        r.sector_fidelity = fidelity(sec, relabeled_ghz_state());
        r.sector_probability = sec.postselection_probability / s.postselection_probability;
    }
    return r;
}

inline json state_report_json(const StateReport &r) {
    json j{{"fidelity", r.fidelity}, {"postselection_probability", r.postselection_probability}};
    if (r.herald_fidelity) {
        j["herald_conditioned_fidelity"] = *r.herald_fidelity;
        j["herald_probability"] = *r.herald_probability;
    }
    if (r.sector_fidelity) {
        j["two_photon_sector_fidelity"] = *r.sector_fidelity;
        j["two_photon_sector_probability"] = *r.sector_probability;
    }
    return j;
}

struct GroundReport {
    double energy = 0.0;  // exact energy of the generated state
    double ground_energy = 0.0;
    double gap = 0.0;
    double fidelity = 0.0;
    double postselection_probability = 0.0;
};

inline GroundReport report_ground(const LoopProgram &p, const SpinHamiltonian &h, bool herald, const GroundState &gs) {
    const QubitDensity s = energy_state(p, herald);
    return {pdcloop::energy(s, h), gs.energy, gs.gap, fidelity(s, gs.state), s.postselection_probability};
}

// ---------------------------------------------------------------------------
// Commands.

inline CommandResult cmd_simulate(const RunConfig &cfg) {
    LoopProgram p = parse_program(read_text(cfg.config));
    if (cfg.loss) p.loss_per_cycle = parse_single_loss(*cfg.loss);
    p.validate();
    const LeakageReport leak = truncation_leakage(p);
    check_leakage(p, leak);
    const bool pure = p.loss_per_cycle == 0.0 && p.termination == Termination::project_vacuum;

    CommandResult out;
    json summary{{"command", "simulate"},
                 {"backend", pure ? "pure" : "density"},
                 {"modes", p.modes()},
                 {"cutoff", p.cutoff},
                 {"bond_cutoff", p.bond_cutoff},
                 {"loss_per_cycle", p.loss_per_cycle},
                 {"loss_on_emitted", p.loss_on_emitted},
                 {"termination", to_string(p.termination)},
                 {"order", to_string(p.order)}};
    std::vector<double> photons;
    double weight = 0.0;
    QubitDensity q;
    if (pure) {
        const FockState psi = run_pure(p);
        weight = psi.norm2();
        for (const auto &l : p.emitted_labels()) photons.push_back(mean_photon_number(psi, l));
        q = QubitDensity::from_pure(project_single_rail(psi));
        out.files.push_back({"state.txt", format_fock_state(psi)});
    } else {
        const FockDensity rho = run_density(p);
        weight = rho.trace();
        for (const auto &l : p.emitted_labels()) photons.push_back(mean_photon_number(rho, l));
        q = project_single_rail(rho);
        out.files.push_back({"state.txt", format_fock_density(rho)});
    }
    double total = 0.0;
    for (double n : photons) total += n;
    summary["norm"] = std::sqrt(weight);
    summary["postselection_probability"] =
        p.termination == Termination::project_vacuum ? json(weight) : json(nullptr);
    summary["retained_weight"] = weight;
    summary["mean_photon_numbers"] = photons;
    summary["total_mean_photon_number"] = total;
    summary["single_rail_probability"] = q.postselection_probability;
    summary["leakage"] = leakage_json(p, leak);
    out.files.push_back({"summary.json", dump(summary)});
    return out;
}

inline CommandResult cmd_extract_mps(const RunConfig &cfg) {
    LoopProgram p = parse_program(read_text(cfg.config));
    if (cfg.loss) p.loss_per_cycle = parse_single_loss(*cfg.loss);
    const MpsState mps = extract_mps(p);
    json summary{{"command", "extract-mps"},
                 {"modes", mps.modes()},
                 {"physical_dimension", mps.d},
                 {"bond_dimensions", mps.bond_dimensions()},
                 {"norm2", mps_norm2(mps)},
                 {"leakage", leakage_json(p, truncation_leakage(p))}};
    return {{{"mps.txt", format_mps(mps)}, {"summary.json", dump(summary)}}};
}

inline CommandResult cmd_optimize_state(const RunConfig &cfg) {
    VariationalRun run = parse_run(read_text(cfg.config));
    if (run.objective != ObjectiveKind::fidelity) throw ConfigError("optimize-state needs objective = fidelity");
    apply_overrides(run, cfg, true);
    run = minimize(run);
    const LoopProgram best = run.best_program();
    const LeakageReport leak = truncation_leakage(best);
    check_leakage(best, leak);
    const StateReport rep = report_state(best, run.target);

    CommandResult out;
    add_run_outputs(out, run);
    json summary{{"command", "optimize-state"},
                 {"objective", "fidelity"},
                 {"target", to_string(run.target.kind)},
                 {"target_eta", run.target.eta},
                 {"modes", run.program.modes()},
                 {"loss_per_cycle", run.program.loss_per_cycle},
                 {"best_infidelity", run.result.best_value}};
    summary.update(state_report_json(rep));
    summary["optimizer"] = optimizer_json(run);
    summary["leakage"] = leakage_json(best, leak);
    out.files.push_back({"summary.json", dump(summary)});
    return out;
}

inline CommandResult cmd_optimize_ground(const RunConfig &cfg) {
    VariationalRun run = parse_run(read_text(cfg.config));
    if (run.objective != ObjectiveKind::energy) throw ConfigError("optimize-ground needs objective = energy");
    apply_overrides(run, cfg, true);
    run = minimize(run);
    const LoopProgram best = run.best_program();
    const LeakageReport leak = truncation_leakage(best);
    check_leakage(best, leak);
    const GroundState gs = exact_ground_state(run.hamiltonian);
    const GroundReport rep = report_ground(best, run.hamiltonian, run.herald, gs);

    CommandResult out;
    add_run_outputs(out, run);
    json summary{{"command", "optimize-ground"},
                 {"objective", "energy"},
                 {"qubits", run.hamiltonian.qubits},
                 {"herald", run.herald},
                 {"shots", format_shots(run.shots)},
                 {"best_objective", run.result.best_value},
                 {"energy", rep.energy},
                 {"ground_energy", rep.ground_energy},
                 {"gap", rep.gap},
                 {"ground_state_fidelity", rep.fidelity},
                 {"postselection_probability", rep.postselection_probability},
                 {"raw_shots_per_observable",
                  run.shots.exact ? json(nullptr)
                                  : json(static_cast<double>(run.shots.shots_per_observable) / rep.postselection_probability)}};
    summary["optimizer"] = optimizer_json(run);
    summary["leakage"] = leakage_json(best, leak);
    out.files.push_back({"summary.json", dump(summary)});
    return out;
}

inline const std::set<std::string> &sweep_loss_keys() {
    static const std::set<std::string> keys{"loss_grid", "self_correct", "correction_restarts", "correction_evaluations",
                                            "correction_step"};
    return keys;
}

inline const std::set<std::string> &sweep_shots_keys() {
    static const std::set<std::string> keys{"shots_grid", "seeds"};
    return keys;
}

/// Parses a run config that may carry extra sweep keys; returns both.
inline std::pair<VariationalRun, kv::Document> parse_sweep_config(const std::string &text,
                                                                  const std::set<std::string> &extra) {
    kv::Document doc = kv::Document::parse(text);
    std::set<std::string> allowed = run_keys();
    allowed.insert(extra.begin(), extra.end());
    doc.require_known(allowed);
    std::string stripped;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        const auto hash = line.find('#');
        if (eq != std::string::npos && (hash == std::string::npos || eq < hash) &&
            extra.count(kv::trim(std::string_view(line).substr(0, eq))))
            continue;
        stripped += line + "\n";
    }
    return {parse_run(stripped), std::move(doc)};
}

struct LossPoint {
    double loss = 0.0;
    double fidelity_fixed = 0.0;
    double fidelity_corrected = std::nan("");
    LoopProgram corrected;
};

inline CommandResult cmd_sweep_loss(const RunConfig &cfg) {
    auto [base, doc] = parse_sweep_config(read_text(cfg.config), sweep_loss_keys());
    if (base.objective != ObjectiveKind::fidelity) throw ConfigError("sweep-loss needs objective = fidelity");
    apply_overrides(base, cfg, false);
    const auto grid = parse_grid(cfg.loss ? "--loss" : "loss_grid", cfg.loss ? *cfg.loss : doc.get_or("loss_grid", "0:0.2:0.02"));
    for (double l : grid)
        if (!(l >= 0.0 && l < 1.0)) throw ConfigError("loss values must lie in [0, 1)");
    const bool correct = doc.get_bool_or("self_correct", true);
    const int restarts = static_cast<int>(doc.get_long_or("correction_restarts", 1));
    const long evaluations = doc.get_long_or("correction_evaluations", 2000);
    const double step = doc.get_double_or("correction_step", 0.02);
    const QubitState target = base.target.build(base.program.modes());

    const auto points = parallel_map<LossPoint>(grid.size(), cfg.threads, [&](std::size_t i) {
        LossPoint pt;
        pt.loss = grid[i];
        LoopProgram p = base.program;
        p.loss_per_cycle = pt.loss;
        check_leakage(p, truncation_leakage(p));
        pt.fidelity_fixed = 1.0 - objective_infidelity(p, target);
        if (correct) {
            VariationalRun run = base;
            run.program = p;
            run.optimizer.start_from_template = true;
            run.optimizer.restarts = restarts;
            run.optimizer.max_evaluations = evaluations;
            run.optimizer.initial_step = step;
            run.optimizer.seed = derive_seed(base.optimizer.seed, i);
            run.optimizer.threads = 1;
            run = minimize(run);
            pt.fidelity_corrected = 1.0 - run.result.best_value;
            pt.corrected = run.best_program();
        }
        return pt;
    });

    CommandResult out;
    std::string csv = "loss,fidelity_fixed,fidelity_selfcorrected\n";
    json rows = json::array();
    bool monotone = true, dominant = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &pt = points[i];
        csv += kv::format_double(pt.loss) + "," + kv::format_double(pt.fidelity_fixed) + "," +
               csv_number(pt.fidelity_corrected) + "\n";
        if (i > 0 && pt.fidelity_fixed > points[i - 1].fidelity_fixed) monotone = false;
        json row{{"loss", pt.loss}, {"fidelity_fixed", pt.fidelity_fixed}, {"infidelity_fixed", 1.0 - pt.fidelity_fixed}};
        if (correct) {
            if (pt.fidelity_corrected < pt.fidelity_fixed) dominant = false;
            const double inf_c = 1.0 - pt.fidelity_corrected, inf_f = 1.0 - pt.fidelity_fixed;
            row["fidelity_selfcorrected"] = pt.fidelity_corrected;
            row["infidelity_selfcorrected"] = inf_c;
            row["improvement_ratio"] = inf_c > 0.0 ? json(inf_f / inf_c) : json(nullptr);
        }
        rows.push_back(row);
    }
    out.files.push_back({"sweep_loss.csv", csv});
    json summary{{"command", "sweep-loss"},
                 {"target", to_string(base.target.kind)},
                 {"target_eta", base.target.eta},
                 {"modes", base.program.modes()},
                 {"loss_on_emitted", base.program.loss_on_emitted},
                 {"self_correct", correct},
                 {"fixed_monotone_nonincreasing", monotone},
                 {"selfcorrected_dominates", correct ? json(dominant) : json(nullptr)},
                 {"points", rows}};
    out.files.push_back({"summary.json", dump(summary)});
    if (correct) {
        std::string programs;
        for (const auto &pt : points)
            programs += "# loss " + kv::format_double(pt.loss) + "\n" + format_program(pt.corrected) + "\n";
        out.files.push_back({"selfcorrected.programs", programs});
    }
    return out;
}

struct ShotRow {
    long shots = 0;  // 0: exact
    int seed_index = 0;
    double fidelity = 0.0;
    double energy = 0.0;
    double objective = 0.0;
    double postselection_probability = 0.0;
};

inline CommandResult cmd_sweep_shots(const RunConfig &cfg) {
    auto [base, doc] = parse_sweep_config(read_text(cfg.config), sweep_shots_keys());
    if (base.objective != ObjectiveKind::energy) throw ConfigError("sweep-shots needs objective = energy");
    RunConfig no_shots = cfg;
    no_shots.shots.reset();
    apply_overrides(base, no_shots, true);
    const auto grid = parse_shot_grid(cfg.shots ? "--shots" : "shots_grid",
                                      cfg.shots ? *cfg.shots : doc.get_or("shots_grid", "exact 100 1000 10000"));
    const long seeds = doc.get_long_or("seeds", 5);
    if (seeds < 1) throw ConfigError("key 'seeds': expected >= 1");
    const GroundState gs = exact_ground_state(base.hamiltonian);

    const std::size_t jobs = grid.size() * static_cast<std::size_t>(seeds);
    const auto rows = parallel_map<ShotRow>(jobs, cfg.threads, [&](std::size_t j) {
        const long n = grid[j / static_cast<std::size_t>(seeds)];
        const int s = static_cast<int>(j % static_cast<std::size_t>(seeds));
        VariationalRun run = base;
        run.optimizer.seed = derive_seed(base.optimizer.seed, static_cast<std::uint64_t>(s));
        run.shots = n == 0 ? ShotPlan{1, run.optimizer.seed, true} : ShotPlan{n, run.optimizer.seed, false};
        run.optimizer.threads = 1;
        run = minimize(run);
        const auto rep = report_ground(run.best_program(), run.hamiltonian, run.herald, gs);
        return ShotRow{n, s, rep.fidelity, rep.energy, run.result.best_value, rep.postselection_probability};
    });

    auto shots_label = [](long n) { return n == 0 ? std::string("exact") : std::to_string(n); };
    std::string csv = "shots,seed,fidelity,energy,objective,postselection_probability\n";
    for (const auto &r : rows)
        csv += shots_label(r.shots) + "," + std::to_string(r.seed_index) + "," + kv::format_double(r.fidelity) + "," +
               kv::format_double(r.energy) + "," + kv::format_double(r.objective) + "," +
               kv::format_double(r.postselection_probability) + "\n";
    std::string agg = "shots,seeds,mean_fidelity,stderr_fidelity,mean_energy\n";
    json points = json::array();
    std::vector<double> finite_means;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sf = 0, sf2 = 0, se = 0;
        for (long s = 0; s < seeds; ++s) {
            const auto &r = rows[g * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)];
            sf += r.fidelity;
            sf2 += r.fidelity * r.fidelity;
            se += r.energy;
        }
        const double k = static_cast<double>(seeds);
        const double mean = sf / k;
        const double sd = seeds > 1 ? std::sqrt(std::max(0.0, (sf2 - k * mean * mean) / (k - 1.0))) : 0.0;
        const double stderr_mean = sd / std::sqrt(k);
        agg += shots_label(grid[g]) + "," + std::to_string(seeds) + "," + kv::format_double(mean) + "," +
               kv::format_double(stderr_mean) + "," + kv::format_double(se / k) + "\n";
        points.push_back({{"shots", shots_label(grid[g])}, {"mean_fidelity", mean}, {"stderr_fidelity", stderr_mean},
                          {"mean_energy", se / k}});
        if (grid[g] != 0) finite_means.push_back(mean);
    }
    bool nondecreasing = true;
    for (std::size_t i = 1; i < finite_means.size(); ++i)
        if (finite_means[i] < finite_means[i - 1]) nondecreasing = false;
    json summary{{"command", "sweep-shots"},
                 {"qubits", base.hamiltonian.qubits},
                 {"herald", base.herald},
                 {"ground_energy", gs.energy},
                 {"gap", gs.gap},
                 {"seeds", seeds},
                 {"finite_shot_mean_fidelity_nondecreasing", nondecreasing},
                 {"points", points}};
    return {{{"sweep_shots.csv", csv}, {"sweep_shots_summary.csv", agg}, {"summary.json", dump(summary)}}};
}

inline CommandResult cmd_lattice_map(const RunConfig &cfg) {
    const auto doc = kv::Document::parse(read_text(cfg.config));
    doc.require_known({"modes", "n", "sites_per_row"});
    const LatticeMap2D map{static_cast<int>(doc.get_long("n")), static_cast<int>(doc.get_long("sites_per_row"))};
    const int m = static_cast<int>(doc.get_long("modes"));
    const auto sites = emitted_mode_schedule(m, map);
    std::string csv = "mode,row,col,emission_time\n";
    for (int k = 0; k < m; ++k) {
        const auto &s = sites[static_cast<std::size_t>(k)];
        csv += std::to_string(k) + "," + std::to_string(s.row) + "," + std::to_string(s.col) + "," +
               std::to_string(emission_time(s, map)) + "\n";
    }
    std::string nb = "mode_a,mode_b,axis\n";
    long slow = 0, fast = 0;
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            if (slow_axis_neighbors(a, b, map)) {
                nb += std::to_string(a) + "," + std::to_string(b) + ",slow\n";
                ++slow;
            }
            if (fast_axis_neighbors(a, b, map)) {
                nb += std::to_string(a) + "," + std::to_string(b) + ",fast\n";
                ++fast;
            }
        }
    const int rows = m == 0 ? 0 : sites.back().row + 1;
    json summary{{"command", "lattice-map"}, {"modes", m},           {"n", map.n},
                 {"sites_per_row", map.sites_per_row}, {"rows", rows}, {"slow_axis_pairs", slow},
                 {"fast_axis_pairs", fast}};
    return {{{"lattice_sites.csv", csv}, {"lattice_neighbors.csv", nb}, {"summary.json", dump(summary)}}};
}

inline CommandResult run_command(const RunConfig &cfg) {
    if (cfg.threads < 1) throw ConfigError("--threads must be >= 1");
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "extract-mps") return cmd_extract_mps(cfg);
    if (cfg.command == "optimize-state") return cmd_optimize_state(cfg);
    if (cfg.command == "optimize-ground") return cmd_optimize_ground(cfg);
    if (cfg.command == "sweep-loss") return cmd_sweep_loss(cfg);
    if (cfg.command == "sweep-shots") return cmd_sweep_shots(cfg);
    if (cfg.command == "lattice-map") return cmd_lattice_map(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

/// Writes all files via temporaries, then renames them into place.
inline void write_outputs(const std::string &dir, const CommandResult &result) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<fs::path> temps;
    auto cleanup = [&] {
        for (const auto &t : temps) fs::remove(t, ec);
    };
    for (const auto &f : result.files) {
        const fs::path tmp = fs::path(dir) / (f.name + ".partial");
        std::ofstream o(tmp, std::ios::binary);
        temps.push_back(tmp);
        o << f.content;
        o.close();
        if (!o) {
            cleanup();
            throw ConfigError("cannot write '" + tmp.string() + "'");
        }
    }
    for (std::size_t i = 0; i < temps.size(); ++i) fs::rename(temps[i], fs::path(dir) / result.files[i].name);
}

/// Runs a command and maps failures to exit codes; messages go to `err`.
inline int execute(const RunConfig &cfg, std::ostream &err) {
    try {
        const CommandResult r = run_command(cfg);
        write_outputs(cfg.out_dir, r);
        return kExitOk;
    } catch (const TruncationError &e) {
        err << "error: " << e.what() << "\n";
        return kExitThreshold;
    } catch (const PostselectionError &e) {
        err << "error: " << e.what() << "\n";
        return kExitThreshold;
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace pdcloop::cli
