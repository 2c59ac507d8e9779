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

// Dense simulation of the PDC loop.
//
// One cycle acts on the pair (cycling mode "c" = h, fresh vacuum = v):
//   1. two-mode squeezer U(eta_i) and EOM transform V_i (order configurable),
//   2. the v output leaves the loop as emitted mode b_i, the h output keeps
//      cycling (the PBS swap is a relabelling, not a gate),
//   3. the cycling mode is truncated to its bond cutoff D,
//   4. pure loss acts on the cycling mode (and optionally on b_i).
// After the last cycle the cycling mode is projected onto vacuum or traced out.

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pdcloop/fockcore.hpp"
#include "pdcloop/kvtext.hpp"

namespace pdcloop {

enum class Termination { project_vacuum, trace_out };
enum class CycleOrder { squeeze_then_eom, eom_then_squeeze };

inline std::string to_string(Termination t) {
    return t == Termination::project_vacuum ? "project_vacuum" : "trace_out";
}
inline std::string to_string(CycleOrder o) {
    return o == CycleOrder::squeeze_then_eom ? "squeeze_then_eom" : "eom_then_squeeze";
}

struct CycleParams {
    SqueezeParam eta;
    Su2Param v;

    void validate(double r_max) const {
        eta.validate(r_max);
        if (!(v.theta >= 0.0 && v.theta <= std::numbers::pi) || !(std::abs(v.phi) <= std::numbers::pi) ||
            !(std::abs(v.lambda) <= std::numbers::pi))
            throw ConfigError("EOM angles outside theta in [0, pi], phi, lambda in [-pi, pi]");
    }
};

inline const std::string kCyclingMode = "c";

inline std::string emitted_label(int i) { return "b" + std::to_string(i + 1); }

struct LoopProgram {
    std::vector<CycleParams> cycles;
    int cutoff = 4;
    int bond_cutoff = 4;
    double loss_per_cycle = 0.0;
    bool loss_on_emitted = false;
    Termination termination = Termination::project_vacuum;
    CycleOrder order = CycleOrder::squeeze_then_eom;
    double leakage_threshold = kDefaultLeakageThreshold;
    double r_max = kDefaultRMax;

    int modes() const { return static_cast<int>(cycles.size()); }
    FockCutoff fock_cutoff() const { return FockCutoff(cutoff); }

    std::vector<std::string> emitted_labels() const {
        std::vector<std::string> out;
        for (int i = 0; i < modes(); ++i) out.push_back(emitted_label(i));
        return out;
    }

    void validate() const {
        if (cycles.empty()) throw ConfigError("program needs at least one cycle");
        FockCutoff check(cutoff);
        (void)check;
        if (bond_cutoff < 1 || bond_cutoff > cutoff)
            throw ConfigError("bond_cutoff must lie in [1, cutoff], got " + std::to_string(bond_cutoff));
        if (!(loss_per_cycle >= 0.0 && loss_per_cycle < 1.0))
            throw ConfigError("loss_per_cycle must lie in [0, 1), got " + std::to_string(loss_per_cycle));
        if (!(leakage_threshold >= 0.0)) throw ConfigError("leakage_threshold must be >= 0");
        for (const auto &c : cycles) c.validate(r_max);
    }

    friend bool operator==(const LoopProgram &a, const LoopProgram &b) {
        if (a.cycles.size() != b.cycles.size()) return false;
        for (std::size_t i = 0; i < a.cycles.size(); ++i) {
            const auto &x = a.cycles[i], &y = b.cycles[i];
            if (x.eta.r != y.eta.r || x.eta.phase != y.eta.phase || x.v.theta != y.v.theta ||
                x.v.phi != y.v.phi || x.v.lambda != y.v.lambda)
                return false;
        }
        return a.cutoff == b.cutoff && a.bond_cutoff == b.bond_cutoff && a.loss_per_cycle == b.loss_per_cycle &&
               a.loss_on_emitted == b.loss_on_emitted && a.termination == b.termination && a.order == b.order &&
               a.leakage_threshold == b.leakage_threshold && a.r_max == b.r_max;
    }
};

/// Squeezer and EOM gates of one cycle, in application order. The squeezer
/// is built without its own leakage check; programs are checked as a whole
/// by truncation_leakage().
inline std::pair<TwoModeGate, TwoModeGate> cycle_gates(const CycleParams &cycle, FockCutoff cutoff, CycleOrder order,
                                                        double r_max = kDefaultRMax) {
    SqueezerOptions opt;
    opt.r_max = r_max;
    opt.leakage_threshold = std::numeric_limits<double>::infinity();
    TwoModeGate u = build_two_mode_squeezer(cycle.eta, cutoff, opt);
    TwoModeGate v = build_su2_mode_transform(cycle.v, cutoff);
    if (order == CycleOrder::squeeze_then_eom) return {std::move(u), std::move(v)};
    return {std::move(v), std::move(u)};
}

/// Product of the two (truncated) gates of a cycle.
inline MatrixXcd cycle_matrix(const CycleParams &cycle, FockCutoff cutoff, CycleOrder order,
                              double r_max = kDefaultRMax) {
    auto [first, second] = cycle_gates(cycle, cutoff, order, r_max);
    return second.matrix * first.matrix;
}

struct LeakageReport {
    /// Norm lost in each cycle to the cutoff d (either output mode) and the bond cutoff D.
    std::vector<double> per_cycle;
    double total = 0.0;
};

/// Truncation leakage of a program, from the cycling-mode marginal alone.
/// Emitted modes never interact again, so their partial trace is exact and
/// the marginal's trace deficit equals the dense state's norm deficit.
inline LeakageReport truncation_leakage(const LoopProgram &program) {
    program.validate();
    const int d = program.cutoff, D = program.bond_cutoff;
    const FockCutoff cutoff = program.fock_cutoff();
    MatrixXcd rho = MatrixXcd::Zero(d, d);
    rho(0, 0) = 1.0;
    LeakageReport report;
    const double transmissivity = 1.0 - program.loss_per_cycle;
    const Eigen::MatrixXd loss_coeff = detail::loss_coefficients(transmissivity, d);
    for (const auto &cycle : program.cycles) {
        const MatrixXcd g = cycle_matrix(cycle, cutoff, program.order, program.r_max);
        const double before = rho.trace().real();
        // columns |a, 0> only: fresh mode enters in vacuum
        MatrixXcd next = MatrixXcd::Zero(d, d);
        for (int s = 0; s < d; ++s) {
            MatrixXcd k_s(d, d);  // k_s(b, a) = <b, s| G |a, 0>
            for (int b = 0; b < d; ++b)
                for (int a = 0; a < d; ++a) k_s(b, a) = g(b * d + s, a * d);
            next += k_s * rho * k_s.adjoint();
        }
        for (int b = D; b < d; ++b) {
            next.row(b).setZero();
            next.col(b).setZero();
        }
        if (transmissivity < 1.0) {
            MatrixXcd lossy = MatrixXcd::Zero(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; i + k < d && j + k < d; ++k)
                        lossy(i, j) += loss_coeff(i, k) * loss_coeff(j, k) * next(i + k, j + k);
            next = lossy;
        }
        const double lost = std::max(0.0, before - next.trace().real());
        report.per_cycle.push_back(lost);
        report.total += lost;
        rho = next;
    }
    return report;
}

inline void check_leakage(const LoopProgram &program, const LeakageReport &report) {
    if (report.total > program.leakage_threshold)
        throw TruncationError("program truncation leakage " + kv::format_double(report.total) + " exceeds threshold " +
                                  kv::format_double(program.leakage_threshold) +
                                  " (raise cutoff/bond_cutoff or leakage_threshold)",
                              report.total, program.leakage_threshold);
}

/// Pure evolution. The result's squared norm is the probability that the
/// cycling mode ends in vacuum (times the retained truncation weight).
inline FockState run_pure(const LoopProgram &program) {
    program.validate();
    if (program.loss_per_cycle != 0.0) throw ConfigError("run_pure requires loss_per_cycle = 0");
    if (program.termination == Termination::trace_out)
        throw ConfigError("termination trace_out needs the density backend");
    check_leakage(program, truncation_leakage(program));
    const FockCutoff cutoff = program.fock_cutoff();
    FockState psi = FockState::vacuum({kCyclingMode}, cutoff);
    for (int i = 0; i < program.modes(); ++i) {
        const std::string out = emitted_label(i);
        psi = append_vacuum_mode(psi, out);
        auto [first, second] = cycle_gates(program.cycles[static_cast<std::size_t>(i)], cutoff, program.order,
                                           program.r_max);
        psi = apply_two_mode_gate(std::move(psi), first, kCyclingMode, out);
        psi = apply_two_mode_gate(std::move(psi), second, kCyclingMode, out);
        truncate_mode(psi, kCyclingMode, program.bond_cutoff);
    }
    return project_mode(psi, kCyclingMode, 0);
}

/// Density-matrix evolution with per-cycle loss.
inline FockDensity run_density(const LoopProgram &program) {
    program.validate();
    check_leakage(program, truncation_leakage(program));
    const FockCutoff cutoff = program.fock_cutoff();
    const double transmissivity = 1.0 - program.loss_per_cycle;
    FockDensity rho = FockDensity::from_pure(FockState::vacuum({kCyclingMode}, cutoff));
    for (int i = 0; i < program.modes(); ++i) {
        const std::string out = emitted_label(i);
        rho = append_vacuum_mode(rho, out);
        auto [first, second] = cycle_gates(program.cycles[static_cast<std::size_t>(i)], cutoff, program.order,
                                           program.r_max);
        rho = apply_two_mode_gate(std::move(rho), first, kCyclingMode, out);
        rho = apply_two_mode_gate(std::move(rho), second, kCyclingMode, out);
        truncate_mode(rho, kCyclingMode, program.bond_cutoff);
        if (transmissivity < 1.0) {
            rho = apply_loss_channel(rho, kCyclingMode, transmissivity);
            if (program.loss_on_emitted) rho = apply_loss_channel(rho, out, transmissivity);
        }
    }
    if (program.termination == Termination::project_vacuum) return project_mode(rho, kCyclingMode, 0);
    return partial_trace(rho, program.emitted_labels());
}

// ---------------------------------------------------------------------------
// Two-loop (2D) lattice interpretation.

/// The second loop delays by tau/n; `sites_per_row` (n~) sites are laid out
/// along the fast axis, which needs n~ < n for unique site assignment.
struct LatticeMap2D {
    int n = 2;
    int sites_per_row = 1;

    void validate() const {
        if (n < 2) throw ConfigError("lattice delay ratio n must be >= 2");
        if (sites_per_row < 1) throw ConfigError("sites per row must be >= 1");
        if (sites_per_row >= n)
            throw ConfigError("sites per row (" + std::to_string(sites_per_row) + ") must be < n (" +
                              std::to_string(n) + ")");
    }
};

struct LatticeSite {
    int row = 0;
    int col = 0;
    friend bool operator==(const LatticeSite &, const LatticeSite &) = default;
};

inline std::vector<LatticeSite> emitted_mode_schedule(int m, const LatticeMap2D &map) {
    map.validate();
    if (m < 0) throw ConfigError("mode count must be >= 0");
    std::vector<LatticeSite> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) out.push_back({k / map.sites_per_row, k % map.sites_per_row});
    return out;
}

/// Emission time of site (row, col) in units of tau/n.
inline long emission_time(const LatticeSite &site, const LatticeMap2D &map) {
    return static_cast<long>(site.row) * map.n + site.col;
}

/// Neighbours along the slow axis: emission times differ by tau.
inline bool slow_axis_neighbors(int k1, int k2, const LatticeMap2D &map) {
    return std::abs(k1 - k2) == map.sites_per_row;
}

/// Neighbours along the fast axis: adjacent within a row, times differ by tau/n.
inline bool fast_axis_neighbors(int k1, int k2, const LatticeMap2D &map) {
    return std::abs(k1 - k2) == 1 && k1 / map.sites_per_row == k2 / map.sites_per_row;
}

// ---------------------------------------------------------------------------
// Text format.

inline constexpr const char *kProgramHeader = "pdcloop loop program v1";

namespace detail {

inline Termination parse_termination(const std::string &v) {
    if (v == "project_vacuum") return Termination::project_vacuum;
    if (v == "trace_out") return Termination::trace_out;
    throw ConfigError("key 'termination': expected project_vacuum or trace_out, got '" + v + "'");
}

inline CycleOrder parse_order(const std::string &v) {
    if (v == "squeeze_then_eom") return CycleOrder::squeeze_then_eom;
    if (v == "eom_then_squeeze") return CycleOrder::eom_then_squeeze;
    throw ConfigError("key 'order': expected squeeze_then_eom or eom_then_squeeze, got '" + v + "'");
}

}  // namespace detail

inline const std::set<std::string> &program_keys() {
    static const std::set<std::string> keys{"cutoff",           "bond_cutoff", "loss_per_cycle", "loss_on_emitted",
                                            "termination",      "order",       "leakage_threshold", "r_max",
                                            "cycle"};
    return keys;
}

/// Reads program keys from a document that may carry other keys too.
inline LoopProgram program_from_document(const kv::Document &doc) {
    LoopProgram p;
    p.cutoff = static_cast<int>(doc.get_long_or("cutoff", p.cutoff));
    p.bond_cutoff = static_cast<int>(doc.get_long_or("bond_cutoff", p.cutoff));
    p.loss_per_cycle = doc.get_double_or("loss_per_cycle", 0.0);
    p.loss_on_emitted = doc.get_bool_or("loss_on_emitted", false);
    p.termination = detail::parse_termination(doc.get_or("termination", "project_vacuum"));
    p.order = detail::parse_order(doc.get_or("order", "squeeze_then_eom"));
    p.leakage_threshold = doc.get_double_or("leakage_threshold", kDefaultLeakageThreshold);
    p.r_max = doc.get_double_or("r_max", kDefaultRMax);
    for (const kv::Entry *e : doc.all("cycle")) {
        const auto v = kv::Document::to_doubles("cycle", e->value);
        if (v.size() != 5)
            throw ConfigError("line " + std::to_string(e->line) +
                              ": key 'cycle' needs 5 numbers (|eta| arg_eta theta phi lambda)");
        p.cycles.push_back({SqueezeParam::polar(v[0], v[1]), Su2Param{v[2], v[3], v[4]}});
    }
    p.validate();
    return p;
}

inline LoopProgram parse_program(std::string_view text) {
    const kv::Document doc = kv::Document::parse(text);
    doc.require_known(program_keys());
    return program_from_document(doc);
}

inline LoopProgram load_program(const std::string &path) {
    const kv::Document doc = kv::Document::load(path);
    doc.require_known(program_keys());
    return program_from_document(doc);
}

inline void write_program_keys(kv::Writer &w, const LoopProgram &p) {
    w.put("cutoff", p.cutoff)
        .put("bond_cutoff", p.bond_cutoff)
        .put("loss_per_cycle", p.loss_per_cycle)
        .put("loss_on_emitted", p.loss_on_emitted)
        .put("termination", to_string(p.termination))
        .put("order", to_string(p.order))
        .put("leakage_threshold", p.leakage_threshold)
        .put("r_max", p.r_max);
    w.comment("cycle = |eta| arg_eta theta phi lambda");
    for (const auto &c : p.cycles)
        w.put_doubles("cycle", {c.eta.r, c.eta.phase, c.v.theta, c.v.phi, c.v.lambda});
}

inline std::string format_program(const LoopProgram &p) {
    kv::Writer w(kProgramHeader);
    write_program_keys(w, p);
    return w.str();
}

}  // namespace pdcloop
