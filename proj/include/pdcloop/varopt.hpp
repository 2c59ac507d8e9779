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

// Derivative-free variational optimization over loop parameters.
//
// Parameters are flattened per cycle as (|eta|, arg eta, theta, phi, lambda)
// inside a box. The local search is Nelder-Mead with the dimension-adaptive
// coefficients of Gao and Han; trial points are clamped into the box. Each
// restart starts from a seeded random point (or, for restart 0, optionally
// from the template program), and every evaluation is recorded.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pdcloop/encoding.hpp"
#include "pdcloop/errors.hpp"
#include "pdcloop/kvtext.hpp"
#include "pdcloop/loopcircuit.hpp"
#include "pdcloop/measurement.hpp"
#include "pdcloop/parallel.hpp"
#include "pdcloop/random.hpp"
#include "pdcloop/singlerail.hpp"

namespace pdcloop {

using Eigen::VectorXd;

/// Infidelity returned when post-selection fails.
inline constexpr double kInfidelityPenalty = 1.0;
/// Post-selection probabilities below this count as failed post-selection.
inline constexpr double kMinPostselectionProbability = 1e-12;

/// Energy penalty: strictly above any eigenvalue of h.
inline double energy_penalty(const SpinHamiltonian &h) { return h.coefficient_l1() + 1.0; }

// ---------------------------------------------------------------------------
// Parameter space.

struct Bounds {
    VectorXd lower;
    VectorXd upper;

    Eigen::Index size() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size() || lower.size() == 0) throw DimensionError("bounds need matching, nonempty sizes");
        for (Eigen::Index k = 0; k < lower.size(); ++k)
            if (!(lower(k) <= upper(k))) throw ConfigError("bound " + std::to_string(k) + " has lower > upper");
    }
    bool contains(const VectorXd &x) const {
        return x.size() == size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }
    VectorXd clamp(const VectorXd &x) const { return x.cwiseMax(lower).cwiseMin(upper); }
    VectorXd uniform(Rng &rng) const {
        VectorXd x(size());
        for (Eigen::Index k = 0; k < size(); ++k) x(k) = rng.uniform(lower(k), upper(k));
        return x;
    }
};

/// Five coordinates per cycle: |eta| in [0, r_max], arg eta, phi, lambda in
/// [-pi, pi], theta in [0, pi].
struct ParameterSpace {
    int cycles = 0;
    double r_max = kDefaultRMax;

    static constexpr int kPerCycle = 5;

    Eigen::Index size() const { return static_cast<Eigen::Index>(kPerCycle) * cycles; }

    Bounds bounds() const {
        const double pi = std::numbers::pi;
        Bounds b{VectorXd(size()), VectorXd(size())};
        for (int i = 0; i < cycles; ++i) {
            b.lower.segment<kPerCycle>(kPerCycle * i) << 0.0, -pi, 0.0, -pi, -pi;
            b.upper.segment<kPerCycle>(kPerCycle * i) << r_max, pi, pi, pi, pi;
        }
        return b;
    }

    VectorXd from_cycles(const std::vector<CycleParams> &cs) const {
        if (static_cast<int>(cs.size()) != cycles) throw DimensionError("cycle count does not match parameter space");
        VectorXd x(size());
        for (int i = 0; i < cycles; ++i) {
            const auto &c = cs[static_cast<std::size_t>(i)];
            x.segment<kPerCycle>(kPerCycle * i) << c.eta.r, c.eta.phase, c.v.theta, c.v.phi, c.v.lambda;
        }
        return x;
    }

    std::vector<CycleParams> to_cycles(const VectorXd &x) const {
        if (x.size() != size()) throw DimensionError("parameter vector has the wrong length");
        std::vector<CycleParams> cs;
        for (int i = 0; i < cycles; ++i) {
            const auto *v = x.data() + kPerCycle * i;
            cs.push_back({SqueezeParam::polar(v[0], v[1]), Su2Param{v[2], v[3], v[4]}});
        }
        return cs;
    }

    /// |eta| uniform in [0.05, 0.5] (capped at r_max), angles uniform.
    VectorXd random_point(Rng &rng) const {
        const double pi = std::numbers::pi;
        const double hi = std::min(0.5, r_max), lo = std::min(0.05, hi);
        VectorXd x(size());
        for (int i = 0; i < cycles; ++i) {
            const double r = rng.uniform(lo, hi);
            const double a = rng.uniform(-pi, pi);
            const double th = rng.uniform(0.0, pi);
            const double ph = rng.uniform(-pi, pi);
            const double la = rng.uniform(-pi, pi);
            x.segment<kPerCycle>(kPerCycle * i) << r, a, th, ph, la;
        }
        return x;
    }

    std::vector<std::string> coordinate_names() const {
        static const char *kNames[kPerCycle] = {"abs_eta", "arg_eta", "theta", "phi", "lambda"};
        std::vector<std::string> out;
        for (int i = 0; i < cycles; ++i)
            for (const char *n : kNames) out.push_back("c" + std::to_string(i + 1) + "_" + n);
        return out;
    }
};

inline ParameterSpace parameter_space(const LoopProgram &p) { return {p.modes(), p.r_max}; }

inline LoopProgram with_parameters(const LoopProgram &tmpl, const VectorXd &x) {
    LoopProgram p = tmpl;
    p.cycles = parameter_space(tmpl).to_cycles(x);
    return p;
}

// ---------------------------------------------------------------------------
// Targets and objectives.

enum class ObjectiveKind { fidelity, energy };
enum class TargetKind { vacuum, w, ghz, heralded_w, diluted_ghz, relabeled_ghz };

inline std::string to_string(ObjectiveKind k) { return k == ObjectiveKind::fidelity ? "fidelity" : "energy"; }

inline std::string to_string(TargetKind k) {
    switch (k) {
        case TargetKind::vacuum: return "vacuum";
        case TargetKind::w: return "w";
        case TargetKind::ghz: return "ghz";
        case TargetKind::heralded_w: return "heralded_w";
        case TargetKind::diluted_ghz: return "diluted_ghz";
        case TargetKind::relabeled_ghz: return "relabeled_ghz";
    }
    return "?";
}

inline ObjectiveKind parse_objective_kind(const std::string &v) {
    if (v == "fidelity") return ObjectiveKind::fidelity;
    if (v == "energy") return ObjectiveKind::energy;
    throw ConfigError("key 'objective': expected fidelity or energy, got '" + v + "'");
}

inline TargetKind parse_target_kind(const std::string &v) {
    for (auto k : {TargetKind::vacuum, TargetKind::w, TargetKind::ghz, TargetKind::heralded_w, TargetKind::diluted_ghz,
                   TargetKind::relabeled_ghz})
        if (to_string(k) == v) return k;
    throw ConfigError("key 'target': expected vacuum, w, ghz, heralded_w, diluted_ghz or relabeled_ghz, got '" + v +
                      "'");
}

/// A named target on `qubits` qubits. heralded_w puts the herald on the last
/// qubit; diluted_ghz and relabeled_ghz need 4 qubits.
struct TargetSpec {
    TargetKind kind = TargetKind::heralded_w;
    double eta = 0.2;

    QubitState build(int qubits) const {
        switch (kind) {
            case TargetKind::vacuum: return vacuum_qubits(qubits);
            case TargetKind::w: return w_state(qubits);
            case TargetKind::ghz: return ghz_state(qubits);
            case TargetKind::heralded_w: return target_heralded_w(qubits - 1, eta);
            case TargetKind::diluted_ghz:
            case TargetKind::relabeled_ghz:
                if (qubits != 4) throw ConfigError("target '" + to_string(kind) + "' needs 4 qubits");
                return kind == TargetKind::diluted_ghz ? target_diluted_ghz(eta) : relabeled_ghz_state();
        }
        throw ConfigError("unknown target");
    }
};

/// Penalties grow with the leakage excess above the threshold, so a search
/// that starts in the truncated region still sees a way back.
inline double truncation_excess(const TruncationError &e) { return std::max(0.0, e.leakage() - e.threshold()); }

/// Graded excess below the minimum post-selection probability, in (0, 1].
inline double probability_shortfall(double p, double min_probability) {
    return std::clamp(1.0 - p / min_probability, 0.0, 1.0);
}

/// 1 - F between the post-selected single-rail state of `program` and `target`.
/// Post-selection below `min_probability` gives the penalty plus the relative
/// shortfall; truncation above threshold gives the penalty plus the leakage
/// excess. Penalized values therefore exceed 1.
inline double objective_infidelity(const LoopProgram &program, const QubitState &target,
                                   double min_probability = kMinPostselectionProbability) {
    try {
        const QubitDensity s = single_rail_state(program);
        if (!(s.postselection_probability >= min_probability))
            return kInfidelityPenalty + probability_shortfall(s.postselection_probability, min_probability);
        const double f = fidelity(s, target);
        return std::isfinite(f) ? 1.0 - f : kInfidelityPenalty;
    } catch (const PostselectionError &) {
        return kInfidelityPenalty + 1.0;
    } catch (const TruncationError &e) {
        return kInfidelityPenalty + truncation_excess(e);
    }
}

/// Single-rail state, conditioned on the last qubit reading 1 when `herald`.
inline QubitDensity energy_state(const LoopProgram &program, bool herald) {
    QubitDensity s = single_rail_state(program);
    if (herald) s = condition_on_qubit(s, s.qubits - 1, 1);
    return s;
}

/// Energy estimate of the generated state; throws on failed post-selection.
inline EnergyEstimate evaluate_energy(const LoopProgram &program, const SpinHamiltonian &h, bool herald,
                                      const ShotPlan &plan, double min_probability = kMinPostselectionProbability) {
    const QubitDensity s = energy_state(program, herald);
    if (!(s.postselection_probability >= min_probability))
        throw PostselectionError("post-selection probability " + std::to_string(s.postselection_probability) +
                                 " below " + std::to_string(min_probability));
    return estimate_energy(s, h, plan);
}

/// Scalar energy objective with the same penalty structure as
/// objective_infidelity, offset by energy_penalty(h). `stream` selects the
/// shot noise.
inline double objective_energy(const LoopProgram &program, const SpinHamiltonian &h, bool herald, const ShotPlan &plan,
                               std::uint64_t stream = 0, double min_probability = kMinPostselectionProbability) {
    ShotPlan p = plan;
    p.seed = derive_seed(plan.seed, stream);
    try {
        const QubitDensity s = energy_state(program, herald);
        if (!(s.postselection_probability >= min_probability))
            return energy_penalty(h) + probability_shortfall(s.postselection_probability, min_probability);
        const double e = estimate_energy(s, h, p).value;
        return std::isfinite(e) ? e : energy_penalty(h);
    } catch (const PostselectionError &) {
        return energy_penalty(h) + 1.0;
    } catch (const TruncationError &e) {
        return energy_penalty(h) + truncation_excess(e);
    }
}

// ---------------------------------------------------------------------------
// Nelder-Mead with box clamping and restarts.

/// f(x, stream). `stream` is unique per evaluation within one minimize() call.
using Objective = std::function<double(const VectorXd &, std::uint64_t)>;

struct OptimizerSettings {
    long max_evaluations = 5000;  // per restart
    int restarts = 8;
    double ftol = 1e-10;          // simplex value spread
    double xtol = 1e-8;           // simplex diameter (max norm)
    double initial_step = 0.1;    // fraction of each coordinate's range
    std::uint64_t seed = 0;
    bool start_from_template = false;
    int threads = 1;

    void validate() const {
        if (max_evaluations < 2) throw ConfigError("max_evaluations must be >= 2");
        if (restarts < 1) throw ConfigError("restarts must be >= 1");
        if (!(ftol >= 0.0) || !(xtol >= 0.0)) throw ConfigError("tolerances must be >= 0");
        if (!(initial_step > 0.0 && initial_step <= 1.0)) throw ConfigError("initial_step must lie in (0, 1]");
    }
};

struct TraceEntry {
    int restart = 0;
    VectorXd parameters;
    double value = 0.0;
};

struct RestartSummary {
    long evaluations = 0;
    double best_value = std::numeric_limits<double>::infinity();
    VectorXd best_parameters;
    bool converged = false;
};

struct OptimizationResult {
    std::vector<TraceEntry> trace;
    std::vector<RestartSummary> restarts;
    VectorXd best_parameters;
    double best_value = std::numeric_limits<double>::infinity();
    int best_restart = -1;
    long evaluations = 0;
    /// Whether the restart that produced the best value met both tolerances.
    bool converged = false;
};

/// Stream id of local evaluation `k` in restart `r`.
inline std::uint64_t evaluation_stream(int restart, long k) {
    return (static_cast<std::uint64_t>(restart) << 32) | static_cast<std::uint64_t>(k);
}

namespace detail {

struct BudgetExhausted {};

/// One Nelder-Mead descent from x0. Appends every evaluation to `trace`.
inline RestartSummary nelder_mead(const Objective &f, const Bounds &box, const VectorXd &x0,
                                  const OptimizerSettings &s, int restart, std::vector<TraceEntry> &trace) {
    const Eigen::Index n = box.size();
    const double dn = static_cast<double>(n);
    const double alpha = 1.0, beta = 1.0 + 2.0 / dn;
    const double gamma = 0.75 - 1.0 / (2.0 * dn), delta = 1.0 - 1.0 / dn;

    RestartSummary out;
    auto eval = [&](const VectorXd &x) {
        if (out.evaluations >= s.max_evaluations) throw BudgetExhausted{};
        const double v = f(x, evaluation_stream(restart, out.evaluations));
        ++out.evaluations;
        trace.push_back({restart, x, v});
        if (v < out.best_value) {
            out.best_value = v;
            out.best_parameters = x;
        }
        return v;
    };

    std::vector<VectorXd> xs;
    std::vector<double> fs;
    try {
        xs.push_back(box.clamp(x0));
        fs.push_back(eval(xs[0]));
        for (Eigen::Index k = 0; k < n; ++k) {
            VectorXd x = xs[0];
            const double range = box.upper(k) - box.lower(k);
            const double step = s.initial_step * (range > 0.0 ? range : 1.0);
            x(k) = x(k) + step <= box.upper(k) ? x(k) + step : x(k) - step;
            x = box.clamp(x);
            xs.push_back(x);
            fs.push_back(eval(x));
        }
        std::vector<std::size_t> order(static_cast<std::size_t>(n) + 1);
        while (true) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
            std::vector<VectorXd> sx;
            std::vector<double> sf;
            for (auto i : order) {
                sx.push_back(xs[i]);
                sf.push_back(fs[i]);
            }
            xs = std::move(sx);
            fs = std::move(sf);

            double diameter = 0.0;
            for (std::size_t i = 1; i < xs.size(); ++i)
                diameter = std::max(diameter, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
            if (fs.back() - fs.front() <= s.ftol && diameter <= s.xtol) {
                out.converged = true;
                break;
            }

            const std::size_t w = xs.size() - 1;
            VectorXd c = VectorXd::Zero(n);
            for (std::size_t i = 0; i < w; ++i) c += xs[i];
            c /= dn;

            const VectorXd xr = box.clamp(c + alpha * (c - xs[w]));
            const double fr = eval(xr);
            if (fr < fs[0]) {
                const VectorXd xe = box.clamp(c + beta * (xr - c));
                const double fe = eval(xe);
                if (fe < fr) {
                    xs[w] = xe;
                    fs[w] = fe;
                } else {
                    xs[w] = xr;
                    fs[w] = fr;
                }
                continue;
            }
            if (fr < fs[w - 1]) {
                xs[w] = xr;
                fs[w] = fr;
                continue;
            }
            if (fr < fs[w]) {
                const VectorXd xc = box.clamp(c + gamma * (xr - c));
                const double fc = eval(xc);
                if (fc <= fr) {
                    xs[w] = xc;
                    fs[w] = fc;
                    continue;
                }
            } else {
                const VectorXd xc = box.clamp(c + gamma * (xs[w] - c));
                const double fc = eval(xc);
                if (fc < fs[w]) {
                    xs[w] = xc;
                    fs[w] = fc;
                    continue;
                }
            }
            for (std::size_t i = 1; i < xs.size(); ++i) {
                xs[i] = box.clamp(xs[0] + delta * (xs[i] - xs[0]));
                fs[i] = eval(xs[i]);
            }
        }
    } catch (const BudgetExhausted &) {
    }
    return out;
}

}  // namespace detail

/// Multi-start bounded Nelder-Mead. Restart r draws its start from
/// Rng(derive_seed(seed, r)) via `sample`, except that restart 0 uses `start`
/// when given. Restarts may run on several threads; the trace is ordered by
/// restart, then evaluation, either way.
inline OptimizationResult minimize(const Objective &f, const Bounds &box, const OptimizerSettings &settings,
                                   const std::function<VectorXd(Rng &)> &sample = {},
                                   const std::optional<VectorXd> &start = std::nullopt) {
    box.validate();
    settings.validate();
    if (start && start->size() != box.size()) throw DimensionError("start point has the wrong length");
    const auto restarts = static_cast<std::size_t>(settings.restarts);
    std::vector<std::vector<TraceEntry>> traces(restarts);
    std::vector<RestartSummary> summaries(restarts);
    parallel_for(restarts, settings.threads, [&](std::size_t r) {
        VectorXd x0;
        if (r == 0 && start) {
            x0 = *start;
        } else {
            Rng rng(derive_seed(settings.seed, r));
            x0 = sample ? sample(rng) : box.uniform(rng);
        }
        summaries[r] = detail::nelder_mead(f, box, x0, settings, static_cast<int>(r), traces[r]);
    });

    OptimizationResult out;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (summaries[r].best_value < out.best_value) {
            out.best_value = summaries[r].best_value;
            out.best_parameters = summaries[r].best_parameters;
            out.best_restart = static_cast<int>(r);
            out.converged = summaries[r].converged;
        }
        out.evaluations += summaries[r].evaluations;
        out.trace.insert(out.trace.end(), std::make_move_iterator(traces[r].begin()),
                         std::make_move_iterator(traces[r].end()));
    }
    out.restarts = std::move(summaries);
    return out;
}

// ---------------------------------------------------------------------------
// Variational runs.

struct VariationalRun {
    ObjectiveKind objective = ObjectiveKind::fidelity;
    /// Template: settings and cycle count; its cycles are the optional start.
    LoopProgram program;
    TargetSpec target;
    SpinHamiltonian hamiltonian;
    /// Evaluate the energy on the state conditioned on the last qubit = 1.
    bool herald = false;
    ShotPlan shots = ShotPlan::exact_values();
    /// Post-selection probability (including the herald) below which the
    /// objective is penalized.
    double min_probability = kMinPostselectionProbability;
    OptimizerSettings optimizer;

    bool completed = false;
    OptimizationResult result;

    int energy_qubits() const { return program.modes() - (herald ? 1 : 0); }

    void validate() const {
        program.validate();
        optimizer.validate();
        shots.validate();
        if (!(target.eta >= 0.0 && target.eta < 1.0)) throw ConfigError("target_eta must lie in [0, 1)");
        if (!(min_probability > 0.0 && min_probability <= 1.0)) throw ConfigError("min_probability must lie in (0, 1]");
        if (objective == ObjectiveKind::fidelity) {
            (void)target.build(program.modes());
        } else {
            hamiltonian.validate();
            if (hamiltonian.qubits != energy_qubits())
                throw ConfigError("Hamiltonian acts on " + std::to_string(hamiltonian.qubits) + " qubits but the run provides " +
                                  std::to_string(energy_qubits()));
        }
    }

    /// ftol raised to twice the worst-case energy standard error under shots.
    double effective_ftol() const {
        if (objective != ObjectiveKind::energy || shots.exact) return optimizer.ftol;
        double c2 = 0.0;
        for (const auto &t : hamiltonian.terms)
            if (t.pauli.find_first_not_of('I') != std::string::npos) c2 += t.coefficient * t.coefficient;
        const double n = static_cast<double>(shots.shots_per_observable);
        const double se = std::sqrt(c2) / std::sqrt(std::max(1.0, n - 1.0));
        return std::max(optimizer.ftol, 2.0 * se);
    }

    LoopProgram best_program() const {
        if (!completed) throw Error("run has not been minimized");
        return with_parameters(program, result.best_parameters);
    }
};

/// Objective of a run as a function of the flat parameter vector.
inline Objective run_objective(const VariationalRun &run) {
    if (run.objective == ObjectiveKind::fidelity) {
        const QubitState target = run.target.build(run.program.modes());
        const LoopProgram tmpl = run.program;
        const double min_p = run.min_probability;
        return [target, tmpl, min_p](const VectorXd &x, std::uint64_t) {
            return objective_infidelity(with_parameters(tmpl, x), target, min_p);
        };
    }
    const LoopProgram tmpl = run.program;
    const SpinHamiltonian h = run.hamiltonian;
    const bool herald = run.herald;
    const ShotPlan plan = run.shots;
    const double min_p = run.min_probability;
    return [tmpl, h, herald, plan, min_p](const VectorXd &x, std::uint64_t stream) {
        return objective_energy(with_parameters(tmpl, x), h, herald, plan, stream, min_p);
    };
}

/// Runs the optimizer and returns the completed run.
inline VariationalRun minimize(VariationalRun run) {
    run.validate();
    const ParameterSpace space = parameter_space(run.program);
    OptimizerSettings s = run.optimizer;
    s.ftol = run.effective_ftol();
    std::optional<VectorXd> start;
    if (s.start_from_template) start = space.from_cycles(run.program.cycles);
    run.result = minimize(run_objective(run), space.bounds(), s,
                          [&space](Rng &rng) { return space.random_point(rng); }, start);
    run.completed = true;
    return run;
}

// ---------------------------------------------------------------------------
// Text formats.

inline constexpr const char *kRunHeader = "pdcloop variational run v1";

inline std::set<std::string> run_keys() {
    std::set<std::string> keys = program_keys();
    keys.insert({"objective", "target", "target_eta", "herald", "shots", "seed", "max_evaluations", "restarts", "ftol",
                 "xtol", "initial_step", "start", "min_probability", "modes", "qubits", "term", "preset", "sites", "J", "B", "boundary",
                 "result."});
    return keys;
}

inline ShotPlan parse_shots(const std::string &v, std::uint64_t seed) {
    if (v == "exact") return {1, seed, true};
    ShotPlan p{kv::Document::to_long("shots", v), seed, false};
    p.validate();
    return p;
}

inline std::string format_shots(const ShotPlan &p) {
    return p.exact ? std::string("exact") : std::to_string(p.shots_per_observable);
}

inline std::uint64_t parse_seed(const std::string &key, const std::string &v) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return x;
}

/// Reads a run config (and results, if present). `modes = m` without cycle
/// lines gives m all-zero cycles.
inline VariationalRun parse_run(std::string_view text) {
    kv::Document doc = kv::Document::parse(text);
    doc.require_known(run_keys());
    if (!doc.has("cycle") && doc.has("modes")) {
        const long m = doc.get_long("modes");
        if (m < 1 || m > 24) throw ConfigError("key 'modes': expected 1..24, got " + std::to_string(m));
        std::string padded(text);
        padded += "\n";
        for (long i = 0; i < m; ++i) padded += "cycle = 0 0 0 0 0\n";
        doc = kv::Document::parse(padded);
    }
    VariationalRun run;
    run.objective = parse_objective_kind(doc.get_or("objective", "fidelity"));
    run.program = program_from_document(doc);
    if (doc.has("modes") && doc.get_long("modes") != run.program.modes())
        throw ConfigError("key 'modes' disagrees with the number of cycle lines");
    run.target.kind = parse_target_kind(doc.get_or("target", "heralded_w"));
    run.target.eta = doc.get_double_or("target_eta", run.target.eta);
    run.herald = doc.get_bool_or("herald", false);
    run.min_probability = doc.get_double_or("min_probability", kMinPostselectionProbability);
    const std::uint64_t seed = doc.has("seed") ? parse_seed("seed", doc.get("seed")) : 0;
    run.shots = parse_shots(doc.get_or("shots", "exact"), seed);
    auto &o = run.optimizer;
    o.seed = seed;
    o.max_evaluations = doc.get_long_or("max_evaluations", o.max_evaluations);
    o.restarts = static_cast<int>(doc.get_long_or("restarts", o.restarts));
    o.ftol = doc.get_double_or("ftol", o.ftol);
    o.xtol = doc.get_double_or("xtol", o.xtol);
    o.initial_step = doc.get_double_or("initial_step", o.initial_step);
    const std::string start = doc.get_or("start", "random");
    if (start != "random" && start != "template")
        throw ConfigError("key 'start': expected random or template, got '" + start + "'");
    o.start_from_template = start == "template";
    if (run.objective == ObjectiveKind::energy) run.hamiltonian = hamiltonian_from_document(doc);

    if (doc.has("result.best_value")) {
        run.completed = true;
        auto &r = run.result;
        r.best_value = doc.get_double("result.best_value");
        r.converged = doc.get_bool_or("result.converged", false);
        r.best_restart = static_cast<int>(doc.get_long_or("result.best_restart", 0));
        r.evaluations = doc.get_long_or("result.evaluations", 0);
        std::vector<CycleParams> cs;
        for (const kv::Entry *e : doc.all("result.cycle")) {
            const auto v = kv::Document::to_doubles("result.cycle", e->value);
            if (v.size() != 5) throw ConfigError("line " + std::to_string(e->line) + ": key 'result.cycle' needs 5 numbers");
            cs.push_back({SqueezeParam::polar(v[0], v[1]), Su2Param{v[2], v[3], v[4]}});
        }
        r.best_parameters = parameter_space(run.program).from_cycles(cs);
    }
    run.validate();
    return run;
}

inline VariationalRun load_run(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run(buf.str());
}

/// Config keys, then result keys for a completed run. The trace goes to CSV.
inline std::string format_run(const VariationalRun &run) {
    kv::Writer w(kRunHeader);
    w.put("objective", to_string(run.objective));
    if (run.objective == ObjectiveKind::fidelity) {
        w.put("target", to_string(run.target.kind)).put("target_eta", run.target.eta);
    } else {
        w.put("herald", run.herald).put("qubits", run.hamiltonian.qubits);
        for (const auto &t : run.hamiltonian.terms) w.put("term", kv::format_double(t.coefficient) + " " + t.pauli);
    }
    w.put("min_probability", run.min_probability)
        .put("shots", format_shots(run.shots))
        .put("seed", std::to_string(run.optimizer.seed))
        .put("max_evaluations", run.optimizer.max_evaluations)
        .put("restarts", run.optimizer.restarts)
        .put("ftol", run.optimizer.ftol)
        .put("xtol", run.optimizer.xtol)
        .put("initial_step", run.optimizer.initial_step)
        .put("start", std::string(run.optimizer.start_from_template ? "template" : "random"));
    write_program_keys(w, run.program);
    if (run.completed) {
        const auto &r = run.result;
        w.put("result.best_value", r.best_value)
            .put("result.converged", r.converged)
            .put("result.best_restart", r.best_restart)
            .put("result.evaluations", r.evaluations);
        for (const auto &c : parameter_space(run.program).to_cycles(r.best_parameters))
            w.put_doubles("result.cycle", {c.eta.r, c.eta.phase, c.v.theta, c.v.phi, c.v.lambda});
    }
    return w.str();
}

/// CSV with columns evaluation, restart, one per parameter, objective.
inline std::string format_trace_csv(const OptimizationResult &r, const ParameterSpace &space) {
    std::string out = "evaluation,restart";
    for (const auto &name : space.coordinate_names()) out += "," + name;
    out += ",objective\n";
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
        out += std::to_string(k) + "," + std::to_string(r.trace[k].restart);
        const auto &x = r.trace[k].parameters;
        for (Eigen::Index i = 0; i < x.size(); ++i) out += "," + kv::format_double(x(i));
        out += "," + kv::format_double(r.trace[k].value) + "\n";
    }
    return out;
}

inline std::vector<TraceEntry> parse_trace_csv(std::string_view text, const ParameterSpace &space) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::string header = "evaluation,restart";
    for (const auto &name : space.coordinate_names()) header += "," + name;
    header += ",objective";
    if (!std::getline(in, line) || line != header) throw ConfigError("trace: unexpected header");
    const auto cols = static_cast<std::size_t>(space.size()) + 3;
    std::vector<TraceEntry> out;
    for (int row = 2; std::getline(in, line); ++row) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        const std::string where = "trace line " + std::to_string(row);
        if (f.size() != cols) throw ConfigError(where + ": expected " + std::to_string(cols) + " columns");
        if (kv::Document::to_long(where, f[0]) != static_cast<long>(out.size()))
            throw ConfigError(where + ": evaluations out of order");
        TraceEntry e;
        e.restart = static_cast<int>(kv::Document::to_long(where, f[1]));
        e.parameters.resize(space.size());
        for (Eigen::Index i = 0; i < space.size(); ++i)
            e.parameters(i) = kv::Document::to_double(where, f[static_cast<std::size_t>(i) + 2]);
        e.value = kv::Document::to_double(where, f.back());
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace pdcloop
