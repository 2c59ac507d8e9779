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

// Finite-shot Pauli measurements on a post-selected single-rail state.
//
// Each observable gets N post-selected shots. A shot is a +-1 outcome drawn
// from the exact Born distribution, so the +1 count is Binomial(N, p+) with
// p+ = (1 + <P>) / 2. The stream for term t is seeded with
// derive_seed(seed, t), which makes the result independent of evaluation
// order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pdcloop/encoding.hpp"
#include "pdcloop/errors.hpp"
#include "pdcloop/random.hpp"

namespace pdcloop {

struct ShotPlan {
    long shots_per_observable = 1000;
    std::uint64_t seed = 0;
    /// Use exact expectation values instead of sampling.
    bool exact = false;

    static ShotPlan exact_values() { return {1, 0, true}; }

    void validate() const {
        if (!exact && shots_per_observable < 1) throw ConfigError("shots per observable must be >= 1");
    }
};

struct PauliEstimate {
    std::string pauli;
    double mean = 0.0;
    double standard_error = 0.0;
    long shots = 0;
};

namespace detail {

inline bool is_identity(const std::string &pauli) {
    return std::all_of(pauli.begin(), pauli.end(), [](char c) { return c == 'I'; });
}

}  // namespace detail

/// Sample mean of N +-1 outcomes and its standard error s / sqrt(N), with s
/// the sample standard deviation. A single shot has no spread estimate; its
/// error is reported as 1, the largest possible.
inline PauliEstimate sample_pauli(const QubitDensity &state, const std::string &pauli, const ShotPlan &plan,
                                  std::uint64_t stream = 0) {
    plan.validate();
    const double exact = std::clamp(pauli_expectation(state, pauli), -1.0, 1.0);
    if (plan.exact || detail::is_identity(pauli)) return {pauli, exact, 0.0, plan.exact ? 0 : plan.shots_per_observable};
    const long n = plan.shots_per_observable;
    Rng rng(derive_seed(plan.seed, stream));
    const long plus = rng.binomial(n, (1.0 + exact) / 2.0);
    const double mean = static_cast<double>(2 * plus - n) / static_cast<double>(n);
    double se = 1.0;
    if (n > 1) se = std::sqrt(std::max(0.0, 1.0 - mean * mean) / static_cast<double>(n - 1));
    return {pauli, mean, se, n};
}

struct EnergyEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::vector<PauliEstimate> terms;
    /// Post-selected shots actually used per observable.
    long shots_per_observable = 0;
    /// Shots needed before post-selection to collect them, N / p (expected).
    double raw_shots_per_observable = 0.0;
    double postselection_probability = 1.0;
};

/// sum_t c_t <P_t>, errors combined in quadrature.
inline EnergyEstimate estimate_energy(const QubitDensity &state, const SpinHamiltonian &h, const ShotPlan &plan) {
    h.validate();
    if (h.qubits != state.qubits) throw DimensionError("Hamiltonian and state have different qubit counts");
    EnergyEstimate out;
    double var = 0.0;
    for (std::size_t t = 0; t < h.terms.size(); ++t) {
        auto est = sample_pauli(state, h.terms[t].pauli, plan, t);
        out.value += h.terms[t].coefficient * est.mean;
        var += std::pow(h.terms[t].coefficient * est.standard_error, 2);
        out.terms.push_back(std::move(est));
    }
    out.standard_error = std::sqrt(var);
    out.shots_per_observable = plan.exact ? 0 : plan.shots_per_observable;
    out.postselection_probability = state.postselection_probability;
    out.raw_shots_per_observable = plan.exact ? 0.0
                                              : static_cast<double>(plan.shots_per_observable) /
                                                    std::max(state.postselection_probability,
                                                             std::numeric_limits<double>::min());
    return out;
}

}  // namespace pdcloop
