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

// Single-rail qubits: |0> = vacuum, |1> = one photon in a temporal mode.
// Qubit k is bit (m-1-k) of the basis index, so qubit 0 is the first
// emitted mode and the most significant digit, as in the Fock layout.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdcloop/fockcore.hpp"
#include "pdcloop/kvtext.hpp"

namespace pdcloop {

/// Normalized pure qubit state plus the weight kept by the post-selection
/// that produced it.
struct QubitState {
    int qubits = 0;
    VectorXcd amplitudes;
    double postselection_probability = 1.0;

    static QubitState from_amplitudes(VectorXcd amps) {
        const auto n = amps.size();
        if (n == 0 || !std::has_single_bit(static_cast<std::size_t>(n)))
            throw DimensionError("qubit amplitude vector length must be a power of two");
        const double norm = amps.norm();
        if (!(norm > 0.0)) throw PostselectionError("zero qubit state");
        QubitState s;
        s.qubits = std::countr_zero(static_cast<std::size_t>(n));
        s.amplitudes = amps / norm;
        return s;
    }
};

/// Unit-trace qubit density matrix plus its post-selection weight.
struct QubitDensity {
    int qubits = 0;
    MatrixXcd rho;
    double postselection_probability = 1.0;

    static QubitDensity from_pure(const QubitState &s) {
        return {s.qubits, s.amplitudes * s.amplitudes.adjoint(), s.postselection_probability};
    }
};

inline Eigen::Index qubit_dim(int qubits) { return Eigen::Index{1} << qubits; }

inline int qubit_bit(Eigen::Index index, int qubit, int qubits) {
    return static_cast<int>((index >> (qubits - 1 - qubit)) & 1);
}

namespace detail {

/// Fock basis indices whose occupations all lie in {0, 1}, in qubit order.
inline std::vector<Eigen::Index> single_rail_indices(const ModeLayout &layout) {
    const int m = layout.modes();
    std::vector<Eigen::Index> out(static_cast<std::size_t>(qubit_dim(m)));
    for (Eigen::Index q = 0; q < qubit_dim(m); ++q) {
        Eigen::Index idx = 0;
        for (int k = 0; k < m; ++k) idx = idx * layout.d() + qubit_bit(q, k, m);
        out[static_cast<std::size_t>(q)] = idx;
    }
    return out;
}

}  // namespace detail

/// Keeps occupation patterns with every mode in {0, 1}. The recorded
/// probability is the retained weight of the (possibly sub-normalized) input.
inline QubitState project_single_rail(const FockState &state) {
    const auto idx = detail::single_rail_indices(state.layout());
    VectorXcd amps(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t q = 0; q < idx.size(); ++q) amps(static_cast<Eigen::Index>(q)) = state.amplitudes()(idx[q]);
    const double kept = amps.squaredNorm();
    if (!(kept > 0.0)) throw PostselectionError("single-rail post-selection kept zero weight");
    QubitState out = QubitState::from_amplitudes(std::move(amps));
    out.postselection_probability = kept;
    return out;
}

inline QubitDensity project_single_rail(const FockDensity &state) {
    const auto idx = detail::single_rail_indices(state.layout());
    const auto n = static_cast<Eigen::Index>(idx.size());
    MatrixXcd rho(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            rho(i, j) = state.matrix()(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    const double kept = rho.trace().real();
    if (!(kept > 0.0)) throw PostselectionError("single-rail post-selection kept zero weight");
    return {state.layout().modes(), rho / kept, kept};
}

/// Inverse of project_single_rail on the single-rail subspace.
inline FockState embed_single_rail(const QubitState &q, std::vector<std::string> labels, FockCutoff cutoff) {
    if (static_cast<int>(labels.size()) != q.qubits) throw DimensionError("label count differs from qubit count");
    ModeLayout layout(std::move(labels), cutoff);
    VectorXcd amps = VectorXcd::Zero(layout.dim());
    const auto idx = detail::single_rail_indices(layout);
    for (std::size_t k = 0; k < idx.size(); ++k) amps(idx[k]) = q.amplitudes(static_cast<Eigen::Index>(k));
    return FockState(std::move(layout), std::move(amps));
}

/// Conditions on `qubit` having `value` and removes it.
inline QubitDensity condition_on_qubit(const QubitDensity &s, int qubit, int value) {
    if (qubit < 0 || qubit >= s.qubits || s.qubits < 2) throw DimensionError("conditioning qubit out of range");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < qubit_dim(s.qubits); ++i)
        if (qubit_bit(i, qubit, s.qubits) == value) keep.push_back(i);
    const auto n = static_cast<Eigen::Index>(keep.size());
    MatrixXcd rho(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            rho(i, j) = s.rho(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    const double p = rho.trace().real();
    if (!(p > 0.0)) throw PostselectionError("conditioning kept zero weight");
    return {s.qubits - 1, rho / p, s.postselection_probability * p};
}

inline QubitState condition_on_qubit(const QubitState &s, int qubit, int value) {
    if (qubit < 0 || qubit >= s.qubits || s.qubits < 2) throw DimensionError("conditioning qubit out of range");
    VectorXcd amps(qubit_dim(s.qubits - 1));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < qubit_dim(s.qubits); ++i)
        if (qubit_bit(i, qubit, s.qubits) == value) amps(k++) = s.amplitudes(i);
    const double p = amps.squaredNorm();
    if (!(p > 0.0)) throw PostselectionError("conditioning kept zero weight");
    QubitState out = QubitState::from_amplitudes(std::move(amps));
    out.postselection_probability = s.postselection_probability * p;
    return out;
}

/// Keeps basis states with exactly `excitations` ones.
inline QubitState project_excitation_sector(const QubitState &s, int excitations) {
    VectorXcd amps = s.amplitudes;
    for (Eigen::Index i = 0; i < amps.size(); ++i)
        if (std::popcount(static_cast<std::uint64_t>(i)) != excitations) amps(i) = 0.0;
    const double p = amps.squaredNorm();
    if (!(p > 0.0)) throw PostselectionError("excitation sector is empty");
    QubitState out = QubitState::from_amplitudes(std::move(amps));
    out.postselection_probability = s.postselection_probability * p;
    return out;
}

inline QubitDensity project_excitation_sector(const QubitDensity &s, int excitations) {
    MatrixXcd rho = s.rho;
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
        if (std::popcount(static_cast<std::uint64_t>(i)) != excitations) {
            rho.row(i).setZero();
            rho.col(i).setZero();
        }
    const double p = rho.trace().real();
    if (!(p > 0.0)) throw PostselectionError("excitation sector is empty");
    return {s.qubits, rho / p, s.postselection_probability * p};
}

// ---------------------------------------------------------------------------
// Target states.

inline Eigen::Index basis_index(const std::string &bits) {
    Eigen::Index idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw ConfigError("basis label must be a bit string, got '" + bits + "'");
        idx = idx * 2 + (c - '0');
    }
    return idx;
}

inline QubitState vacuum_qubits(int m) {
    VectorXcd a = VectorXcd::Zero(qubit_dim(m));
    a(0) = 1.0;
    return QubitState::from_amplitudes(std::move(a));
}

/// Uniform superposition of the m single-excitation basis states.
inline QubitState w_state(int m) {
    if (m < 1) throw ConfigError("W state needs m >= 1");
    VectorXcd a = VectorXcd::Zero(qubit_dim(m));
    for (int k = 0; k < m; ++k) a(Eigen::Index{1} << k) = 1.0;
    return QubitState::from_amplitudes(std::move(a));
}

/// (|0...0> + |1...1>) / sqrt(2).
inline QubitState ghz_state(int m) {
    VectorXcd a = VectorXcd::Zero(qubit_dim(m));
    a(0) = 1.0;
    a(qubit_dim(m) - 1) = 1.0;
    return QubitState::from_amplitudes(std::move(a));
}

/// (|0011> + |1100>) / sqrt(2): the 4-qubit GHZ state with the last two qubit labels flipped.
inline QubitState relabeled_ghz_state() {
    VectorXcd a = VectorXcd::Zero(16);
    a(basis_index("0011")) = 1.0;
    a(basis_index("1100")) = 1.0;
    return QubitState::from_amplitudes(std::move(a));
}

/// Squared norm of the unnormalized heralded W superposition, 1 + m|eta|^2.
inline double heralded_w_norm2(int m, cplx eta) { return 1.0 + m * std::norm(eta); }

/// |0..0>|0> + eta (|0..01> + ... + |1..00>)|1> on m+1 qubits, normalized.
/// The last qubit heralds the W state of the first m.
inline QubitState target_heralded_w(int m, cplx eta) {
    if (m < 2) throw ConfigError("heralded W needs m >= 2");
    if (!(std::abs(eta) < 1.0)) throw ConfigError("heralded W needs |eta| < 1");
    VectorXcd a = VectorXcd::Zero(qubit_dim(m + 1));
    a(0) = 1.0;
    for (int k = 0; k < m; ++k) a(((Eigen::Index{1} << k) << 1) | 1) = eta;
    return QubitState::from_amplitudes(std::move(a));
}

/// Squared norm of the unnormalized diluted GHZ superposition, 1 + 2|eta|^2.
inline double diluted_ghz_norm2(cplx eta) { return 1.0 + 2.0 * std::norm(eta); }

/// |0000> + eta (|0011> + |1100>), normalized.
inline QubitState target_diluted_ghz(cplx eta) {
    VectorXcd a = VectorXcd::Zero(16);
    a(0) = 1.0;
    a(basis_index("0011")) = eta;
    a(basis_index("1100")) = eta;
    return QubitState::from_amplitudes(std::move(a));
}

// ---------------------------------------------------------------------------
// Fidelity.

/// |<a|b>|^2 for normalized inputs.
inline double fidelity(const QubitState &a, const QubitState &b) {
    if (a.qubits != b.qubits) throw DimensionError("fidelity between different qubit counts");
    const double f = std::norm(a.amplitudes.dot(b.amplitudes)) / (a.amplitudes.squaredNorm() * b.amplitudes.squaredNorm());
    return std::clamp(f, 0.0, 1.0);
}

/// <b|rho|b> with both normalized.
inline double fidelity(const QubitDensity &a, const QubitState &b) {
    if (a.qubits != b.qubits) throw DimensionError("fidelity between different qubit counts");
    const double f = (b.amplitudes.adjoint() * a.rho * b.amplitudes)(0, 0).real() /
                     (a.rho.trace().real() * b.amplitudes.squaredNorm());
    return std::clamp(f, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Spin Hamiltonians.

struct PauliTerm {
    double coefficient = 0.0;
    std::string pauli;  // one of I, X, Y, Z per qubit
    friend bool operator==(const PauliTerm &, const PauliTerm &) = default;
};

enum class Boundary { open, periodic };

struct SpinHamiltonian {
    int qubits = 0;
    std::vector<PauliTerm> terms;

    void validate() const {
        if (qubits < 1) throw ConfigError("Hamiltonian needs at least one qubit");
        for (const auto &t : terms) {
            if (static_cast<int>(t.pauli.size()) != qubits)
                throw ConfigError("Pauli string '" + t.pauli + "' does not have " + std::to_string(qubits) + " sites");
            for (char c : t.pauli)
                if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
                    throw ConfigError("invalid Pauli letter in '" + t.pauli + "'");
        }
    }

    MatrixXcd matrix() const;

    /// Sum of |coefficient|; bounds |<H>| for every state.
    double coefficient_l1() const {
        double s = 0.0;
        for (const auto &t : terms) s += std::abs(t.coefficient);
        return s;
    }

    friend bool operator==(const SpinHamiltonian &, const SpinHamiltonian &) = default;
};

namespace detail {

inline std::string pauli_on(int m, std::initializer_list<std::pair<int, char>> ops) {
    std::string s(static_cast<std::size_t>(m), 'I');
    for (auto [q, c] : ops) s[static_cast<std::size_t>(q)] = c;
    return s;
}

inline std::vector<std::pair<int, int>> bonds(int m, Boundary boundary) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i + 1 < m; ++i) out.emplace_back(i, i + 1);
    if (boundary == Boundary::periodic && m > 2) out.emplace_back(m - 1, 0);
    return out;
}

}  // namespace detail

/// J sum_i (X_i X_{i+1} + Y_i Y_{i+1}) + (B/4) sum_i Z_i.
inline SpinHamiltonian build_xy_hamiltonian(int m, double J, double B, Boundary boundary = Boundary::open) {
    if (m < 2) throw ConfigError("XY chain needs m >= 2");
    SpinHamiltonian h{m, {}};
    for (auto [i, j] : detail::bonds(m, boundary)) {
        h.terms.push_back({J, detail::pauli_on(m, {{i, 'X'}, {j, 'X'}})});
        h.terms.push_back({J, detail::pauli_on(m, {{i, 'Y'}, {j, 'Y'}})});
    }
    for (int i = 0; i < m; ++i) h.terms.push_back({B / 4.0, detail::pauli_on(m, {{i, 'Z'}})});
    return h;
}

/// XY chain plus J sum_i Z_i Z_{i+1}.
inline SpinHamiltonian build_heisenberg_hamiltonian(int m, double J, double B, Boundary boundary = Boundary::open) {
    SpinHamiltonian h = build_xy_hamiltonian(m, J, B, boundary);
    for (auto [i, j] : detail::bonds(m, boundary)) h.terms.push_back({J, detail::pauli_on(m, {{i, 'Z'}, {j, 'Z'}})});
    return h;
}

// Parameters where the uniform W state is the exact XY ground state
// (periodic chain, m = 4). Located with tools/xy_regime_sweep: the window is
// B in (-8, -3.31) at J = -1; this B maximizes the gap (4 - 2 sqrt 2).
inline constexpr double kXyWRegimeJ = -1.0;
inline constexpr double kXyWRegimeB = -4.0 * std::numbers::sqrt2;
inline constexpr Boundary kXyWRegimeBoundary = Boundary::periodic;

/// Action of a Pauli string on basis state j: P|j> = phase * |j ^ flip>.
struct PauliAction {
    Eigen::Index flip = 0;
    Eigen::Index z_mask = 0;  // bits contributing (-1)^bit
    int y_count = 0;
    Eigen::Index y_mask = 0;

    explicit PauliAction(const std::string &pauli) {
        const int m = static_cast<int>(pauli.size());
        for (int k = 0; k < m; ++k) {
            const Eigen::Index bit = Eigen::Index{1} << (m - 1 - k);
            switch (pauli[static_cast<std::size_t>(k)]) {
                case 'X': flip |= bit; break;
                case 'Y':
                    flip |= bit;
                    y_mask |= bit;
                    ++y_count;
                    break;
                case 'Z': z_mask |= bit; break;
                case 'I': break;
                default: throw ConfigError("invalid Pauli letter in '" + pauli + "'");
            }
        }
    }

    /// Y|0> = i|1>, Y|1> = -i|0>, Z|1> = -|1>.
    cplx phase(Eigen::Index j) const {
        static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        const int minus = std::popcount(static_cast<std::uint64_t>(j & (z_mask | y_mask)));
        const cplx base = ipow[y_count % 4];
        return (minus % 2) ? -base : base;
    }
};

inline MatrixXcd pauli_matrix(const std::string &pauli) {
    const PauliAction act(pauli);
    const Eigen::Index n = qubit_dim(static_cast<int>(pauli.size()));
    MatrixXcd p = MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) p(j ^ act.flip, j) = act.phase(j);
    return p;
}

inline MatrixXcd SpinHamiltonian::matrix() const {
    validate();
    const Eigen::Index n = qubit_dim(qubits);
    MatrixXcd h = MatrixXcd::Zero(n, n);
    for (const auto &t : terms) {
        const PauliAction act(t.pauli);
        for (Eigen::Index j = 0; j < n; ++j) h(j ^ act.flip, j) += t.coefficient * act.phase(j);
    }
    return h;
}

/// tr(rho P) for unit-trace rho.
inline double pauli_expectation(const QubitDensity &s, const std::string &pauli) {
    if (static_cast<int>(pauli.size()) != s.qubits) throw DimensionError("Pauli string length differs from qubit count");
    const PauliAction act(pauli);
    cplx acc{0.0, 0.0};
    for (Eigen::Index j = 0; j < s.rho.rows(); ++j) acc += act.phase(j) * s.rho(j, j ^ act.flip);
    return acc.real();
}

inline double energy(const QubitDensity &s, const SpinHamiltonian &h) {
    double e = 0.0;
    for (const auto &t : h.terms) e += t.coefficient * pauli_expectation(s, t.pauli);
    return e;
}

struct GroundState {
    double energy = 0.0;
    double gap = 0.0;
    QubitState state;
};

/// Exact diagonalization.
inline GroundState exact_ground_state(const SpinHamiltonian &h) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h.matrix());
    GroundState g;
    g.energy = es.eigenvalues()(0);
    g.gap = es.eigenvalues().size() > 1 ? es.eigenvalues()(1) - es.eigenvalues()(0) : 0.0;
    g.state = QubitState::from_amplitudes(es.eigenvectors().col(0));
    return g;
}

// ---------------------------------------------------------------------------
// Hamiltonian text format.
//
//   qubits = 4
//   term = -1 XXII        (repeatable)
// or a preset:
//   preset = xy | heisenberg
//   sites = 4
//   J = -1
//   B = -5.65
//   boundary = open | periodic

inline constexpr const char *kHamiltonianHeader = "pdcloop hamiltonian v1";

inline Boundary parse_boundary(const std::string &v) {
    if (v == "open") return Boundary::open;
    if (v == "periodic") return Boundary::periodic;
    throw ConfigError("key 'boundary': expected open or periodic, got '" + v + "'");
}

inline std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

inline SpinHamiltonian hamiltonian_from_document(const kv::Document &doc) {
    if (doc.has("preset")) {
        const std::string preset = doc.get("preset");
        const int m = static_cast<int>(doc.get_long("sites"));
        const double J = doc.get_double("J"), B = doc.get_double("B");
        const Boundary bc = parse_boundary(doc.get_or("boundary", "open"));
        if (preset == "xy") return build_xy_hamiltonian(m, J, B, bc);
        if (preset == "heisenberg") return build_heisenberg_hamiltonian(m, J, B, bc);
        throw ConfigError("key 'preset': expected xy or heisenberg, got '" + preset + "'");
    }
    SpinHamiltonian h;
    h.qubits = static_cast<int>(doc.get_long("qubits"));
    for (const kv::Entry *e : doc.all("term")) {
        const auto tok = kv::split_ws(e->value);
        if (tok.size() != 2)
            throw ConfigError("line " + std::to_string(e->line) + ": key 'term' needs '<coefficient> <pauli>'");
        h.terms.push_back({kv::Document::to_double("term", tok[0]), tok[1]});
    }
    h.validate();
    return h;
}

inline SpinHamiltonian parse_hamiltonian(std::string_view text) {
    const auto doc = kv::Document::parse(text);
    doc.require_known({"qubits", "term", "preset", "sites", "J", "B", "boundary"});
    return hamiltonian_from_document(doc);
}

inline std::string format_hamiltonian(const SpinHamiltonian &h) {
    kv::Writer w(kHamiltonianHeader);
    w.put("qubits", h.qubits);
    for (const auto &t : h.terms) w.put("term", kv::format_double(t.coefficient) + " " + t.pauli);
    return w.str();
}

}  // namespace pdcloop
