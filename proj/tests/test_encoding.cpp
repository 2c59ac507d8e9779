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

#include "pdcloop/encoding.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "test_util.hpp"

using namespace pdcloop;
using namespace pdcloop::testing;

namespace {

double max_abs(const MatrixXcd &m) { return m.cwiseAbs().maxCoeff(); }

FockState tmsv(double r, int d) {
    auto g = build_two_mode_squeezer(SqueezeParam::polar(r, 0.0), FockCutoff(d), {2.0, 1.0});
    return apply_two_mode_gate(FockState::vacuum({"h", "v"}, FockCutoff(d)), g, "h", "v");
}

}  // namespace

TEST(single_rail, vacuum_maps_to_all_zero) {
    const auto q = project_single_rail(FockState::vacuum({"a", "b", "c"}, FockCutoff(4)));
    EXPECT_EQ(q.qubits, 3);
    EXPECT_NEAR(std::abs(q.amplitudes(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(q.postselection_probability, 1.0, 1e-15);
}

TEST(single_rail, tmsv_pair) {
    const double r = 0.3, t = std::tanh(r);
    const auto psi = tmsv(r, 4);
    const auto q = project_single_rail(psi);
    EXPECT_NEAR(q.postselection_probability, (1 + t * t) / std::pow(std::cosh(r), 2), 1e-14);
    const double n = std::sqrt(1 + t * t);
    EXPECT_NEAR(std::abs(q.amplitudes(0) - 1.0 / n), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(q.amplitudes(3) - t / n), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(q.amplitudes(1)), 0.0, 1e-15);

    const auto qd = project_single_rail(FockDensity::from_pure(psi));
    EXPECT_NEAR(qd.postselection_probability, q.postselection_probability, 1e-14);
    EXPECT_LT(max_abs(qd.rho - q.amplitudes * q.amplitudes.adjoint()), 1e-14);
}

TEST(single_rail, zero_weight_is_an_error) {
    const int occ[2] = {2, 0};
    EXPECT_THROW(project_single_rail(FockState::basis({"a", "b"}, FockCutoff(3), occ)), PostselectionError);
    EXPECT_THROW(project_single_rail(FockDensity::from_pure(FockState::basis({"a", "b"}, FockCutoff(3), occ))),
                 PostselectionError);
}

TEST(single_rail, embed_then_project_is_idempotent) {
    Rng rng(31);
    ModeLayout layout({"a", "b", "c"}, FockCutoff(3));
    const FockState psi(layout, random_vector(rng, layout.dim()));
    const auto once = project_single_rail(psi);
    const auto again = project_single_rail(embed_single_rail(once, layout.labels(), FockCutoff(3)));
    EXPECT_LT((once.amplitudes - again.amplitudes).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(again.postselection_probability, 1.0, 1e-15);
}

TEST(targets, heralded_w) {
    EXPECT_THROW(target_heralded_w(3, 1.0), ConfigError);
    EXPECT_THROW(target_heralded_w(1, 0.1), ConfigError);
    const auto zero = target_heralded_w(3, 0.0);
    EXPECT_NEAR(std::abs(zero.amplitudes(0) - 1.0), 0.0, 1e-15);

    const cplx eta = std::polar(0.7, 0.4);
    const auto w = target_heralded_w(3, eta);
    EXPECT_NEAR(w.amplitudes.norm(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(w.amplitudes(0)), 1.0 / std::sqrt(heralded_w_norm2(3, eta)), 1e-15);
    EXPECT_NEAR(heralded_w_norm2(3, eta), 1 + 3 * 0.49, 1e-15);
    // herald = 1 -> W on the first three qubits, uniform amplitudes 1/sqrt(3)
    const auto cond = condition_on_qubit(w, 3, 1);
    for (const char *bits : {"001", "010", "100"})
        EXPECT_NEAR(std::abs(cond.amplitudes(basis_index(bits))), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(fidelity(cond, w_state(3)), 1.0, 1e-14);
    // herald = 0 -> vacuum
    const auto vac = condition_on_qubit(w, 3, 0);
    EXPECT_NEAR(std::abs(vac.amplitudes(0)), 1.0, 1e-15);
}

TEST(targets, diluted_ghz) {
    const auto zero = target_diluted_ghz(0.0);
    EXPECT_NEAR(std::abs(zero.amplitudes(0) - 1.0), 0.0, 1e-15);
    const auto one = target_diluted_ghz(1.0);
    for (const char *bits : {"0000", "0011", "1100"})
        EXPECT_NEAR(std::abs(one.amplitudes(basis_index(bits)) - 1.0 / std::sqrt(3.0)), 0.0, 1e-15);
    EXPECT_NEAR(diluted_ghz_norm2(std::polar(0.5, 1.0)), 1.5, 1e-15);
    for (cplx eta : {cplx(0.1, 0.0), std::polar(0.9, -2.0)}) {
        const auto sector = project_excitation_sector(target_diluted_ghz(eta), 2);
        EXPECT_NEAR(fidelity(sector, relabeled_ghz_state()), 1.0, 1e-14);
    }
}

TEST(targets, unit_norm) {
    for (const auto &s : {w_state(4), ghz_state(5), relabeled_ghz_state(), target_heralded_w(4, 0.3),
                          target_diluted_ghz(std::polar(0.4, 1.0)), vacuum_qubits(3)})
        EXPECT_NEAR(s.amplitudes.squaredNorm(), 1.0, 1e-14);
}

TEST(fidelity, basics) {
    EXPECT_NEAR(fidelity(w_state(4), w_state(4)), 1.0, 1e-15);
    EXPECT_NEAR(fidelity(vacuum_qubits(2), QubitState::from_amplitudes(VectorXcd::Unit(4, 3))), 0.0, 1e-15);
    EXPECT_NEAR(fidelity(w_state(4), ghz_state(4)), 0.0, 1e-15);
    EXPECT_NEAR(fidelity(QubitDensity::from_pure(w_state(4)), w_state(4)), 1.0, 1e-15);
    EXPECT_THROW(fidelity(w_state(3), w_state(4)), DimensionError);
}

TEST(hamiltonian, xy_two_sites) {
    const auto h = build_xy_hamiltonian(2, 1.0, 0.0);
    ASSERT_EQ(h.terms.size(), 4u);
    EXPECT_EQ(h.terms[0], (PauliTerm{1.0, "XX"}));
    EXPECT_EQ(h.terms[1], (PauliTerm{1.0, "YY"}));
    EXPECT_EQ(h.terms[2].coefficient, 0.0);
    EXPECT_THROW(build_xy_hamiltonian(1, 1.0, 0.0), ConfigError);
}

TEST(hamiltonian, periodic_adds_wraparound_bond) {
    EXPECT_EQ(build_xy_hamiltonian(4, 1.0, 1.0, Boundary::open).terms.size(), 3u * 2 + 4);
    EXPECT_EQ(build_xy_hamiltonian(4, 1.0, 1.0, Boundary::periodic).terms.size(), 4u * 2 + 4);
    EXPECT_EQ(build_heisenberg_hamiltonian(4, 1.0, 1.0, Boundary::periodic).terms.size(), 4u * 3 + 4);
}

TEST(hamiltonian, hermitian_and_conserves_excitations) {
    for (int m = 2; m <= 5; ++m) {
        const MatrixXcd h = build_xy_hamiltonian(m, 0.7, -1.3, Boundary::periodic).matrix();
        EXPECT_LT(max_abs(h - h.adjoint()), 1e-15);
        MatrixXcd zsum = MatrixXcd::Zero(h.rows(), h.cols());
        for (int q = 0; q < m; ++q) {
            std::string s(static_cast<std::size_t>(m), 'I');
            s[static_cast<std::size_t>(q)] = 'Z';
            zsum += pauli_matrix(s);
        }
        EXPECT_LT(max_abs(h * zsum - zsum * h), 1e-13) << m;
    }
}

TEST(hamiltonian, pauli_matrices_match_kronecker_products) {
    Eigen::Matrix2cd x, y, z, id;
    x << 0, 1, 1, 0;
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    id.setIdentity();
    auto single = [&](char c) -> Eigen::Matrix2cd { return c == 'X' ? x : c == 'Y' ? y : c == 'Z' ? z : id; };
    for (const std::string s : {"XYZ", "YYI", "ZIX", "IYX"}) {
        MatrixXcd k = MatrixXcd::Ones(1, 1);
        for (char c : s) {
            const Eigen::Matrix2cd p = single(c);
            MatrixXcd next(k.rows() * 2, k.cols() * 2);
            for (Eigen::Index i = 0; i < k.rows(); ++i)
                for (Eigen::Index j = 0; j < k.cols(); ++j) next.block(i * 2, j * 2, 2, 2) = k(i, j) * p;
            k = next;
        }
        EXPECT_LT(max_abs(pauli_matrix(s) - k), 1e-15) << s;
    }
}

TEST(hamiltonian, w_is_ground_state_in_documented_regime) {
    const auto h = build_xy_hamiltonian(4, kXyWRegimeJ, kXyWRegimeB, kXyWRegimeBoundary);
    const auto g = exact_ground_state(h);
    EXPECT_GE(fidelity(g.state, w_state(4)), 0.99);
    EXPECT_NEAR(g.gap, 4.0 - 2.0 * std::sqrt(2.0), 1e-12);
    // single-magnon energy: (B/4)(4 - 2) + 2J * 2 with J = -1
    EXPECT_NEAR(g.energy, kXyWRegimeB / 2.0 + 4.0 * kXyWRegimeJ, 1e-12);
}

TEST(hamiltonian, expectation_on_vacuum) {
    const auto h = build_xy_hamiltonian(4, -1.0, 2.0);
    EXPECT_NEAR(energy(QubitDensity::from_pure(vacuum_qubits(4)), h), 4 * 2.0 / 4, 1e-15);
    const auto w = QubitDensity::from_pure(w_state(4));
    const MatrixXcd hm = h.matrix();
    EXPECT_NEAR(energy(w, h), (w.rho * hm).trace().real(), 1e-13);
}

TEST(hamiltonian, text_format_round_trip) {
    const auto h = build_heisenberg_hamiltonian(3, -0.5, 1.25, Boundary::periodic);
    const auto back = parse_hamiltonian(format_hamiltonian(h));
    EXPECT_EQ(back, h);
    const auto preset = parse_hamiltonian("preset = xy\nsites = 4\nJ = -1\nB = 2\nboundary = periodic\n");
    EXPECT_EQ(preset, build_xy_hamiltonian(4, -1.0, 2.0, Boundary::periodic));
    EXPECT_THROW(parse_hamiltonian("qubits = 2\nterm = 1 XQ\n"), ConfigError);
    EXPECT_THROW(parse_hamiltonian("qubits = 2\nterm = 1 XXX\n"), ConfigError);
    EXPECT_THROW(parse_hamiltonian("preset = ising\nsites = 2\nJ = 1\nB = 0\n"), ConfigError);
}

TEST(conditioning, density_and_sector) {
    const auto w = QubitDensity::from_pure(target_heralded_w(4, 0.3));
    const auto cond = condition_on_qubit(w, 4, 1);
    EXPECT_EQ(cond.qubits, 4);
    EXPECT_NEAR(fidelity(cond, w_state(4)), 1.0, 1e-14);
    EXPECT_NEAR(cond.postselection_probability, 4 * 0.09 / (1 + 4 * 0.09), 1e-14);
    const auto s = project_excitation_sector(QubitDensity::from_pure(target_diluted_ghz(0.2)), 2);
    EXPECT_NEAR(fidelity(s, relabeled_ghz_state()), 1.0, 1e-14);
    EXPECT_THROW(project_excitation_sector(QubitDensity::from_pure(vacuum_qubits(2)), 1), PostselectionError);
}
