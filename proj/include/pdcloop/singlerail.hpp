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

// Single-rail output of a loop program without the full Fock space.
//
// An emitted mode is never acted on after its cycle, so projecting it onto
// occupations {0, 1} right away commutes with everything that follows. The
// working space is (emitted qubits) x (cycling mode, dimension D). When loss
// also hits the emitted mode, that mode is kept at full cutoff until its loss
// has been applied.
//
// Agrees with project_single_rail(run_pure(...)) and
// project_single_rail(run_density(...)); see the tests.

#include <vector>

#include <Eigen/Dense>

#include "pdcloop/encoding.hpp"
#include "pdcloop/fockcore.hpp"
#include "pdcloop/loopcircuit.hpp"

namespace pdcloop {

namespace detail {

/// k_s(b, a) = <b, s| G |a, 0> for b, a < D.
inline std::vector<MatrixXcd> emission_slices(const MatrixXcd &g, int d, int D, int emitted_levels) {
    std::vector<MatrixXcd> out;
    for (int s = 0; s < emitted_levels; ++s) {
        MatrixXcd k(D, D);
        for (int b = 0; b < D; ++b)
            for (int a = 0; a < D; ++a) k(b, a) = g(b * d + s, a * d);
        out.push_back(std::move(k));
    }
    return out;
}

/// Kraus operators of the pure-loss channel truncated to `dim` levels.
inline std::vector<MatrixXcd> loss_kraus(double transmissivity, int dim) {
    const Eigen::MatrixXd c = loss_coefficients(transmissivity, dim);
    std::vector<MatrixXcd> out;
    for (int k = 0; k < dim; ++k) {
        MatrixXcd op = MatrixXcd::Zero(dim, dim);
        for (int n = 0; n + k < dim; ++n) op(n, n + k) = c(n, k);
        out.push_back(std::move(op));
    }
    return out;
}

/// Applies sum_k (I_outer (x) K_k (x) I_inner) rho (...)^H.
inline MatrixXcd apply_local_channel(const MatrixXcd &rho, const std::vector<MatrixXcd> &kraus, Eigen::Index outer,
                                     Eigen::Index inner) {
    const Eigen::Index dim = kraus.front().rows();
    const Eigen::Index n = outer * dim * inner;
    MatrixXcd out = MatrixXcd::Zero(n, n);
    MatrixXcd tmp(n, n);
    for (const auto &k : kraus) {
        if (k.isZero(0.0)) continue;
        // tmp = (I (x) K (x) I) rho
        tmp.setZero();
        for (Eigen::Index o = 0; o < outer; ++o)
            for (Eigen::Index x = 0; x < dim; ++x)
                for (Eigen::Index y = 0; y < dim; ++y) {
                    const cplx w = k(x, y);
                    if (w == cplx{0.0, 0.0}) continue;
                    for (Eigen::Index i = 0; i < inner; ++i)
                        tmp.row((o * dim + x) * inner + i) += w * rho.row((o * dim + y) * inner + i);
                }
        // out += tmp (I (x) K (x) I)^H
        for (Eigen::Index o = 0; o < outer; ++o)
            for (Eigen::Index x = 0; x < dim; ++x)
                for (Eigen::Index y = 0; y < dim; ++y) {
                    const cplx w = std::conj(k(x, y));
                    if (w == cplx{0.0, 0.0}) continue;
                    for (Eigen::Index i = 0; i < inner; ++i)
                        out.col((o * dim + x) * inner + i) += w * tmp.col((o * dim + y) * inner + i);
                }
    }
    return out;
}

}  // namespace detail

/// Lossless single-rail output as a pure qubit state. Index layout of the
/// working vector: (qubits, cycling).
inline QubitState single_rail_pure(const LoopProgram &program) {
    program.validate();
    if (program.loss_per_cycle != 0.0) throw ConfigError("single_rail_pure requires loss_per_cycle = 0");
    if (program.termination == Termination::trace_out)
        throw ConfigError("termination trace_out needs the density variant");
    check_leakage(program, truncation_leakage(program));
    const int d = program.cutoff, D = program.bond_cutoff;
    VectorXcd psi = VectorXcd::Zero(D);
    psi(0) = 1.0;
    for (const auto &cycle : program.cycles) {
        const auto k = detail::emission_slices(cycle_matrix(cycle, program.fock_cutoff(), program.order, program.r_max),
                                               d, D, 2);
        const Eigen::Index blocks = psi.size() / D;
        VectorXcd next(blocks * 2 * D);
        for (Eigen::Index q = 0; q < blocks; ++q)
            for (int s = 0; s < 2; ++s) next.segment((q * 2 + s) * D, D) = k[static_cast<std::size_t>(s)] * psi.segment(q * D, D);
        psi = std::move(next);
    }
    VectorXcd amps(psi.size() / D);
    for (Eigen::Index q = 0; q < amps.size(); ++q) amps(q) = psi(q * D);
    const double kept = amps.squaredNorm();
    if (!(kept > 0.0)) throw PostselectionError("single-rail post-selection kept zero weight");
    QubitState out = QubitState::from_amplitudes(std::move(amps));
    out.postselection_probability = kept;
    return out;
}

/// Single-rail output with loss and either termination, as a qubit density
/// matrix. Working layout: (qubits, [newest emitted mode,] cycling).
inline QubitDensity single_rail_density(const LoopProgram &program) {
    program.validate();
    check_leakage(program, truncation_leakage(program));
    const int d = program.cutoff, D = program.bond_cutoff;
    const double transmissivity = 1.0 - program.loss_per_cycle;
    const bool lossy = transmissivity < 1.0;
    const bool emitted_loss = lossy && program.loss_on_emitted;
    const int levels = emitted_loss ? d : 2;
    const auto cycling_kraus = detail::loss_kraus(transmissivity, D);
    const auto emitted_kraus = detail::loss_kraus(transmissivity, d);

    MatrixXcd rho = MatrixXcd::Zero(D, D);
    rho(0, 0) = 1.0;
    for (const auto &cycle : program.cycles) {
        const auto k = detail::emission_slices(cycle_matrix(cycle, program.fock_cutoff(), program.order, program.r_max),
                                               d, D, levels);
        const Eigen::Index blocks = rho.rows() / D;
        // M maps (q, a) -> (q, s, b).
        const Eigen::Index n_out = blocks * levels * D;
        MatrixXcd left = MatrixXcd::Zero(n_out, rho.cols());
        for (Eigen::Index q = 0; q < blocks; ++q)
            for (int s = 0; s < levels; ++s)
                left.middleRows((q * levels + s) * D, D) = k[static_cast<std::size_t>(s)] * rho.middleRows(q * D, D);
        MatrixXcd next = MatrixXcd::Zero(n_out, n_out);
        for (Eigen::Index q = 0; q < blocks; ++q)
            for (int s = 0; s < levels; ++s)
                next.middleCols((q * levels + s) * D, D) = left.middleCols(q * D, D) * k[static_cast<std::size_t>(s)].adjoint();
        if (lossy) next = detail::apply_local_channel(next, cycling_kraus, blocks * levels, 1);
        if (emitted_loss) {
            next = detail::apply_local_channel(next, emitted_kraus, blocks, D);
            // keep s in {0, 1}
            std::vector<Eigen::Index> keep;
            for (Eigen::Index q = 0; q < blocks; ++q)
                for (int s = 0; s < 2; ++s)
                    for (int b = 0; b < D; ++b) keep.push_back((q * levels + s) * D + b);
            const auto nk = static_cast<Eigen::Index>(keep.size());
            MatrixXcd reduced(nk, nk);
            for (Eigen::Index j = 0; j < nk; ++j)
                for (Eigen::Index i = 0; i < nk; ++i)
                    reduced(i, j) = next(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
            next = std::move(reduced);
        }
        rho = std::move(next);
    }
    const Eigen::Index nq = rho.rows() / D;
    MatrixXcd out = MatrixXcd::Zero(nq, nq);
    if (program.termination == Termination::project_vacuum) {
        for (Eigen::Index j = 0; j < nq; ++j)
            for (Eigen::Index i = 0; i < nq; ++i) out(i, j) = rho(i * D, j * D);
    } else {
        for (Eigen::Index j = 0; j < nq; ++j)
            for (Eigen::Index i = 0; i < nq; ++i)
                for (int c = 0; c < D; ++c) out(i, j) += rho(i * D + c, j * D + c);
    }
    const double kept = out.trace().real();
    if (!(kept > 0.0)) throw PostselectionError("single-rail post-selection kept zero weight");
    return {program.modes(), out / kept, kept};
}

/// Pure path when the program allows it, density path otherwise.
inline QubitDensity single_rail_state(const LoopProgram &program) {
    if (program.loss_per_cycle == 0.0 && program.termination == Termination::project_vacuum)
        return QubitDensity::from_pure(single_rail_pure(program));
    return single_rail_density(program);
}

}  // namespace pdcloop
