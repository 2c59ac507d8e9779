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

#include "pdcloop/mps.hpp"

#include <chrono>
#include <cmath>

#include "gtest/gtest.h"
#include "pdcloop/encoding.hpp"
#include "test_util.hpp"

using namespace pdcloop;
using namespace pdcloop::testing;

namespace {

/// Kronecker product of single-mode operators, first mode most significant.
MatrixXcd kron_all(const std::vector<MatrixXcd> &ops) {
    MatrixXcd k = MatrixXcd::Ones(1, 1);
    for (const auto &op : ops) {
        MatrixXcd next(k.rows() * op.rows(), k.cols() * op.cols());
        for (Eigen::Index i = 0; i < k.rows(); ++i)
            for (Eigen::Index j = 0; j < k.cols(); ++j) next.block(i * op.rows(), j * op.cols(), op.rows(), op.cols()) = k(i, j) * op;
        k = next;
    }
    return k;
}

/// Max number of nonzero singular values over prefix/suffix cuts.
int max_schmidt_rank(const VectorXcd &amps, int d, int m) {
    int worst = 0;
    for (int cut = 1; cut < m; ++cut) {
        const Eigen::Index rows = static_cast<Eigen::Index>(std::pow(d, cut));
        const Eigen::Index cols = amps.size() / rows;
        MatrixXcd mat(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = amps(i * cols + j);
        Eigen::JacobiSVD<MatrixXcd> svd(mat);
        const auto &s = svd.singularValues();
        int rank = 0;
        for (Eigen::Index k = 0; k < s.size(); ++k)
            if (s(k) > 1e-12 * s(0)) ++rank;
        worst = std::max(worst, rank);
    }
    return worst;
}

}  // namespace

TEST(extract_mps, vacuum_program) {
    LoopProgram p;
    p.cycles.resize(3);
    const auto mps = extract_mps(p);
    ASSERT_EQ(mps.modes(), 3);
    for (const auto &site : mps.sites) {
        EXPECT_NEAR(std::abs(site.slices[0](0, 0) - 1.0), 0.0, 1e-15);
        for (int s = 1; s < mps.d; ++s) EXPECT_NEAR(std::abs(site.slices[static_cast<std::size_t>(s)](0, 0)), 0.0, 1e-15);
    }
    const auto psi = contract_to_dense(mps);
    EXPECT_NEAR(std::abs(psi.amplitudes()(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(psi.amplitudes().tail(psi.amplitudes().size() - 1).norm(), 0.0, 1e-15);
}

TEST(extract_mps, contraction_matches_dense_backend) {
    Rng rng(41);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int m = 1 + k % 5;
        const auto p = random_program(rng, m, 3, 1 + k % 3);
        const auto mps = extract_mps(p);
        const auto dense = run_pure(p);
        const auto c = contract_to_dense(mps);
        worst = std::max(worst, (c.amplitudes() - dense.amplitudes()).cwiseAbs().maxCoeff());
        EXPECT_NEAR(mps_norm2(mps), dense.norm2(), 1e-10);
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(extract_mps, interior_bonds_equal_bond_cutoff) {
    Rng rng(42);
    auto p = random_program(rng, 4, 4, 3);
    const auto mps = extract_mps(p);
    for (auto b : mps.bond_dimensions()) EXPECT_EQ(b, 3);
}

TEST(extract_mps, rejects_trace_out_and_loss) {
    LoopProgram p;
    p.cycles.resize(2);
    p.termination = Termination::trace_out;
    EXPECT_THROW(extract_mps(p), ConfigError);
    p.termination = Termination::project_vacuum;
    p.loss_per_cycle = 0.1;
    EXPECT_THROW(extract_mps(p), ConfigError);
}

TEST(extract_mps, schmidt_rank_bounded_by_bond_cutoff) {
    Rng rng(43);
    for (int k = 0; k < 20; ++k) {
        const auto p = random_program(rng, 5, 3, 2, 0.6);
        EXPECT_LE(max_schmidt_rank(run_pure(p).amplitudes(), 3, 5), 2);
    }
}

TEST(mps_expectation, identity_and_number) {
    Rng rng(44);
    const auto mps = extract_mps(random_program(rng, 4, 3, 3));
    EXPECT_NEAR(std::abs(mps_expectation(mps, {}) - 1.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(mps_expectation(mps, {{2, MatrixXcd::Identity(3, 3)}}) - 1.0), 0.0, 1e-13);
    LoopProgram vac;
    vac.cycles.resize(3);
    EXPECT_NEAR(std::abs(mps_expectation(extract_mps(vac), {{1, number_operator(4)}})), 0.0, 1e-15);
}

TEST(mps_expectation, two_local_pauli_matches_dense) {
    Rng rng(45);
    const int d = 3, m = 4;
    for (int k = 0; k < 10; ++k) {
        const auto p = random_program(rng, m, d, 3);
        const auto mps = extract_mps(p);
        const auto psi = run_pure(p);
        const char letters[] = "XYZ";
        const int i = k % m, j = (k + 1 + k / m) % m;
        if (i == j) continue;
        const char a = letters[k % 3], b = letters[(k + 1) % 3];
        std::vector<MatrixXcd> ops(m, MatrixXcd::Identity(d, d));
        ops[static_cast<std::size_t>(i)] = single_rail_operator(a, d);
        ops[static_cast<std::size_t>(j)] = single_rail_operator(b, d);
        const VectorXcd &v = psi.amplitudes();
        const cplx dense = v.dot(kron_all(ops) * v) / v.squaredNorm();
        const cplx via_mps = mps_expectation(mps, {{i, single_rail_operator(a, d)}, {j, single_rail_operator(b, d)}});
        EXPECT_NEAR(std::abs(dense - via_mps), 0.0, 1e-10);
    }
}

TEST(mps_expectation, errors) {
    LoopProgram p;
    p.cycles.resize(2);
    const auto mps = extract_mps(p);
    EXPECT_THROW(mps_expectation(mps, {{0, MatrixXcd::Identity(3, 3)}}), DimensionError);
    EXPECT_THROW(mps_expectation(mps, {{2, MatrixXcd::Identity(4, 4)}}), DimensionError);
    EXPECT_THROW(mps_expectation(mps, {{0, number_operator(4)}, {0, number_operator(4)}}), DimensionError);
}

TEST(mps_fidelity, self_orthogonal_and_dense) {
    Rng rng(46);
    const auto p = random_program(rng, 3, 3, 3);
    const auto mps = extract_mps(p);
    const auto psi = contract_to_dense(mps);
    EXPECT_NEAR(mps_fidelity(mps, psi), 1.0, 1e-12);

    LoopProgram vac;
    vac.cutoff = 3;
    vac.bond_cutoff = 3;
    vac.cycles.resize(3);
    const int one[3] = {1, 0, 0};
    EXPECT_NEAR(mps_fidelity(extract_mps(vac), FockState::basis({"b1", "b2", "b3"}, FockCutoff(3), one)), 0.0, 1e-12);

    const FockState target(psi.layout(), random_vector(rng, psi.amplitudes().size()));
    const double dense = std::norm(target.amplitudes().dot(psi.amplitudes())) / (target.norm2() * psi.norm2());
    EXPECT_NEAR(mps_fidelity(mps, target), dense, 1e-10);
    EXPECT_THROW(mps_fidelity(mps, FockState::vacuum({"a", "b"}, FockCutoff(3))), DimensionError);
}

TEST(left_canonicalize, preserves_state_and_is_isometric) {
    Rng rng(47);
    const auto mps = extract_mps(random_program(rng, 5, 3, 3));
    const auto can = left_canonicalize(mps);
    EXPECT_LT((contract_to_dense(can).amplitudes() - contract_to_dense(mps).amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
    for (const auto &site : can.sites) {
        MatrixXcd sum = MatrixXcd::Zero(site.right(), site.right());
        for (const auto &a : site.slices) sum += a.adjoint() * a;
        EXPECT_LT((sum - MatrixXcd::Identity(site.right(), site.right())).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(mps_format, round_trip) {
    Rng rng(48);
    const auto mps = extract_mps(random_program(rng, 3, 3, 2));
    const std::string text = format_mps(mps);
    const auto back = parse_mps(text);
    EXPECT_EQ(format_mps(back), text);
    EXPECT_EQ((contract_to_dense(back).amplitudes() - contract_to_dense(mps).amplitudes()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(parse_mps("physical = 2\nsites = 1\nleft = 1 0\nright = 1 0\nsite.1.shape = 2 1 1\nsite.1.data = 1 0\n"),
                 ConfigError);
}

TEST(mps_expectation, cost_linear_in_length) {
    // d = 2, D = 4 (bond cutoff cannot exceed d, so the bonds are padded)
    auto build = [](int m) {
        Rng rng(49);
        MpsState mps;
        mps.d = 2;
        for (int i = 0; i < m; ++i) {
            MpsSite s;
            for (int k = 0; k < 2; ++k) {
                MatrixXcd a(4, 4);
                for (int x = 0; x < 16; ++x) a(x / 4, x % 4) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
                s.slices.push_back(a * 0.4);
            }
            mps.sites.push_back(s);
        }
        mps.left = VectorXcd::Unit(4, 0);
        mps.right = VectorXcd::Unit(4, 0);
        return mps;
    };
    std::vector<double> times;
    for (int m : {8, 16, 32, 64}) {
        const auto mps = build(m);
        const auto t0 = std::chrono::steady_clock::now();
        for (int rep = 0; rep < 200; ++rep) (void)mps_expectation(mps, {{m / 2, single_rail_operator('Z', 2)}});
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    // log-log slope over 8..64
    const double slope = std::log(times[3] / times[0]) / std::log(8.0);
    EXPECT_GT(slope, 0.6);
    EXPECT_LT(slope, 1.4);
}
