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

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdcloop/fockcore.hpp"
#include "pdcloop/kvtext.hpp"
#include "pdcloop/loopcircuit.hpp"

namespace pdcloop {

/// One site: slices[s] is the (left x right) matrix A[s, :, :].
struct MpsSite {
    std::vector<MatrixXcd> slices;

    int physical() const { return static_cast<int>(slices.size()); }
    Eigen::Index left() const { return slices.empty() ? 0 : slices.front().rows(); }
    Eigen::Index right() const { return slices.empty() ? 0 : slices.front().cols(); }
};

/// psi(s_1..s_m) = l^T A_1[s_1] ... A_m[s_m] r.
struct MpsState {
    int d = 2;
    std::vector<MpsSite> sites;
    VectorXcd left;
    VectorXcd right;

    int modes() const { return static_cast<int>(sites.size()); }

    std::vector<Eigen::Index> bond_dimensions() const {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i + 1 < sites.size(); ++i) out.push_back(sites[i].right());
        return out;
    }

    void validate() const {
        if (sites.empty()) throw DimensionError("MPS has no sites");
        if (left.size() != sites.front().left()) throw DimensionError("left boundary does not match first site");
        if (right.size() != sites.back().right()) throw DimensionError("right boundary does not match last site");
        for (std::size_t i = 0; i < sites.size(); ++i) {
            const auto &s = sites[i];
            if (s.physical() != d) throw DimensionError("site " + std::to_string(i) + " physical dimension differs from d");
            for (const auto &m : s.slices)
                if (m.rows() != s.left() || m.cols() != s.right())
                    throw DimensionError("site " + std::to_string(i) + " has ragged slices");
            if (i + 1 < sites.size() && s.right() != sites[i + 1].left())
                throw DimensionError("bond " + std::to_string(i) + " dimensions disagree");
        }
    }
};

/// Site tensors A_i[s, a, b] = <b|_c <s|_emit G_i |a>_c |0>_fresh, with G_i
/// the cycle's gate product and bonds restricted to the bond cutoff D.
inline MpsState extract_mps(const LoopProgram &program) {
    program.validate();
    if (program.loss_per_cycle != 0.0) throw ConfigError("extract_mps requires loss_per_cycle = 0");
    if (program.termination == Termination::trace_out)
        throw ConfigError("termination trace_out has no pure MPS representation");
    check_leakage(program, truncation_leakage(program));
    const int d = program.cutoff, D = program.bond_cutoff;
    MpsState mps;
    mps.d = d;
    for (const auto &cycle : program.cycles) {
        const MatrixXcd g = cycle_matrix(cycle, program.fock_cutoff(), program.order, program.r_max);
        MpsSite site;
        for (int s = 0; s < d; ++s) {
            MatrixXcd a(D, D);
            for (int in = 0; in < D; ++in)
                for (int out = 0; out < D; ++out) a(in, out) = g(out * d + s, in * d);
            site.slices.push_back(std::move(a));
        }
        mps.sites.push_back(std::move(site));
    }
    mps.left = VectorXcd::Zero(D);
    mps.left(0) = 1.0;
    mps.right = VectorXcd::Zero(D);
    mps.right(0) = 1.0;
    return mps;
}

/// Dense amplitudes over modes b1..bm (row-major, b1 most significant).
inline FockState contract_to_dense(const MpsState &mps) {
    mps.validate();
    const int d = mps.d;
    MatrixXcd prefix = mps.left.transpose();
    for (const auto &site : mps.sites) {
        MatrixXcd next(prefix.rows() * d, site.right());
        for (Eigen::Index p = 0; p < prefix.rows(); ++p)
            for (int s = 0; s < d; ++s) next.row(p * d + s) = prefix.row(p) * site.slices[static_cast<std::size_t>(s)];
        prefix = std::move(next);
    }
    std::vector<std::string> labels;
    for (int i = 0; i < mps.modes(); ++i) labels.push_back(emitted_label(i));
    return FockState(ModeLayout(std::move(labels), FockCutoff(d)), prefix * mps.right);
}

namespace detail {

/// L -> sum_{s,s'} O(s,s') A[s]^H L A[s'].
inline MatrixXcd transfer(const MatrixXcd &env, const MpsSite &site, const MatrixXcd *op) {
    const int d = site.physical();
    MatrixXcd out = MatrixXcd::Zero(site.right(), site.right());
    for (int s = 0; s < d; ++s) {
        const MatrixXcd bra = site.slices[static_cast<std::size_t>(s)].adjoint() * env;
        for (int t = 0; t < d; ++t) {
            const cplx w = op ? (*op)(s, t) : (s == t ? cplx{1.0, 0.0} : cplx{0.0, 0.0});
            if (w == cplx{0.0, 0.0}) continue;
            out += w * bra * site.slices[static_cast<std::size_t>(t)];
        }
    }
    return out;
}

}  // namespace detail

/// <Psi|Psi>.
inline double mps_norm2(const MpsState &mps) {
    mps.validate();
    MatrixXcd env = mps.left.conjugate() * mps.left.transpose();
    for (const auto &site : mps.sites) env = detail::transfer(env, site, nullptr);
    return (mps.right.adjoint() * env * mps.right)(0, 0).real();
}

/// <Psi| (x)_i O_i |Psi> / <Psi|Psi> by left-to-right transfer matrices.
inline cplx mps_expectation(const MpsState &mps, const std::vector<std::pair<int, MatrixXcd>> &observables) {
    mps.validate();
    std::vector<const MatrixXcd *> ops(mps.sites.size(), nullptr);
    for (const auto &[mode, op] : observables) {
        if (mode < 0 || mode >= mps.modes()) throw DimensionError("observable mode " + std::to_string(mode) + " out of range");
        if (ops[static_cast<std::size_t>(mode)]) throw DimensionError("observable modes must be distinct");
        if (op.rows() != mps.d || op.cols() != mps.d) throw DimensionError("observable dimension differs from d");
        ops[static_cast<std::size_t>(mode)] = &op;
    }
    MatrixXcd env = mps.left.conjugate() * mps.left.transpose();
    MatrixXcd norm_env = env;
    for (std::size_t i = 0; i < mps.sites.size(); ++i) {
        env = detail::transfer(env, mps.sites[i], ops[i]);
        norm_env = detail::transfer(norm_env, mps.sites[i], nullptr);
    }
    const cplx num = (mps.right.adjoint() * env * mps.right)(0, 0);
    const double den = (mps.right.adjoint() * norm_env * mps.right)(0, 0).real();
    if (!(den > 0.0)) throw PostselectionError("MPS has zero norm");
    return num / den;
}

/// Pauli letter acting on the single-rail subspace {|0>, |1>} of a d-level
/// mode; zero on higher occupations ('I' becomes the subspace projector).
inline MatrixXcd single_rail_operator(char pauli, int d) {
    MatrixXcd op = MatrixXcd::Zero(d, d);
    const cplx i{0.0, 1.0};
    switch (pauli) {
        case 'I': op(0, 0) = 1.0; op(1, 1) = 1.0; break;
        case 'X': op(0, 1) = 1.0; op(1, 0) = 1.0; break;
        case 'Y': op(0, 1) = -i; op(1, 0) = i; break;
        case 'Z': op(0, 0) = 1.0; op(1, 1) = -1.0; break;
        default: throw ConfigError(std::string("invalid Pauli letter '") + pauli + "'");
    }
    return op;
}

/// |<target|Psi>|^2 / (<Psi|Psi> <target|target>).
inline double mps_fidelity(const MpsState &mps, const FockState &target) {
    if (target.layout().modes() != mps.modes() || target.layout().d() != mps.d)
        throw DimensionError("target mode count or cutoff differs from the MPS");
    const FockState psi = contract_to_dense(mps);
    const double den = psi.norm2() * target.norm2();
    if (!(den > 0.0)) throw PostselectionError("fidelity with a zero state");
    return std::clamp(std::norm(target.amplitudes().dot(psi.amplitudes())) / den, 0.0, 1.0);
}

/// QR sweep making every site left-canonical (sum_s A[s]^H A[s] = I). The
/// left boundary is absorbed into the first site; bonds may shrink to
/// min(d * left, right). The represented state is unchanged.
inline MpsState left_canonicalize(MpsState mps) {
    mps.validate();
    const int d = mps.d;
    for (auto &s : mps.sites.front().slices) s = mps.left.transpose() * s;
    mps.left = VectorXcd::Ones(1);
    for (std::size_t i = 0; i < mps.sites.size(); ++i) {
        auto &site = mps.sites[i];
        const Eigen::Index l = site.left(), r = site.right();
        MatrixXcd stacked(d * l, r);
        for (int s = 0; s < d; ++s) stacked.middleRows(s * l, l) = site.slices[static_cast<std::size_t>(s)];
        Eigen::HouseholderQR<MatrixXcd> qr(stacked);
        const Eigen::Index k = std::min(d * l, r);
        const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(d * l, k);
        const MatrixXcd rfac = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        for (int s = 0; s < d; ++s) site.slices[static_cast<std::size_t>(s)] = q.middleRows(s * l, l);
        if (i + 1 < mps.sites.size()) {
            for (auto &s : mps.sites[i + 1].slices) s = rfac * s;
        } else {
            mps.right = rfac * mps.right;
        }
    }
    return mps;
}

// ---------------------------------------------------------------------------
// Text format.
//
//   physical = d
//   sites = m
//   left = re im re im ...
//   right = re im ...
//   site.<i>.shape = d left right      (i from 1)
//   site.<i>.data = re im ...          (s slowest, then left, then right)

inline constexpr const char *kMpsHeader = "pdcloop mps v1";

namespace detail {

inline std::string format_complex_list(const cplx *data, Eigen::Index n) {
    std::string out;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k) out += ' ';
        out += kv::format_double(data[k].real()) + ' ' + kv::format_double(data[k].imag());
    }
    return out;
}

inline std::vector<cplx> parse_complex_list(const std::string &key, const std::string &value) {
    const auto v = kv::Document::to_doubles(key, value);
    if (v.size() % 2) throw ConfigError("key '" + key + "': expected re/im pairs");
    std::vector<cplx> out;
    for (std::size_t k = 0; k < v.size(); k += 2) out.emplace_back(v[k], v[k + 1]);
    return out;
}

}  // namespace detail

inline std::string format_mps(const MpsState &mps) {
    mps.validate();
    kv::Writer w(kMpsHeader);
    w.put("physical", mps.d);
    w.put("sites", mps.modes());
    w.put("left", detail::format_complex_list(mps.left.data(), mps.left.size()));
    w.put("right", detail::format_complex_list(mps.right.data(), mps.right.size()));
    for (int i = 0; i < mps.modes(); ++i) {
        const auto &site = mps.sites[static_cast<std::size_t>(i)];
        const std::string key = "site." + std::to_string(i + 1);
        w.put(key + ".shape", std::to_string(mps.d) + " " + std::to_string(site.left()) + " " + std::to_string(site.right()));
        std::vector<cplx> flat;
        for (const auto &m : site.slices)
            for (Eigen::Index a = 0; a < m.rows(); ++a)
                for (Eigen::Index b = 0; b < m.cols(); ++b) flat.push_back(m(a, b));
        w.put(key + ".data", detail::format_complex_list(flat.data(), static_cast<Eigen::Index>(flat.size())));
    }
    return w.str();
}

inline MpsState parse_mps(std::string_view text) {
    const auto doc = kv::Document::parse(text);
    doc.require_known({"physical", "sites", "left", "right", "site."});
    MpsState mps;
    mps.d = static_cast<int>(doc.get_long("physical"));
    const long m = doc.get_long("sites");
    if (mps.d < 2 || m < 1) throw ConfigError("MPS needs physical >= 2 and sites >= 1");
    auto to_vec = [](const std::vector<cplx> &v) {
        VectorXcd out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
        return out;
    };
    mps.left = to_vec(detail::parse_complex_list("left", doc.get("left")));
    mps.right = to_vec(detail::parse_complex_list("right", doc.get("right")));
    for (long i = 1; i <= m; ++i) {
        const std::string key = "site." + std::to_string(i);
        const auto shape = kv::split_ws(doc.get(key + ".shape"));
        if (shape.size() != 3) throw ConfigError("key '" + key + ".shape': expected 'd left right'");
        const long pd = kv::Document::to_long(key + ".shape", shape[0]);
        const long l = kv::Document::to_long(key + ".shape", shape[1]);
        const long r = kv::Document::to_long(key + ".shape", shape[2]);
        if (pd != mps.d || l < 1 || r < 1) throw ConfigError("key '" + key + ".shape': inconsistent shape");
        const auto data = detail::parse_complex_list(key + ".data", doc.get(key + ".data"));
        if (static_cast<long>(data.size()) != pd * l * r)
            throw ConfigError("key '" + key + ".data': expected " + std::to_string(pd * l * r) + " entries");
        MpsSite site;
        std::size_t k = 0;
        for (long s = 0; s < pd; ++s) {
            MatrixXcd a(l, r);
            for (long x = 0; x < l; ++x)
                for (long y = 0; y < r; ++y) a(x, y) = data[k++];
            site.slices.push_back(std::move(a));
        }
        mps.sites.push_back(std::move(site));
    }
    mps.validate();
    return mps;
}

}  // namespace pdcloop
