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

// Truncated bosonic Fock-space primitives.
//
// Every mode is truncated to occupations 0..d-1. Gates are the exact
// restriction of the infinite-dimensional unitary to the retained space:
// amplitudes that would land beyond the cutoff are dropped, never
// renormalized, and the lost weight shows up as a norm deficit.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdcloop/errors.hpp"

namespace pdcloop {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

inline constexpr double kDefaultRMax = 2.0;
inline constexpr double kDefaultLeakageThreshold = 1e-8;

/// Per-mode Fock dimension (occupations 0..d-1).
class FockCutoff {
  public:
    explicit FockCutoff(int d) : d_(d) {
        if (d < 2) throw ConfigError("Fock cutoff must be >= 2, got " + std::to_string(d));
    }
    int d() const { return d_; }
    friend bool operator==(FockCutoff, FockCutoff) = default;

  private:
    int d_;
};

/// PDC parameter eta = r e^{i phase}: r is the squeezing strength, phase the
/// pump phase. Stored in polar form so parameter vectors round-trip exactly.
struct SqueezeParam {
    double r = 0.0;
    double phase = 0.0;

    static SqueezeParam polar(double r, double phase) { return {r, phase}; }
    static SqueezeParam from_complex(cplx eta) { return {std::abs(eta), std::abs(eta) == 0.0 ? 0.0 : std::arg(eta)}; }
    cplx eta() const { return std::polar(r, phase); }

    void validate(double r_max = kDefaultRMax) const {
        if (!(r >= 0.0)) throw ConfigError("squeezing magnitude must be >= 0, got " + std::to_string(r));
        if (!(r <= r_max))
            throw ConfigError("squeezing |eta| = " + std::to_string(r) + " exceeds r_max = " + std::to_string(r_max));
        if (!std::isfinite(phase)) throw ConfigError("squeezing phase must be finite");
    }
};

/// ZYZ Euler angles of an SU(2) matrix: V = Rz(phi) Ry(theta) Rz(lambda),
/// theta in [0, pi], phi and lambda in [-pi, pi].
struct Su2Param {
    double theta = 0.0;
    double phi = 0.0;
    double lambda = 0.0;

    static Su2Param identity() { return {}; }
    /// Exchanges the two modes: a_h^dag -> a_v^dag, a_v^dag -> -a_h^dag.
    static Su2Param swap() { return {std::numbers::pi, 0.0, 0.0}; }

    Eigen::Matrix2cd matrix() const {
        const cplx i{0.0, 1.0};
        const double c = std::cos(theta / 2), s = std::sin(theta / 2);
        Eigen::Matrix2cd v;
        v(0, 0) = std::exp(-i * (phi + lambda) / 2.0) * c;
        v(0, 1) = -std::exp(-i * (phi - lambda) / 2.0) * s;
        v(1, 0) = std::exp(i * (phi - lambda) / 2.0) * s;
        v(1, 1) = std::exp(i * (phi + lambda) / 2.0) * c;
        return v;
    }
};

/// Matrix on two modes, row/column index = n_first * d + n_second.
struct TwoModeGate {
    int d = 0;
    MatrixXcd matrix;
    /// 1 - |column|^2 for every input basis state.
    Eigen::VectorXd column_deficits;
    /// Deficit of the vacuum column |0,0>; zero for passive transforms.
    double leakage = 0.0;

    TwoModeGate adjoint() const {
        TwoModeGate g{d, matrix.adjoint(), Eigen::VectorXd::Zero(matrix.cols()), 0.0};
        return g;
    }
};

struct SqueezerOptions {
    double r_max = kDefaultRMax;
    double leakage_threshold = kDefaultLeakageThreshold;
};

namespace detail {

inline double factorial(int n) {
    static const auto table = [] {
        std::array<double, 171> t{};
        t[0] = 1.0;
        for (int k = 1; k < 171; ++k) t[k] = t[k - 1] * k;
        return t;
    }();
    return table.at(static_cast<std::size_t>(n));
}

/// z^n by repeated multiplication; 0^0 = 1.
inline cplx ipow(cplx z, int n) {
    cplx out{1.0, 0.0};
    for (int k = 0; k < n; ++k) out *= z;
    return out;
}

inline double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

inline Eigen::VectorXd column_deficits(const MatrixXcd &m) {
    Eigen::VectorXd out(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(c) = 1.0 - m.col(c).squaredNorm();
    return out;
}

}  // namespace detail

/// <n1,n2| exp(eta a^dag b^dag - eta* a b) |m1,m2> from the normal-ordered
/// (disentangled) product exp(G a^dag b^dag) cosh(r)^-(N+1) exp(-G* a b),
/// G = e^{i phi} tanh r.
inline cplx squeezer_element(int n1, int n2, int m1, int m2, SqueezeParam p) {
    if (n1 - n2 != m1 - m2) return {0.0, 0.0};
    const double r = p.r;
    const cplx g = std::polar(std::tanh(r), p.phase);
    const double ch = std::cosh(r);
    const double root = std::sqrt(detail::factorial(n1) * detail::factorial(n2) * detail::factorial(m1) *
                                  detail::factorial(m2));
    cplx sum{0.0, 0.0};
    for (int j = 0; j <= std::min(m1, m2); ++j) {
        const int pa = m1 - j, pb = m2 - j;
        const int l = n1 - pa;
        if (l < 0) continue;
        const cplx term = detail::ipow(-std::conj(g), j) * detail::ipow(g, l) /
                          (detail::factorial(j) * detail::factorial(l) * detail::factorial(pa) *
                           detail::factorial(pb)) *
                          std::pow(ch, -(pa + pb + 1));
        sum += term;
    }
    return sum * root;
}

/// Two-mode squeezer restricted to the truncated space.
/// Throws TruncationError if the vacuum-column deficit exceeds the threshold.
inline TwoModeGate build_two_mode_squeezer(SqueezeParam eta, FockCutoff cutoff, SqueezerOptions opt = {}) {
    eta.validate(opt.r_max);
    const int d = cutoff.d();
    MatrixXcd m = MatrixXcd::Zero(d * d, d * d);
    if (eta.r == 0.0) {
        m.setIdentity();
    } else {
        for (int m1 = 0; m1 < d; ++m1)
            for (int m2 = 0; m2 < d; ++m2)
                for (int n1 = 0; n1 < d; ++n1) {
                    const int n2 = n1 - m1 + m2;
                    if (n2 < 0 || n2 >= d) continue;
                    m(n1 * d + n2, m1 * d + m2) = squeezer_element(n1, n2, m1, m2, eta);
                }
    }
    TwoModeGate g{d, std::move(m), {}, 0.0};
    g.column_deficits = detail::column_deficits(g.matrix);
    g.leakage = std::max(0.0, g.column_deficits(0));
    if (g.leakage > opt.leakage_threshold)
        throw TruncationError("two-mode squeezer with |eta| = " + std::to_string(eta.r) + " at cutoff " +
                                  std::to_string(d) + " leaks " + std::to_string(g.leakage) +
                                  " (threshold " + std::to_string(opt.leakage_threshold) + ")",
                              g.leakage, opt.leakage_threshold);
    return g;
}

/// Passive transform a_j^dag -> sum_i V_ij a_i^dag (mode 0 = h, mode 1 = v),
/// restricted to the truncated space. Block-diagonal in total photon number.
inline TwoModeGate build_su2_mode_transform(const Su2Param &v, FockCutoff cutoff) {
    const int d = cutoff.d();
    const Eigen::Matrix2cd V = v.matrix();
    MatrixXcd m = MatrixXcd::Zero(d * d, d * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            // (V00 h + V10 v)^p (V01 h + V11 v)^q |0> / sqrt(p! q!)
            const double norm = 1.0 / std::sqrt(detail::factorial(p) * detail::factorial(q));
            for (int i = 0; i <= p; ++i)
                for (int k = 0; k <= q; ++k) {
                    const int nh = i + k, nv = p + q - i - k;
                    if (nh >= d || nv >= d) continue;
                    const cplx coeff = detail::binom(p, i) * detail::binom(q, k) * detail::ipow(V(0, 0), i) *
                                       detail::ipow(V(1, 0), p - i) * detail::ipow(V(0, 1), k) *
                                       detail::ipow(V(1, 1), q - k);
                    m(nh * d + nv, p * d + q) +=
                        coeff * norm * std::sqrt(detail::factorial(nh) * detail::factorial(nv));
                }
        }
    TwoModeGate g{d, std::move(m), {}, 0.0};
    g.column_deficits = detail::column_deficits(g.matrix);
    return g;
}

/// Identity of the two-mode space.
inline TwoModeGate identity_gate(FockCutoff cutoff) {
    const int d = cutoff.d();
    return {d, MatrixXcd::Identity(d * d, d * d), Eigen::VectorXd::Zero(d * d), 0.0};
}

/// Ordered, labelled modes sharing one cutoff. Basis index is row-major in the
/// occupations: the first mode is the most significant digit.
class ModeLayout {
  public:
    ModeLayout(std::vector<std::string> labels, FockCutoff cutoff) : labels_(std::move(labels)), cutoff_(cutoff) {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            for (std::size_t j = i + 1; j < labels_.size(); ++j)
                if (labels_[i] == labels_[j]) throw DimensionError("duplicate mode label '" + labels_[i] + "'");
    }

    const std::vector<std::string> &labels() const { return labels_; }
    FockCutoff cutoff() const { return cutoff_; }
    int d() const { return cutoff_.d(); }
    int modes() const { return static_cast<int>(labels_.size()); }

    Eigen::Index dim() const {
        Eigen::Index n = 1;
        for (int k = 0; k < modes(); ++k) n *= d();
        return n;
    }

    int index_of(const std::string &label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return static_cast<int>(i);
        throw DimensionError("mode '" + label + "' not found");
    }

    Eigen::Index stride(int mode) const {
        Eigen::Index s = 1;
        for (int k = mode + 1; k < modes(); ++k) s *= d();
        return s;
    }

    int occupation(Eigen::Index index, int mode) const { return static_cast<int>((index / stride(mode)) % d()); }

    std::vector<int> occupations(Eigen::Index index) const {
        std::vector<int> occ(static_cast<std::size_t>(modes()));
        for (int k = modes() - 1; k >= 0; --k) {
            occ[static_cast<std::size_t>(k)] = static_cast<int>(index % d());
            index /= d();
        }
        return occ;
    }

    Eigen::Index index(std::span<const int> occ) const {
        if (static_cast<int>(occ.size()) != modes()) throw DimensionError("occupation tuple has wrong length");
        Eigen::Index idx = 0;
        for (int n : occ) {
            if (n < 0 || n >= d()) throw DimensionError("occupation outside the cutoff");
            idx = idx * d() + n;
        }
        return idx;
    }

    void relabel(const std::string &from, const std::string &to) {
        const int i = index_of(from);
        for (const auto &l : labels_)
            if (l == to && l != from) throw DimensionError("duplicate mode label '" + to + "'");
        labels_[static_cast<std::size_t>(i)] = to;
    }

    friend bool operator==(const ModeLayout &, const ModeLayout &) = default;

  private:
    std::vector<std::string> labels_;
    FockCutoff cutoff_;
};

namespace detail {

/// Applies a (d^2 x d^2) matrix to modes (a, b) of the vector stored at
/// data[offset + k*elem_stride], k over the layout's basis.
inline void apply_pair(cplx *data, Eigen::Index elem_stride, const ModeLayout &layout, int a, int b,
                       const MatrixXcd &gate) {
    const int d = layout.d();
    const Eigen::Index sa = layout.stride(a), sb = layout.stride(b), n = layout.dim();
    std::vector<cplx> in(static_cast<std::size_t>(d * d)), out(in.size());
    for (Eigen::Index base = 0; base < n; ++base) {
        if (layout.occupation(base, a) != 0 || layout.occupation(base, b) != 0) continue;
        bool nonzero = false;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const cplx v = data[(base + i * sa + j * sb) * elem_stride];
                in[static_cast<std::size_t>(i * d + j)] = v;
                nonzero = nonzero || v != cplx{0.0, 0.0};
            }
        if (!nonzero) continue;
        for (int r = 0; r < d * d; ++r) {
            cplx acc{0.0, 0.0};
            for (int c = 0; c < d * d; ++c) acc += gate(r, c) * in[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = acc;
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) data[(base + i * sa + j * sb) * elem_stride] = out[static_cast<std::size_t>(i * d + j)];
    }
}

}  // namespace detail

/// Pure state on labelled modes. The squared norm is the probability of the
/// branch it describes: it drops below one through truncation (`leaked`) or
/// post-selection (`success_probability`).
class FockState {
  public:
    FockState(ModeLayout layout, VectorXcd amplitudes) : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
        if (amps_.size() != layout_.dim()) throw DimensionError("amplitude vector does not match mode layout");
    }

    static FockState vacuum(std::vector<std::string> labels, FockCutoff cutoff) {
        ModeLayout layout(std::move(labels), cutoff);
        VectorXcd a = VectorXcd::Zero(layout.dim());
        a(0) = 1.0;
        return FockState(std::move(layout), std::move(a));
    }

    static FockState basis(std::vector<std::string> labels, FockCutoff cutoff, std::span<const int> occ) {
        ModeLayout layout(std::move(labels), cutoff);
        VectorXcd a = VectorXcd::Zero(layout.dim());
        a(layout.index(occ)) = 1.0;
        return FockState(std::move(layout), std::move(a));
    }

    const ModeLayout &layout() const { return layout_; }
    const VectorXcd &amplitudes() const { return amps_; }
    VectorXcd &amplitudes() { return amps_; }
    double norm2() const { return amps_.squaredNorm(); }
    cplx amplitude(std::span<const int> occ) const { return amps_(layout_.index(occ)); }

    double leaked = 0.0;
    double success_probability = 1.0;

  private:
    ModeLayout layout_;
    VectorXcd amps_;
};

/// Density matrix on labelled modes. Trace plays the role of FockState::norm2.
class FockDensity {
  public:
    FockDensity(ModeLayout layout, MatrixXcd matrix) : layout_(std::move(layout)), rho_(std::move(matrix)) {
        if (rho_.rows() != layout_.dim() || rho_.cols() != layout_.dim())
            throw DimensionError("density matrix does not match mode layout");
    }

    static FockDensity from_pure(const FockState &psi) {
        FockDensity rho(psi.layout(), psi.amplitudes() * psi.amplitudes().adjoint());
        rho.leaked = psi.leaked;
        rho.success_probability = psi.success_probability;
        return rho;
    }

    const ModeLayout &layout() const { return layout_; }
    const MatrixXcd &matrix() const { return rho_; }
    MatrixXcd &matrix() { return rho_; }
    double trace() const { return rho_.trace().real(); }

    /// Hermitian to 1e-12, trace in (0, 1 + tol], smallest eigenvalue >= -1e-10.
    bool is_valid(double herm_tol = 1e-12, double psd_tol = 1e-10) const {
        if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > herm_tol) return false;
        const double tr = trace();
        if (!(tr > 0.0) || tr > 1.0 + 1e-12) return false;
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -psd_tol;
    }

    double leaked = 0.0;
    double success_probability = 1.0;

  private:
    ModeLayout layout_;
    MatrixXcd rho_;
};

namespace detail {

inline std::pair<int, int> gate_targets(const ModeLayout &layout, const TwoModeGate &gate, const std::string &a,
                                        const std::string &b) {
    if (a == b) throw DimensionError("gate target modes must be distinct");
    if (gate.d != layout.d() || gate.matrix.rows() != layout.d() * layout.d())
        throw DimensionError("gate dimension " + std::to_string(gate.d) + " does not match cutoff " +
                             std::to_string(layout.d()));
    return {layout.index_of(a), layout.index_of(b)};
}

}  // namespace detail

/// Applies `gate` to modes (a, b); a is the gate's first mode.
inline FockState apply_two_mode_gate(FockState state, const TwoModeGate &gate, const std::string &a,
                                     const std::string &b) {
    const auto [ia, ib] = detail::gate_targets(state.layout(), gate, a, b);
    const double before = state.norm2();
    detail::apply_pair(state.amplitudes().data(), 1, state.layout(), ia, ib, gate.matrix);
    state.leaked += std::max(0.0, before - state.norm2());
    return state;
}

/// rho -> G rho G^dag on modes (a, b).
inline FockDensity apply_two_mode_gate(FockDensity state, const TwoModeGate &gate, const std::string &a,
                                       const std::string &b) {
    const auto [ia, ib] = detail::gate_targets(state.layout(), gate, a, b);
    const double before = state.trace();
    MatrixXcd &rho = state.matrix();
    const Eigen::Index n = rho.rows();
    for (Eigen::Index c = 0; c < n; ++c) detail::apply_pair(rho.col(c).data(), 1, state.layout(), ia, ib, gate.matrix);
    const MatrixXcd conj_gate = gate.matrix.conjugate();
    for (Eigen::Index r = 0; r < n; ++r)
        detail::apply_pair(rho.data() + r, rho.outerStride(), state.layout(), ia, ib, conj_gate);
    state.leaked += std::max(0.0, before - state.trace());
    return state;
}

namespace detail {

/// c(n, k) = <n|K_k|n+k> = sqrt(C(n+k, k)) T^{n/2} (1-T)^{k/2}, zero for n+k >= d.
inline Eigen::MatrixXd loss_coefficients(double transmissivity, int d) {
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(d, d);
    for (int occ = 0; occ < d; ++occ)
        for (int k = 0; occ + k < d; ++k)
            coeff(occ, k) = std::sqrt(binom(occ + k, k)) * std::pow(transmissivity, occ / 2.0) *
                            std::pow(1.0 - transmissivity, k / 2.0);
    return coeff;
}

}  // namespace detail

/// Pure-loss channel with transmissivity T on one mode, Kraus operators
/// K_k = sqrt((1-T)^k / k!) T^{n/2} a^k, k = 0..d-1.
inline FockDensity apply_loss_channel(const FockDensity &state, const std::string &mode, double transmissivity) {
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
        throw ConfigError("transmissivity must lie in [0, 1], got " + std::to_string(transmissivity));
    if (transmissivity == 1.0) return state;
    const ModeLayout &layout = state.layout();
    const int t = layout.index_of(mode);
    const int d = layout.d();
    const Eigen::Index st = layout.stride(t), n = layout.dim();

    const Eigen::MatrixXd coeff = detail::loss_coefficients(transmissivity, d);

    const MatrixXcd &rho = state.matrix();
    MatrixXcd out = MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int nj = layout.occupation(j, t);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int ni = layout.occupation(i, t);
            cplx acc{0.0, 0.0};
            for (int k = 0; ni + k < d && nj + k < d; ++k)
                acc += coeff(ni, k) * coeff(nj, k) * rho(i + k * st, j + k * st);
            out(i, j) = acc;
        }
    }
    FockDensity result(layout, std::move(out));
    result.leaked = state.leaked;
    result.success_probability = state.success_probability;
    return result;
}

/// Reduced state on `keep` (kept in the state's own mode order).
inline FockDensity partial_trace(const FockDensity &state, const std::vector<std::string> &keep) {
    if (keep.empty()) throw ConfigError("partial_trace needs a nonempty set of modes to keep");
    const ModeLayout &layout = state.layout();
    std::vector<bool> kept(static_cast<std::size_t>(layout.modes()), false);
    for (const auto &k : keep) {
        const int i = layout.index_of(k);
        if (kept[static_cast<std::size_t>(i)]) throw DimensionError("mode '" + k + "' listed twice");
        kept[static_cast<std::size_t>(i)] = true;
    }
    std::vector<std::string> labels;
    for (int i = 0; i < layout.modes(); ++i)
        if (kept[static_cast<std::size_t>(i)]) labels.push_back(layout.labels()[static_cast<std::size_t>(i)]);
    ModeLayout out_layout(labels, layout.cutoff());

    const Eigen::Index n = layout.dim();
    std::vector<Eigen::Index> kept_index(static_cast<std::size_t>(n)), traced_index(static_cast<std::size_t>(n));
    for (Eigen::Index idx = 0; idx < n; ++idx) {
        const auto occ = layout.occupations(idx);
        Eigen::Index ki = 0, ti = 0;
        for (int m = 0; m < layout.modes(); ++m) {
            if (kept[static_cast<std::size_t>(m)])
                ki = ki * layout.d() + occ[static_cast<std::size_t>(m)];
            else
                ti = ti * layout.d() + occ[static_cast<std::size_t>(m)];
        }
        kept_index[static_cast<std::size_t>(idx)] = ki;
        traced_index[static_cast<std::size_t>(idx)] = ti;
    }
    MatrixXcd out = MatrixXcd::Zero(out_layout.dim(), out_layout.dim());
    const MatrixXcd &rho = state.matrix();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (traced_index[static_cast<std::size_t>(i)] == traced_index[static_cast<std::size_t>(j)])
                out(kept_index[static_cast<std::size_t>(i)], kept_index[static_cast<std::size_t>(j)]) += rho(i, j);
    FockDensity result(std::move(out_layout), std::move(out));
    result.leaked = state.leaked;
    result.success_probability = state.success_probability;
    return result;
}

/// Appends a vacuum mode as the new last mode.
inline FockState append_vacuum_mode(const FockState &state, const std::string &label) {
    auto labels = state.layout().labels();
    labels.push_back(label);
    ModeLayout layout(std::move(labels), state.layout().cutoff());
    VectorXcd a = VectorXcd::Zero(layout.dim());
    const int d = layout.d();
    for (Eigen::Index i = 0; i < state.amplitudes().size(); ++i) a(i * d) = state.amplitudes()(i);
    FockState out(std::move(layout), std::move(a));
    out.leaked = state.leaked;
    out.success_probability = state.success_probability;
    return out;
}

inline FockDensity append_vacuum_mode(const FockDensity &state, const std::string &label) {
    auto labels = state.layout().labels();
    labels.push_back(label);
    ModeLayout layout(std::move(labels), state.layout().cutoff());
    MatrixXcd m = MatrixXcd::Zero(layout.dim(), layout.dim());
    const int d = layout.d();
    const MatrixXcd &rho = state.matrix();
    for (Eigen::Index j = 0; j < rho.cols(); ++j)
        for (Eigen::Index i = 0; i < rho.rows(); ++i) m(i * d, j * d) = rho(i, j);
    FockDensity out(std::move(layout), std::move(m));
    out.leaked = state.leaked;
    out.success_probability = state.success_probability;
    return out;
}

/// Zeroes every component with `mode` occupation >= keep_below; returns the
/// removed weight.
inline double truncate_mode(FockState &state, const std::string &mode, int keep_below) {
    const int t = state.layout().index_of(mode);
    double removed = 0.0;
    auto &a = state.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (state.layout().occupation(i, t) >= keep_below) {
            removed += std::norm(a(i));
            a(i) = 0.0;
        }
    state.leaked += removed;
    return removed;
}

inline double truncate_mode(FockDensity &state, const std::string &mode, int keep_below) {
    const int t = state.layout().index_of(mode);
    auto &rho = state.matrix();
    double removed = 0.0;
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
        if (state.layout().occupation(i, t) >= keep_below) {
            removed += rho(i, i).real();
            rho.row(i).setZero();
            rho.col(i).setZero();
        }
    state.leaked += removed;
    return removed;
}

namespace detail {

inline std::vector<Eigen::Index> rest_index_map(const ModeLayout &layout, int removed_mode, int occupation) {
    std::vector<Eigen::Index> map;
    for (Eigen::Index i = 0; i < layout.dim(); ++i)
        if (layout.occupation(i, removed_mode) == occupation) map.push_back(i);
    return map;
}

inline ModeLayout without_mode(const ModeLayout &layout, int removed_mode) {
    auto labels = layout.labels();
    labels.erase(labels.begin() + removed_mode);
    if (labels.empty()) throw DimensionError("cannot remove the only mode");
    return ModeLayout(std::move(labels), layout.cutoff());
}

}  // namespace detail

/// Projects `mode` onto |occupation> and removes it. The result is
/// unnormalized; its squared norm is the branch probability.
inline FockState project_mode(const FockState &state, const std::string &mode, int occupation = 0) {
    const int t = state.layout().index_of(mode);
    ModeLayout rest = detail::without_mode(state.layout(), t);
    const auto map = detail::rest_index_map(state.layout(), t, occupation);
    VectorXcd a(rest.dim());
    for (std::size_t k = 0; k < map.size(); ++k) a(static_cast<Eigen::Index>(k)) = state.amplitudes()(map[k]);
    FockState out(std::move(rest), std::move(a));
    out.leaked = state.leaked;
    out.success_probability = out.norm2() / std::max(state.norm2(), 1e-300) * state.success_probability;
    return out;
}

inline FockDensity project_mode(const FockDensity &state, const std::string &mode, int occupation = 0) {
    const int t = state.layout().index_of(mode);
    ModeLayout rest = detail::without_mode(state.layout(), t);
    const auto map = detail::rest_index_map(state.layout(), t, occupation);
    const auto n = static_cast<Eigen::Index>(map.size());
    MatrixXcd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            m(i, j) = state.matrix()(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
    FockDensity out(std::move(rest), std::move(m));
    out.leaked = state.leaked;
    out.success_probability = out.trace() / std::max(state.trace(), 1e-300) * state.success_probability;
    return out;
}

/// <n_mode> / <psi|psi>.
inline double mean_photon_number(const FockState &state, const std::string &mode) {
    const int t = state.layout().index_of(mode);
    double num = 0.0;
    for (Eigen::Index i = 0; i < state.amplitudes().size(); ++i)
        num += state.layout().occupation(i, t) * std::norm(state.amplitudes()(i));
    return num / state.norm2();
}

inline double mean_photon_number(const FockDensity &state, const std::string &mode) {
    const int t = state.layout().index_of(mode);
    double num = 0.0;
    for (Eigen::Index i = 0; i < state.matrix().rows(); ++i)
        num += state.layout().occupation(i, t) * state.matrix()(i, i).real();
    return num / state.trace();
}

/// Single-mode annihilation operator at cutoff d.
inline MatrixXcd annihilation(int d) {
    MatrixXcd a = MatrixXcd::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline MatrixXcd number_operator(int d) {
    MatrixXcd n = MatrixXcd::Zero(d, d);
    for (int k = 0; k < d; ++k) n(k, k) = k;
    return n;
}

}  // namespace pdcloop
