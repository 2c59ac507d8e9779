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

// Text formats for Fock-space states.
//
//   # pdcloop fock state v1
//   modes = b1 b2 b3
//   cutoff = 4
//   success_probability = 0.97
//   leaked = 0
//   amplitude = <index> <re> <im>        nonzero entries only
//
// Densities use "# pdcloop fock density v1" and `entry = <row> <col> <re> <im>`.
// Indices are row-major over the listed modes, first mode most significant.

#include <string>
#include <string_view>
#include <vector>

#include "pdcloop/errors.hpp"
#include "pdcloop/fockcore.hpp"
#include "pdcloop/kvtext.hpp"

namespace pdcloop {

inline constexpr const char *kFockStateHeader = "pdcloop fock state v1";
inline constexpr const char *kFockDensityHeader = "pdcloop fock density v1";

namespace detail {

inline void write_layout(kv::Writer &w, const ModeLayout &layout, double success, double leaked) {
    std::string labels;
    for (const auto &l : layout.labels()) labels += (labels.empty() ? "" : " ") + l;
    w.put("modes", labels).put("cutoff", layout.d()).put("success_probability", success).put("leaked", leaked);
}

inline ModeLayout read_layout(const kv::Document &doc) {
    auto labels = kv::split_ws(doc.get("modes"));
    if (labels.empty()) throw ConfigError("key 'modes': expected at least one label");
    return ModeLayout(std::move(labels), FockCutoff(static_cast<int>(doc.get_long("cutoff"))));
}

inline Eigen::Index read_index(const kv::Entry &e, const std::string &tok, Eigen::Index dim) {
    const long i = kv::Document::to_long(e.key, tok);
    if (i < 0 || i >= dim)
        throw ConfigError("line " + std::to_string(e.line) + ": index " + tok + " outside [0, " + std::to_string(dim) + ")");
    return static_cast<Eigen::Index>(i);
}

}  // namespace detail

inline std::string format_fock_state(const FockState &s) {
    kv::Writer w(kFockStateHeader);
    detail::write_layout(w, s.layout(), s.success_probability, s.leaked);
    const auto &a = s.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a(i) != cplx(0.0))
            w.put("amplitude", std::to_string(i) + " " + kv::format_double(a(i).real()) + " " + kv::format_double(a(i).imag()));
    return w.str();
}

inline FockState parse_fock_state(std::string_view text) {
    const auto doc = kv::Document::parse(text);
    doc.require_known({"modes", "cutoff", "success_probability", "leaked", "amplitude"});
    ModeLayout layout = detail::read_layout(doc);
    VectorXcd a = VectorXcd::Zero(layout.dim());
    for (const kv::Entry *e : doc.all("amplitude")) {
        const auto tok = kv::split_ws(e->value);
        if (tok.size() != 3) throw ConfigError("line " + std::to_string(e->line) + ": key 'amplitude' needs '<index> <re> <im>'");
        a(detail::read_index(*e, tok[0], layout.dim())) = {kv::Document::to_double("amplitude", tok[1]),
                                                           kv::Document::to_double("amplitude", tok[2])};
    }
    FockState s(std::move(layout), std::move(a));
    s.success_probability = doc.get_double_or("success_probability", 1.0);
    s.leaked = doc.get_double_or("leaked", 0.0);
    return s;
}

inline std::string format_fock_density(const FockDensity &s) {
    kv::Writer w(kFockDensityHeader);
    detail::write_layout(w, s.layout(), s.success_probability, s.leaked);
    const auto &m = s.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != cplx(0.0))
                w.put("entry", std::to_string(i) + " " + std::to_string(j) + " " + kv::format_double(m(i, j).real()) + " " +
                                   kv::format_double(m(i, j).imag()));
    return w.str();
}

inline FockDensity parse_fock_density(std::string_view text) {
    const auto doc = kv::Document::parse(text);
    doc.require_known({"modes", "cutoff", "success_probability", "leaked", "entry"});
    ModeLayout layout = detail::read_layout(doc);
    MatrixXcd m = MatrixXcd::Zero(layout.dim(), layout.dim());
    for (const kv::Entry *e : doc.all("entry")) {
        const auto tok = kv::split_ws(e->value);
        if (tok.size() != 4) throw ConfigError("line " + std::to_string(e->line) + ": key 'entry' needs '<row> <col> <re> <im>'");
        m(detail::read_index(*e, tok[0], layout.dim()), detail::read_index(*e, tok[1], layout.dim())) = {
            kv::Document::to_double("entry", tok[2]), kv::Document::to_double("entry", tok[3])};
    }
    FockDensity s(std::move(layout), std::move(m));
    s.success_probability = doc.get_double_or("success_probability", 1.0);
    s.leaked = doc.get_double_or("leaked", 0.0);
    return s;
}

}  // namespace pdcloop
