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

// Line-oriented `key = value` documents shared by every text format in the
// library. `#` starts a comment; blank lines are ignored; keys may repeat.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdcloop/errors.hpp"

namespace pdcloop::kv {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

/// Shortest text that parses back to the identical double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

class Document {
  public:
    static Document parse(std::string_view text) {
        Document doc;
        std::istringstream in{std::string(text)};
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            const auto hash = raw.find('#');
            const std::string line = trim(std::string_view(raw).substr(0, hash));
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                                  line + "'");
            Entry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)),
                    lineno};
            if (e.key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            doc.entries_.push_back(std::move(e));
        }
        return doc;
    }

    static Document load(const std::string &path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    const std::vector<Entry> &entries() const { return entries_; }

    bool has(std::string_view key) const {
        for (const auto &e : entries_)
            if (e.key == key) return true;
        return false;
    }

    /// Last occurrence wins for scalar keys.
    const Entry *find(std::string_view key) const {
        const Entry *hit = nullptr;
        for (const auto &e : entries_)
            if (e.key == key) hit = &e;
        return hit;
    }

    std::vector<const Entry *> all(std::string_view key) const {
        std::vector<const Entry *> out;
        for (const auto &e : entries_)
            if (e.key == key) out.push_back(&e);
        return out;
    }

    const std::string &get(std::string_view key) const {
        const Entry *e = find(key);
        if (!e) throw ConfigError("missing required key '" + std::string(key) + "'");
        return e->value;
    }

    std::string get_or(std::string_view key, std::string fallback) const {
        const Entry *e = find(key);
        return e ? e->value : fallback;
    }

    double get_double(std::string_view key) const { return to_double(key, get(key)); }
    double get_double_or(std::string_view key, double fallback) const {
        const Entry *e = find(key);
        return e ? to_double(key, e->value) : fallback;
    }
    long get_long(std::string_view key) const { return to_long(key, get(key)); }
    long get_long_or(std::string_view key, long fallback) const {
        const Entry *e = find(key);
        return e ? to_long(key, e->value) : fallback;
    }
    bool get_bool_or(std::string_view key, bool fallback) const {
        const Entry *e = find(key);
        return e ? to_bool(key, e->value) : fallback;
    }

    /// Rejects keys outside `allowed` (prefix match for entries ending in '.').
    void require_known(const std::set<std::string> &allowed) const {
        for (const auto &e : entries_) {
            bool ok = allowed.count(e.key) > 0;
            for (const auto &a : allowed)
                if (!ok && !a.empty() && a.back() == '.' && e.key.rfind(a, 0) == 0) ok = true;
            if (!ok)
                throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
        }
    }

    static double to_double(std::string_view key, const std::string &v) {
        double x = 0.0;
        const char *first = v.data(), *last = v.data() + v.size();
        if (first != last && *first == '+') ++first;
        const auto res = std::from_chars(first, last, x);
        if (res.ec == std::errc::result_out_of_range && res.ptr == last) return x;  // subnormal
        if (res.ec != std::errc() || res.ptr != last || first == last)
            throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + v + "'");
        return x;
    }

    static long to_long(std::string_view key, const std::string &v) {
        long x = 0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + v + "'");
        return x;
    }

    static bool to_bool(std::string_view key, const std::string &v) {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("key '" + std::string(key) + "': expected true/false, got '" + v + "'");
    }

    /// Whitespace-separated numbers; the error names the key.
    static std::vector<double> to_doubles(std::string_view key, const std::string &v) {
        std::vector<double> out;
        for (auto &tok : split_ws(v)) out.push_back(to_double(key, tok));
        return out;
    }

  private:
    std::vector<Entry> entries_;
};

/// Accumulates `key = value` lines.
class Writer {
  public:
    explicit Writer(std::string header) { out_ << "# " << header << "\n"; }
    Writer &comment(const std::string &c) {
        out_ << "# " << c << "\n";
        return *this;
    }
    Writer &put(const std::string &key, const std::string &value) {
        out_ << key << " = " << value << "\n";
        return *this;
    }
    Writer &put(const std::string &key, double value) { return put(key, format_double(value)); }
    Writer &put(const std::string &key, long value) { return put(key, std::to_string(value)); }
    Writer &put(const std::string &key, int value) { return put(key, std::to_string(value)); }
    Writer &put(const std::string &key, bool value) { return put(key, std::string(value ? "true" : "false")); }
    Writer &put_doubles(const std::string &key, const std::vector<double> &values) {
        std::string s;
        for (std::size_t i = 0; i < values.size(); ++i) s += (i ? " " : "") + format_double(values[i]);
        return put(key, s);
    }
    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
};

}  // namespace pdcloop::kv
