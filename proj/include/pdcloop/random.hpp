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

// Reproducible random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions are implemented here (the std:: ones are
// implementation-defined), so a (seed, call sequence) pair produces the same
// numbers with any conforming standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace pdcloop {

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Sub-seed for stream `index` of a parent seed. Depends only on its inputs.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Binomial(n, p) by inversion, visiting outcomes in the order
    /// mode, mode-1, mode+1, mode-2, ... so the expected work is O(sqrt(n p q)).
    long binomial(long n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (n < 32) {
            long k = 0;
            for (long i = 0; i < n; ++i) k += uniform() < p ? 1 : 0;
            return k;
        }
        const double q = 1.0 - p;
        const long mode = std::min(n, static_cast<long>(std::floor((n + 1) * p)));
        const double log_pmf_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) -
                                    std::lgamma(static_cast<double>(n - mode) + 1.0) +
                                    mode * std::log(p) + (n - mode) * std::log(q);
        const double pmf_mode = std::exp(log_pmf_mode);
        const double u = uniform();
        double acc = pmf_mode;
        if (u < acc) return mode;
        double pl = pmf_mode, pr = pmf_mode;
        long lo = mode, hi = mode;
        const double ratio = p / q;
        while (lo > 0 || hi < n) {
            if (lo > 0) {
                // pmf(k-1) = pmf(k) * k / (n-k+1) / ratio
                pl *= static_cast<double>(lo) / (static_cast<double>(n - lo + 1) * ratio);
                --lo;
                acc += pl;
                if (u < acc) return lo;
            }
            if (hi < n) {
                pr *= static_cast<double>(n - hi) * ratio / static_cast<double>(hi + 1);
                ++hi;
                acc += pr;
                if (u < acc) return hi;
            }
        }
        return mode;  // rounding left u beyond the accumulated mass
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace pdcloop
