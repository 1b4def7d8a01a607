/*
 Copyright 2026 the anisodrc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace anisodrc {

/// Counter-derived random stream.
///
/// Streams are addressed as (master seed, purpose tag, index): the three words
/// are mixed through SplitMix64 into the state of a xoshiro256++ generator.
/// Two streams with different addresses are independent for all practical
/// purposes, and a stream's output depends only on its address, never on
/// scheduling. This is the whole determinism contract: one master seed per
/// run, one substream per (scenario index, purpose tag).
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t purpose, std::uint64_t index = 0) {
        std::uint64_t x = master_seed;
        x = splitmix(x ^ (0x9e3779b97f4a7c15ULL * (purpose + 1)));
        x = splitmix(x ^ (0xbf58476d1ce4e5b9ULL * (index + 1)));
        for (auto& s : state_) s = splitmix(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stdev) { return mean + stdev * normal(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection to avoid modulo bias.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t splitmix(std::uint64_t&& x) {
        std::uint64_t y = x;
        return splitmix(y);
    }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Well-known purpose tags for substream derivation.
namespace purpose {
inline constexpr std::uint64_t kAmbiguitySamples = 1;
inline constexpr std::uint64_t kTrainScenario = 2;
inline constexpr std::uint64_t kEvalScenario = 3;
inline constexpr std::uint64_t kFeasibilityScenario = 4;
inline constexpr std::uint64_t kViolationRollout = 5;
inline constexpr std::uint64_t kBoxplotScenario = 6;
inline constexpr std::uint64_t kCoverageTrial = 7;
inline constexpr std::uint64_t kReference = 8;
inline constexpr std::uint64_t kBoxplotRealization = 9;
}  // namespace purpose

}  // namespace anisodrc
