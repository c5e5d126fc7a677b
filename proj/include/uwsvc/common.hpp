// Copyright 2026 The UWSVC Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UWSVC_COMMON_HPP
#define UWSVC_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwsvc {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Physical-quantity precondition violated (negative distance, zero noise, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API contract violated (mismatched grids, empty inputs, bad flags).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A disparity denominator collapsed below the safe threshold.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A receiver's outage floor cannot be met even at maximum power.
class OutageInfeasibleError : public std::runtime_error {
 public:
  OutageInfeasibleError(int rx_id, const std::string& what)
      : std::runtime_error(what), rx_id_(rx_id) {}
  int rx_id() const { return rx_id_; }

 private:
  int rx_id_;
};

class EmptyActiveSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No active subset satisfies the shutdown-plan constraints.
class NoFeasibleSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContentionLivelockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Consensus round cap exhausted with disagreeing values.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two intent packets with identical score and id: state corruption.
class ElectionCollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

/// splitmix64 step; used to mix seeds and derive child streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 wrapper with explicit variate transforms so that a given seed
/// produces the same stream on every platform (std::*_distribution is
/// implementation-defined and would break golden snapshots).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform in [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unit-mean exponential draw.
  double exponential() {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return -std::log(u);
  }

  /// Standard normal via Box-Muller (no state carried between calls).
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t raw() { return engine_(); }

  /// Independent child stream derived from this seed and a label.
  static Rng child(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                   std::uint64_t c = 0) {
    return Rng(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Small numerics
// ---------------------------------------------------------------------------

/// Trapezoidal integral of uniformly spaced samples over [a, b].
inline double trapezoid(std::span<const double> y, double a, double b) {
  if (y.size() < 2) throw ContractError("trapezoid: need at least 2 samples");
  const double h = (b - a) / static_cast<double>(y.size() - 1);
  double acc = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) acc += y[i];
  return acc * h;
}

/// Standard normal CDF, accurate to ~1e-15 via erfc.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730950488016887);
}

inline double log2_1p(double x) { return std::log2(1.0 + x); }

}  // namespace uwsvc

#endif  // UWSVC_COMMON_HPP
