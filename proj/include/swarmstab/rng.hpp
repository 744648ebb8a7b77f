#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "swarmstab/types.hpp"

namespace swarmstab {

// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so every variate below is derived from raw engine
// output by hand. Runs are bit-reproducible given the seed (up to the
// platform's std::log).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate (rate > 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n), n > 0, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

 private:
  std::mt19937_64 engine_;
};

/// Uniform sample on the simplex: Dirichlet(1, ..., 1) via normalised
/// unit exponentials.
template <typename Scalar = double>
Vector<Scalar> sample_simplex(Rng& rng, std::size_t m) {
  Vector<Scalar> x(static_cast<Eigen::Index>(m));
  for (auto& v : x) v = static_cast<Scalar>(rng.exponential(1.0));
  return x / x.sum();
}

}  // namespace swarmstab
