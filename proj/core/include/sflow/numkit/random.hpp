#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sflow/numkit/array.hpp"

namespace sflow::numkit {

/// Seeded generator shared by every stochastic routine in the toolkit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  /// Derive an independent stream; the parent advances by one draw.
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

  std::vector<std::size_t> permutation(std::size_t n);

  Array normal_array(const Shape& shape, double stddev = 1.0);
  Array uniform_array(const Shape& shape, double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sflow::numkit
