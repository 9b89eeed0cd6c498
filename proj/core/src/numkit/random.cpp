#include "sflow/numkit/random.hpp"

#include <numeric>
#include <utility>

namespace sflow::numkit {

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Fisher-Yates
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

Array Rng::normal_array(const Shape& shape, double stddev) {
  Array out(shape);
  for (auto& v : out.values()) v = normal(0.0, stddev);
  return out;
}

Array Rng::uniform_array(const Shape& shape, double lo, double hi) {
  Array out(shape);
  for (auto& v : out.values()) v = uniform(lo, hi);
  return out;
}

}  // namespace sflow::numkit
