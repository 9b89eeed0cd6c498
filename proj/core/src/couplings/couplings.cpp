#include "sflow/couplings/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sflow::couplings {

const char* to_string(CouplingKind kind) {
  return kind == CouplingKind::kRepetitive ? "repetitive" : "independent";
}

std::vector<Array> two_cluster_dataset(const ClusterSpec& spec) {
  if (spec.centers.empty()) throw std::invalid_argument("ClusterSpec needs at least one center");
  if (spec.sigma < 0.0) throw std::invalid_argument("ClusterSpec sigma must be non-negative");
  Rng rng(spec.seed);
  std::vector<Array> points;
  points.reserve(spec.centers.size() * spec.per_cluster);
  for (const auto& c : spec.centers) {
    for (std::size_t i = 0; i < spec.per_cluster; ++i) {
      Array p = c;
      if (spec.sigma > 0.0)
        for (auto& v : p.values()) v += rng.normal(0.0, spec.sigma);
      points.push_back(std::move(p));
    }
  }
  return points;
}

CouplingSet repetitive_coupling(const std::vector<Array>& targets, const InitialSampler& initial_sampler,
                                std::uint64_t seed) {
  if (targets.empty()) throw std::invalid_argument("repetitive_coupling: no targets");
  Rng rng(seed);
  CouplingSet set;
  set.kind = CouplingKind::kRepetitive;
  set.targets = targets;
  set.initials.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) set.initials.push_back(initial_sampler(rng));
  set.pairing = rng.permutation(targets.size());
  return set;
}

CouplingSet independent_coupling(const std::vector<Array>& targets, const CoarseMap& coarse_map, double jitter_sigma,
                                 std::uint64_t seed) {
  Rng rng(seed);
  CouplingSet set;
  set.kind = CouplingKind::kIndependent;
  set.targets = targets;
  set.pairing.resize(targets.size());
  std::iota(set.pairing.begin(), set.pairing.end(), std::size_t{0});
  set.initials.reserve(targets.size());
  for (const auto& target : targets) {
    Array init = coarse_map(target);
    numkit::require_same_shape(init, target, "independent_coupling(coarse_map)");
    if (jitter_sigma > 0.0)
      for (auto& v : init.values()) v += rng.normal(0.0, jitter_sigma);
    set.initials.push_back(std::move(init));
  }
  return set;
}

namespace {

double orient(const Array& a, const Array& b, const Array& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

bool on_segment(const Array& a, const Array& b, const Array& p) {
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
         p[1] <= std::max(a[1], b[1]);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

bool segments_intersect(const Array& p1, const Array& p2, const Array& q1, const Array& q2) {
  const int d1 = sign(orient(q1, q2, p1));
  const int d2 = sign(orient(q1, q2, p2));
  const int d3 = sign(orient(p1, p2, q1));
  const int d4 = sign(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

std::size_t crossing_count(const CouplingSet& coupling) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < coupling.size(); ++i) {
    for (std::size_t j = i + 1; j < coupling.size(); ++j) {
      if (segments_intersect(coupling.initials[i], coupling.intended_target(i), coupling.initials[j],
                             coupling.intended_target(j))) {
        ++count;
      }
    }
  }
  return count;
}

double transport_consistency(const std::vector<Array>& endpoints, const CouplingSet& coupling, double eps) {
  if (endpoints.size() != coupling.size()) {
    throw std::invalid_argument("transport_consistency: " + std::to_string(endpoints.size()) + " endpoints for " +
                                std::to_string(coupling.size()) + " coupling pairs");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("transport_consistency: eps must be positive");
  if (endpoints.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if (numkit::l2_norm(endpoints[i] - coupling.intended_target(i)) <= eps) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(endpoints.size());
}

double nfe_drift(const flowcore::FlowField& field, const Array& initials, const flowcore::Conditioning& cond,
                 std::size_t nfe_lo, std::size_t nfe_hi) {
  const Array lo = flowcore::euler_solve(field, initials, nfe_lo, cond).endpoint();
  const Array hi = nfe_lo == nfe_hi ? lo : flowcore::euler_solve(field, initials, nfe_hi, cond).endpoint();
  const std::size_t rows = initials.rows(), cols = initials.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = lo.at(r, c) - hi.at(r, c);
      d2 += d * d;
    }
    total += std::sqrt(d2);
  }
  return total / static_cast<double>(rows);
}

Array stack_rows(const std::vector<Array>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("stack_rows: ragged rows");
    data.insert(data.end(), r.values().begin(), r.values().end());
  }
  return Array({rows.size(), cols}, std::move(data));
}

std::vector<Array> unstack_rows(const Array& matrix) {
  std::vector<Array> out;
  out.reserve(matrix.rows());
  const std::size_t cols = matrix.cols();
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out.emplace_back(numkit::Shape{cols},
                     std::vector<double>(matrix.values().begin() + static_cast<std::ptrdiff_t>(r * cols),
                                         matrix.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  }
  return out;
}

}  // namespace sflow::couplings
