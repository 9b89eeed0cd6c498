#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sflow/flowcore/flow.hpp"
#include "sflow/numkit/array.hpp"
#include "sflow/numkit/random.hpp"

namespace sflow::couplings {

using numkit::Array;
using numkit::Rng;

enum class CouplingKind { kRepetitive, kIndependent };

const char* to_string(CouplingKind kind);

/// initials[i] is meant to be transported to targets[pairing[i]].
struct CouplingSet {
  std::vector<Array> initials;
  std::vector<Array> targets;
  std::vector<std::size_t> pairing;
  CouplingKind kind = CouplingKind::kRepetitive;

  std::size_t size() const { return initials.size(); }
  const Array& intended_target(std::size_t i) const { return targets[pairing[i]]; }
};

struct ClusterSpec {
  std::vector<Array> centers;  // 2D points
  std::size_t per_cluster = 1;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian blobs, cluster-major order: points [k*per_cluster, (k+1)*per_cluster) belong to center k.
std::vector<Array> two_cluster_dataset(const ClusterSpec& spec);

using InitialSampler = std::function<Array(Rng&)>;
using CoarseMap = std::function<Array(const Array&)>;

/// Initials drawn from `initial_sampler` without looking at the targets;
/// pairing is a seeded random permutation.
CouplingSet repetitive_coupling(const std::vector<Array>& targets, const InitialSampler& initial_sampler,
                                std::uint64_t seed);

/// initial_i = coarse_map(target_i) + N(0, jitter_sigma^2); identity pairing.
CouplingSet independent_coupling(const std::vector<Array>& targets, const CoarseMap& coarse_map, double jitter_sigma,
                                 std::uint64_t seed);

/// True when closed 2D segments p1-p2 and q1-q2 share a point.
bool segments_intersect(const Array& p1, const Array& p2, const Array& q1, const Array& q2);

/// Number of unordered chord pairs (initial_i -> intended target) that intersect.
std::size_t crossing_count(const CouplingSet& coupling);

/// Fraction of endpoints within Euclidean distance eps of their intended target.
double transport_consistency(const std::vector<Array>& endpoints, const CouplingSet& coupling, double eps);

/// Mean over samples of |endpoint(nfe_lo) - endpoint(nfe_hi)|_2, each row of
/// `initials` solved independently of the others.
double nfe_drift(const flowcore::FlowField& field, const Array& initials, const flowcore::Conditioning& cond,
                 std::size_t nfe_lo, std::size_t nfe_hi);

/// Stacks equal-length vectors as the rows of a matrix.
Array stack_rows(const std::vector<Array>& rows);
std::vector<Array> unstack_rows(const Array& matrix);

}  // namespace sflow::couplings
