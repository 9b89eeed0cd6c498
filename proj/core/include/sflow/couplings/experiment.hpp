#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "sflow/couplings/couplings.hpp"
#include "sflow/couplings/mlp_field.hpp"
#include "sflow/flowcore/flow.hpp"

namespace sflow::couplings {

/// Two initial clusters on the left edge of a square, two target clusters on
/// the right edge. The independent variant maps each target back onto the
/// initial cluster on its own row, shrunk toward that cluster's center.
struct CouplingLabConfig {
  std::uint64_t seed = 7;
  double side = 4.0;
  double sigma = 0.1;
  std::size_t per_cluster = 256;
  double coarse_shrink = 0.5;
  double jitter = 0.05;
  std::size_t hidden_width = 64;
  std::size_t hidden_layers = 3;
  std::size_t train_steps = 2000;
  std::size_t batch = 256;
  double peak_lr = 2e-3;
  std::uint64_t warmup_steps = 100;
  std::size_t eval_nfe = 128;
  std::vector<std::size_t> nfe_list = {2, 4, 8, 32, 128};
  std::size_t trajectory_samples = 32;
};

struct CouplingMetrics {
  double mean_straightness = 0.0;
  double transport_consistency = 0.0;
  std::size_t crossings = 0;
  std::map<std::size_t, double> nfe_drift;  // nfe -> drift against eval_nfe
  double final_loss = 0.0;
};

struct CouplingRun {
  CouplingKind kind = CouplingKind::kRepetitive;
  CouplingSet coupling;
  std::unique_ptr<MlpField> field;
  std::vector<double> losses;
  CouplingMetrics metrics;
  std::vector<flowcore::Trajectory> trajectories;  // evenly spaced subset at eval_nfe
};

struct CouplingLabResult {
  double eps = 0.0;  // half the minimum inter-cluster distance of the targets
  std::vector<CouplingRun> runs;
};

std::vector<Array> initial_centers(const CouplingLabConfig& config);
std::vector<Array> target_centers(const CouplingLabConfig& config);

/// Builds the coupling of the given kind over the default targets.
CouplingSet build_lab_coupling(const CouplingLabConfig& config, CouplingKind kind);

/// Trains one field per kind with identical seeds and budget, then evaluates
/// straightness, transport consistency, crossings and NFE drift.
CouplingLabResult run_coupling_lab(const CouplingLabConfig& config, const std::vector<CouplingKind>& kinds);

}  // namespace sflow::couplings
