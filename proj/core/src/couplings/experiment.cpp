#include "sflow/couplings/experiment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sflow::couplings {

std::vector<Array> initial_centers(const CouplingLabConfig& config) {
  return {Array::vector({0.0, 0.0}), Array::vector({0.0, config.side})};
}

std::vector<Array> target_centers(const CouplingLabConfig& config) {
  return {Array::vector({config.side, 0.0}), Array::vector({config.side, config.side})};
}

namespace {

std::size_t nearest(const std::vector<Array>& centers, const Array& p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double d = numkit::l2_norm(p - centers[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double min_pairwise_distance(const std::vector<Array>& centers) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) best = std::min(best, numkit::l2_norm(centers[i] - centers[j]));
  return best;
}

}  // namespace

CouplingSet build_lab_coupling(const CouplingLabConfig& config, CouplingKind kind) {
  const auto sources = initial_centers(config);
  const auto sinks = target_centers(config);
  const auto targets = two_cluster_dataset({sinks, config.per_cluster, config.sigma, config.seed});
  const std::uint64_t coupling_seed = config.seed + 1;

  if (kind == CouplingKind::kRepetitive) {
    const double sigma = config.sigma;
    auto sampler = [sources, sigma](Rng& rng) {
      const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sources.size() - 1)));
      Array p = sources[k];
      for (auto& v : p.values()) v += rng.normal(0.0, sigma);
      return p;
    };
    return repetitive_coupling(targets, sampler, coupling_seed);
  }

  const double shrink = config.coarse_shrink;
  auto coarse = [sources, sinks, shrink](const Array& target) {
    const std::size_t k = nearest(sinks, target);
    return sources[k] + (target - sinks[k]) * shrink;
  };
  return independent_coupling(targets, coarse, config.jitter, coupling_seed);
}

CouplingLabResult run_coupling_lab(const CouplingLabConfig& config, const std::vector<CouplingKind>& kinds) {
  if (config.eval_nfe == 0) throw std::invalid_argument("coupling lab: eval_nfe must be positive");
  CouplingLabResult result;
  result.eps = 0.5 * min_pairwise_distance(target_centers(config));

  for (CouplingKind kind : kinds) {
    CouplingRun run;
    run.kind = kind;
    run.coupling = build_lab_coupling(config, kind);
    // Same initialization and minibatch stream for every kind.
    run.field = std::make_unique<MlpField>(2, config.hidden_width, config.hidden_layers, config.seed + 2);
    FmTrainConfig train{config.train_steps, config.batch, config.peak_lr, config.warmup_steps, 0.0, config.seed + 3};
    run.losses = train_flow_matching(*run.field, run.coupling, train);

    const Array starts = stack_rows(run.coupling.initials);
    const auto solve = flowcore::euler_solve(*run.field, starts, config.eval_nfe);
    auto per_sample = flowcore::split_rows(solve);

    double straight = 0.0;
    for (const auto& tr : per_sample) straight += flowcore::straightness_error(tr);
    run.metrics.mean_straightness = straight / static_cast<double>(per_sample.size());
    run.metrics.transport_consistency =
        transport_consistency(unstack_rows(solve.endpoint()), run.coupling, result.eps);
    run.metrics.crossings = crossing_count(run.coupling);
    for (std::size_t nfe : config.nfe_list) {
      run.metrics.nfe_drift[nfe] = nfe_drift(*run.field, starts, {}, nfe, config.eval_nfe);
    }
    run.metrics.final_loss = run.losses.empty() ? 0.0 : run.losses.back();

    const std::size_t keep = std::min(per_sample.size(), config.trajectory_samples);
    for (std::size_t i = 0; i < keep; ++i) run.trajectories.push_back(per_sample[i * per_sample.size() / keep]);
    result.runs.push_back(std::move(run));
  }
  return result;
}

}  // namespace sflow::couplings
