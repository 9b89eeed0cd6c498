#include <sstream>

#include "commands.hpp"
#include "sflow/couplings/experiment.hpp"
#include "sflow/numkit/svg.hpp"
#include "sflow/numkit/text.hpp"

namespace sflow::cli {

using numkit::format_double;
namespace svg = numkit::svg;

nlohmann::json coupling_lab_defaults() {
  const couplings::CouplingLabConfig d;
  return {{"seed", d.seed},
          {"coupling", "both"},
          {"side", d.side},
          {"sigma", d.sigma},
          {"per_cluster", d.per_cluster},
          {"coarse_shrink", d.coarse_shrink},
          {"jitter", d.jitter},
          {"hidden_width", d.hidden_width},
          {"hidden_layers", d.hidden_layers},
          {"steps", d.train_steps},
          {"batch", d.batch},
          {"peak_lr", d.peak_lr},
          {"warmup_steps", d.warmup_steps},
          {"eval_nfe", d.eval_nfe},
          {"nfe", d.nfe_list},
          {"trajectory_samples", d.trajectory_samples}};
}

int run_coupling_lab(const Settings& s, RunDir& dir, std::ostream& log) {
  couplings::CouplingLabConfig cfg;
  cfg.seed = s.u64("seed");
  cfg.side = s.real("side");
  cfg.sigma = s.real("sigma");
  cfg.per_cluster = s.size("per_cluster");
  cfg.coarse_shrink = s.real("coarse_shrink");
  cfg.jitter = s.real("jitter");
  cfg.hidden_width = s.size("hidden_width");
  cfg.hidden_layers = s.size("hidden_layers");
  cfg.train_steps = s.size("steps");
  cfg.batch = s.size("batch");
  cfg.peak_lr = s.real("peak_lr");
  cfg.warmup_steps = s.u64("warmup_steps");
  cfg.eval_nfe = s.size("eval_nfe");
  cfg.nfe_list = s.sizes("nfe");
  cfg.trajectory_samples = s.size("trajectory_samples");
  if (cfg.train_steps == 0 || cfg.batch == 0) throw UsageError("steps and batch must be positive");
  for (auto n : cfg.nfe_list)
    if (n == 0) throw UsageError("nfe values must be positive");

  std::vector<couplings::CouplingKind> kinds;
  const std::string which = s.text("coupling");
  if (which == "repetitive" || which == "both") kinds.push_back(couplings::CouplingKind::kRepetitive);
  if (which == "independent" || which == "both") kinds.push_back(couplings::CouplingKind::kIndependent);
  if (kinds.empty()) throw UsageError("coupling must be repetitive, independent or both");

  const auto result = couplings::run_coupling_lab(cfg, kinds);

  std::ostringstream metrics, losses, traj;
  metrics << "kind,mean_straightness,transport_consistency,crossings,final_loss";
  for (auto n : cfg.nfe_list) metrics << ",nfe_drift_" << n;
  metrics << '\n';
  losses << "kind,step,loss\n";
  traj << "kind,sample_id,step,t,x,y\n";
  std::vector<svg::Series> loss_series;
  for (const auto& run : result.runs) {
    const std::string kind = couplings::to_string(run.kind);
    const auto& m = run.metrics;
    metrics << kind << ',' << format_double(m.mean_straightness) << ',' << format_double(m.transport_consistency)
            << ',' << m.crossings << ',' << format_double(m.final_loss);
    for (auto n : cfg.nfe_list) metrics << ',' << format_double(m.nfe_drift.at(n));
    metrics << '\n';

    svg::Series ls{kind, {}, {}};
    for (std::size_t i = 0; i < run.losses.size(); ++i) {
      losses << kind << ',' << i << ',' << format_double(run.losses[i]) << '\n';
      ls.x.push_back(static_cast<double>(i));
      ls.y.push_back(run.losses[i]);
    }
    loss_series.push_back(std::move(ls));

    std::vector<svg::Series> paths;
    for (std::size_t k = 0; k < run.trajectories.size(); ++k) {
      svg::Series p{k == 0 ? "reverse trajectories" : "", {}, {}};
      const auto& pts = run.trajectories[k].points;
      for (std::size_t step = 0; step < pts.size(); ++step) {
        traj << kind << ',' << k << ',' << step << ',' << format_double(pts[step].t) << ','
             << format_double(pts[step].state[0]) << ',' << format_double(pts[step].state[1]) << '\n';
        p.x.push_back(pts[step].state[0]);
        p.y.push_back(pts[step].state[1]);
      }
      paths.push_back(std::move(p));
    }
    svg::Series starts{"initial", {}, {}}, targets{"target", {}, {}};
    for (const auto& a : run.coupling.initials) starts.x.push_back(a[0]), starts.y.push_back(a[1]);
    for (const auto& b : run.coupling.targets) targets.x.push_back(b[0]), targets.y.push_back(b[1]);
    dir.write_text("points_" + kind + ".svg",
                   svg::scatter_plot({kind + " coupling: samples", "x", "y"}, {starts, targets}));
    dir.write_text("trajectories_" + kind + ".svg",
                   svg::line_plot({kind + " coupling: solved paths, nfe " + std::to_string(cfg.eval_nfe), "x", "y"},
                                  paths));
    log << kind << ": straightness " << format_double(m.mean_straightness) << ", consistency "
        << format_double(m.transport_consistency) << ", crossings " << m.crossings << '\n';
  }
  dir.write_text("metrics.csv", metrics.str());
  dir.write_text("loss.csv", losses.str());
  dir.write_text("trajectories.csv", traj.str());
  dir.write_text("loss.svg", svg::line_plot({"flow-matching loss", "step", "loss", false, true}, loss_series));
  dir.write_json("summary.json", {{"eps", result.eps}});
  return 0;
}

}  // namespace sflow::cli
