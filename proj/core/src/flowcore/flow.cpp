#include "sflow/flowcore/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sflow/numkit/ops.hpp"
#include "sflow/numkit/text.hpp"

namespace sflow::flowcore {

namespace {

void require_unit_time(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument(std::string(what) + ": t=" + numkit::format_double(t) + " outside [0, 1]");
  }
}

}  // namespace

Array interpolate(const Array& h0, const Array& h1, double t) {
  numkit::require_same_shape(h0, h1, "interpolate");
  require_unit_time(t, "interpolate");
  Array out(h0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t * h1[i] + (1.0 - t) * h0[i];
  return out;
}

Array target_direction(const Array& h0, const Array& h1) {
  numkit::require_same_shape(h0, h1, "target_direction");
  return h1 - h0;
}

double fm_loss(const Array& predicted, const Array& h0, const Array& h1) {
  numkit::require_same_shape(h0, h1, "fm_loss");
  numkit::require_same_shape(predicted, h0, "fm_loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double r = h1[i] - h0[i] - predicted[i];
    acc += r * r;
  }
  return acc / static_cast<double>(predicted.size());
}

TrainingPoint make_training_point(const Array& f2, const Array& f3, double t, Rng& rng, bool noise_enabled) {
  numkit::require_same_shape(f2, f3, "make_training_point");
  require_unit_time(t, "make_training_point");
  TrainingPoint point;
  point.t = t;
  point.noise = noise_enabled ? rng.normal_array(f2.shape()) : Array(f2.shape(), 0.0);
  const Array start = f2 + point.noise;
  point.h_prime_t = interpolate(start, f3, t);
  point.target = target_direction(start, f3);
  return point;
}

Trajectory euler_solve(const FlowField& field, const Array& h0, std::size_t nfe, const Conditioning& cond) {
  if (nfe == 0) throw std::invalid_argument("euler_solve: nfe must be at least 1");
  Trajectory traj;
  traj.nfe = nfe;
  traj.points.reserve(nfe + 1);
  traj.points.push_back({0.0, h0});
  const double dt = 1.0 / static_cast<double>(nfe);
  Array state = h0;
  for (std::size_t k = 0; k < nfe; ++k) {
    const double t = static_cast<double>(k) * dt;
    Array dir = field.direction(state, t, cond);
    numkit::require_same_shape(dir, state, "euler_solve(field output)");
    for (std::size_t i = 0; i < state.size(); ++i) state[i] += dt * dir[i];
    if (!state.all_finite()) {
      throw numkit::NumericError("euler_solve: non-finite state at step " + std::to_string(k + 1) + " of " +
                                 std::to_string(nfe));
    }
    // k+1 == nfe lands exactly on 1 without accumulated rounding.
    traj.points.push_back({k + 1 == nfe ? 1.0 : static_cast<double>(k + 1) * dt, state});
  }
  return traj;
}

double straightness_error(const Trajectory& traj) {
  const auto& pts = traj.points;
  if (pts.size() < 2) throw std::invalid_argument("straightness_error: need at least 2 points");
  const Array& a = pts.front().state;
  const Array chord = pts.back().state - a;
  const double chord_len = numkit::l2_norm(chord);

  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const Array rel = pts[k].state - a;
    if (chord_len < 1e-9) {
      worst = std::max(worst, numkit::l2_norm(rel));
      continue;
    }
    double along = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) along += rel[i] * chord[i];
    along /= chord_len * chord_len;
    double perp = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      const double d = rel[i] - along * chord[i];
      perp += d * d;
    }
    worst = std::max(worst, std::sqrt(perp));
  }
  return chord_len < 1e-9 ? worst : worst / chord_len;
}

std::vector<Trajectory> split_rows(const Trajectory& batch) {
  const Array& first = batch.start();
  if (first.rank() != 2) throw std::invalid_argument("split_rows: batch states must be rank 2");
  const std::size_t rows = first.rows(), cols = first.cols();
  std::vector<Trajectory> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r].nfe = batch.nfe;
    out[r].points.reserve(batch.points.size());
    for (const auto& p : batch.points) {
      std::vector<double> row(p.state.values().begin() + static_cast<std::ptrdiff_t>(r * cols),
                              p.state.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
      out[r].points.push_back({p.t, Array({cols}, std::move(row))});
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  std::size_t dims = 0;
  for (const auto& tr : trajectories)
    if (!tr.points.empty()) dims = std::max(dims, tr.points.front().state.size());
  out << "sample_id,step,t";
  for (std::size_t d = 0; d < dims; ++d) out << ",dim_" << d;
  out << '\n';
  for (std::size_t s = 0; s < trajectories.size(); ++s) {
    const auto& pts = trajectories[s].points;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      out << s << ',' << k << ',' << numkit::format_double(pts[k].t);
      for (double v : pts[k].state.data()) out << ',' << numkit::format_double(v);
      out << '\n';
    }
  }
}

namespace graph {

Var interpolate(Var h0, Var h1, double t) {
  require_unit_time(t, "interpolate");
  return numkit::ops::add(numkit::ops::scale(h1, t), numkit::ops::scale(h0, 1.0 - t));
}

Var target_direction(Var h0, Var h1) { return numkit::ops::sub(h1, h0); }

Var fm_loss(Var predicted, Var h0, Var h1, const std::optional<Array>& row_weights) {
  numkit::require_same_shape(predicted.value(), h0.value(), "fm_loss");
  numkit::require_same_shape(h0.value(), h1.value(), "fm_loss");
  Var residual = numkit::ops::sub(target_direction(h0, h1), predicted);
  Var sq = numkit::ops::square(residual);
  if (!row_weights) return numkit::ops::mean(sq);

  const Array& value = predicted.value();
  const std::size_t rows = value.rows(), cols = value.cols();
  if (row_weights->size() != rows) throw std::invalid_argument("fm_loss: row weight count does not match rows");
  Array mask(value.shape(), 0.0);
  double selected = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double w = (*row_weights)[r];
    selected += w;
    for (std::size_t c = 0; c < cols; ++c) mask.at(r, c) = w;
  }
  if (selected <= 0.0) throw std::invalid_argument("fm_loss: row weights select nothing");
  Var masked = numkit::ops::mul(sq, predicted.tape()->constant(std::move(mask)));
  return numkit::ops::scale(numkit::ops::sum(masked), 1.0 / (selected * static_cast<double>(cols)));
}

}  // namespace graph

}  // namespace sflow::flowcore
