#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sflow/numkit/array.hpp"
#include "sflow/numkit/autodiff.hpp"
#include "sflow/numkit/random.hpp"

namespace sflow::flowcore {

using numkit::Array;
using numkit::Rng;
using numkit::Var;

/// Extra inputs a direction estimator may consume besides the state and time.
using Conditioning = std::vector<Array>;

/// Direction estimator: (state, t, conditioning) -> direction of the state's shape.
class FlowField {
 public:
  virtual ~FlowField() = default;
  virtual Array direction(const Array& state, double t, const Conditioning& cond) const = 0;
};

/// Adapts a callable into a FlowField.
class LambdaField final : public FlowField {
 public:
  using Fn = std::function<Array(const Array&, double, const Conditioning&)>;
  explicit LambdaField(Fn fn) : fn_(std::move(fn)) {}
  Array direction(const Array& state, double t, const Conditioning& cond) const override {
    return fn_(state, t, cond);
  }

 private:
  Fn fn_;
};

struct TrajectoryPoint {
  double t = 0.0;
  Array state;
};

/// Output of a reverse solve: nfe + 1 points with t strictly increasing from 0 to 1.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::size_t nfe = 0;

  const Array& start() const { return points.front().state; }
  const Array& endpoint() const { return points.back().state; }
};

/// Regression sample for flow matching with a (possibly noised) coarse start.
struct TrainingPoint {
  Array h_prime_t;  // interpolated state
  Array target;     // non-causal direction
  Array noise;      // xi; all zeros when noise is disabled
  double t = 0.0;
};

/// t * h1 + (1 - t) * h0.
Array interpolate(const Array& h0, const Array& h1, double t);

/// h1 - h0; independent of t.
Array target_direction(const Array& h0, const Array& h1);

/// Mean over elements of (h1 - h0 - predicted)^2.
double fm_loss(const Array& predicted, const Array& h0, const Array& h1);

/// Start = f2 + xi (xi ~ N(0, I) when enabled, else 0); returns the
/// interpolant toward f3 at t and the direction f3 - start.
TrainingPoint make_training_point(const Array& f2, const Array& f3, double t, Rng& rng, bool noise_enabled);

/// Fixed-step Euler integration of `field` from t = 0 to t = 1 in `nfe` steps.
/// Throws numkit::NumericError naming the step when the state goes non-finite.
Trajectory euler_solve(const FlowField& field, const Array& h0, std::size_t nfe, const Conditioning& cond = {});

/// Max perpendicular distance of interior points from the first-to-last chord,
/// divided by the chord length. Falls back to the max raw distance from the
/// start point when the chord is shorter than 1e-9.
double straightness_error(const Trajectory& traj);

/// Splits a solve over a batch (rows = samples) into one trajectory per row.
std::vector<Trajectory> split_rows(const Trajectory& batch);

/// CSV: sample_id,step,t,dim_0..dim_{D-1}; one trajectory per sample, states flattened.
void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trajectories);

// Graph versions used when the endpoints are themselves trainable.
namespace graph {

Var interpolate(Var h0, Var h1, double t);
Var target_direction(Var h0, Var h1);
/// Flow-matching loss. With `row_weights` ([rows] of 0/1), only selected rows
/// contribute and the mean is taken over selected elements.
Var fm_loss(Var predicted, Var h0, Var h1, const std::optional<Array>& row_weights = std::nullopt);

}  // namespace graph

}  // namespace sflow::flowcore
