#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "maploc/factors.hpp"

namespace maploc {

struct OptimizerParams {
  int max_iterations = 50;
  double relative_tolerance = 1e-9;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 0.5;
  double min_damping = 1e-9;
  double max_damping = 1e6;
  bool optimize_gravity = true;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;       // cost after the step (accepted) or the rejected candidate cost
  double damping = 0.0;    // damping used for this attempt
  double step_norm = 0.0;
  bool accepted = false;
};

struct OptimizeResult {
  std::vector<StateNode> states;
  Eigen::Vector3d gravity = Eigen::Vector3d::Zero();
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<IterationRecord> log;
};

/// States, typed factors and the shared gravity direction. Indices are stable for the graph's
/// lifetime.
class FactorGraph {
 public:
  std::size_t add_state(const StateNode& node);
  /// Throws Error(kIndexOutOfRange) if the factor references a missing state.
  std::size_t add_factor(Factor factor);

  const std::vector<StateNode>& states() const { return states_; }
  std::vector<StateNode>& mutable_states() { return states_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }
  void set_gravity(const Eigen::Vector3d& g) { gravity_ = g; }

  bool anchored() const;

  /// 0.5 * sum r^T Omega r
  double cost() const;
  double cost(const std::vector<StateNode>& states, const Eigen::Vector3d& gravity) const;

 private:
  std::vector<StateNode> states_;
  std::vector<Factor> factors_;
  Eigen::Vector3d gravity_{0.0, 0.0, -1.0};
};

/// Levenberg-Marquardt over the product manifold. States before `first_free` are held fixed.
/// Updates the graph in place and returns a snapshot. Throws Error(kNotAnchored) without a
/// prior factor and SingularSystemError when the damped system is not positive definite.
OptimizeResult optimize(FactorGraph& graph, const OptimizerParams& params, std::size_t first_free = 0);

/// Appends a state and its factors, then re-optimizes the newest `window` states with the
/// older ones fixed. window == 0 (or >= state count) runs the full batch.
OptimizeResult solve_incremental(FactorGraph& graph, const StateNode& new_state,
                                 std::vector<Factor> new_factors, std::size_t window,
                                 const OptimizerParams& params);

/// CSV iteration log: iteration,cost,damping,step_norm,accepted
void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log);

}  // namespace maploc
