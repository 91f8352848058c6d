#include "maploc/graph.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "maploc/error.hpp"

namespace maploc {

std::size_t FactorGraph::add_state(const StateNode& node) {
  states_.push_back(node);
  return states_.size() - 1;
}

std::size_t FactorGraph::add_factor(Factor factor) {
  for (const std::size_t s : factor.states) {
    if (s >= states_.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "factor references state " + std::to_string(s) + " of " +
                                                   std::to_string(states_.size()));
    }
  }
  factors_.push_back(std::move(factor));
  return factors_.size() - 1;
}

bool FactorGraph::anchored() const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [](const Factor& f) { return f.kind() == FactorKind::kPrior; });
}

double FactorGraph::cost() const { return cost(states_, gravity_); }

double FactorGraph::cost(const std::vector<StateNode>& states, const Eigen::Vector3d& gravity) const {
  double total = 0.0;
  for (const auto& f : factors_) {
    const Linearization lin = f.linearize(states, gravity);
    total += 0.5 * lin.residual.dot(f.information * lin.residual);
  }
  return total;
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Layout {
  std::size_t first_free = 0;
  std::size_t free_states = 0;
  bool gravity = false;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(free_states * kStateDim + (gravity ? 3 : 0));
  }
  // -1 when the block is held fixed.
  Eigen::Index offset(const JacobianBlock& jb) const {
    if (jb.block == Block::kGravity) {
      return gravity ? static_cast<Eigen::Index>(free_states * kStateDim) : -1;
    }
    if (jb.state < first_free) return -1;
    return static_cast<Eigen::Index>((jb.state - first_free) * kStateDim + block_offset(jb.block));
  }
  std::size_t state_of(Eigen::Index column) const {
    const auto c = static_cast<std::size_t>(column);
    if (c >= free_states * kStateDim) return std::numeric_limits<std::size_t>::max();
    return first_free + c / kStateDim;
  }
};

struct System {
  SparseMatrix hessian;
  Eigen::VectorXd gradient;
};

System build_system(const FactorGraph& graph, const Layout& layout) {
  const Eigen::Index n = layout.size();
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(n);

  for (const auto& f : graph.factors()) {
    const Linearization lin = f.linearize(graph.states(), graph.gravity());
    const Eigen::VectorXd weighted = f.information * lin.residual;
    std::vector<std::pair<Eigen::Index, Eigen::MatrixXd>> blocks;
    for (const auto& jb : lin.jacobians) {
      const Eigen::Index off = layout.offset(jb);
      if (off < 0) continue;
      gradient.segment(off, jb.jacobian.cols()) += jb.jacobian.transpose() * weighted;
      blocks.emplace_back(off, f.information * jb.jacobian);
    }
    for (const auto& jb_a : lin.jacobians) {
      const Eigen::Index off_a = layout.offset(jb_a);
      if (off_a < 0) continue;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        const Eigen::Index off_b = blocks[k].first;
        const Eigen::MatrixXd block = jb_a.jacobian.transpose() * blocks[k].second;
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          for (Eigen::Index c = 0; c < block.cols(); ++c) {
            if (off_a + r >= off_b + c) {
              triplets.emplace_back(off_a + r, off_b + c, block(r, c));
            }
          }
        }
      }
    }
  }
  System sys;
  sys.hessian.resize(n, n);
  sys.hessian.setFromTriplets(triplets.begin(), triplets.end());
  sys.gradient = std::move(gradient);
  return sys;
}

void apply_step(const Layout& layout, const Eigen::VectorXd& delta, std::vector<StateNode>& states,
                Eigen::Vector3d& gravity) {
  for (std::size_t s = 0; s < layout.free_states; ++s) {
    const auto off = static_cast<Eigen::Index>(s * kStateDim);
    StateNode& node = states[layout.first_free + s];
    node.pose = retract(node.pose, delta.segment<6>(off));
    node.velocity += delta.segment<3>(off + 6);
    node.accel_bias += delta.segment<3>(off + 9);
    node.gyro_bias += delta.segment<3>(off + 12);
  }
  if (layout.gravity) gravity += delta.tail<3>();
}

}  // namespace

OptimizeResult optimize(FactorGraph& graph, const OptimizerParams& params, std::size_t first_free) {
  if (!graph.anchored()) throw Error(ErrorCode::kNotAnchored, "graph has no prior factor");

  Layout layout;
  layout.first_free = std::min(first_free, graph.states().size());
  layout.free_states = graph.states().size() - layout.first_free;
  layout.gravity = params.optimize_gravity &&
                   std::any_of(graph.factors().begin(), graph.factors().end(), [](const Factor& f) {
                     return f.kind() == FactorKind::kImu || f.kind() == FactorKind::kGravity;
                   });

  OptimizeResult result;
  double cost = graph.cost();
  result.initial_cost = cost;
  double damping = params.initial_damping;
  int iteration = 0;

  if (layout.size() > 0) {
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> solver;
    bool done = false;
    while (!done && iteration < params.max_iterations && cost > 0.0) {
      const System sys = build_system(graph, layout);
      Eigen::VectorXd diag = sys.hessian.diagonal();
      for (Eigen::Index i = 0; i < diag.size(); ++i) diag[i] = std::max(diag[i], 1e-6);

      // Inner loop: raise damping until a step lowers the cost.
      while (iteration < params.max_iterations) {
        ++iteration;
        SparseMatrix damped = sys.hessian;
        for (Eigen::Index i = 0; i < diag.size(); ++i) damped.coeffRef(i, i) += damping * diag[i];
        solver.compute(damped);
        if (solver.info() != Eigen::Success) {
          throw SingularSystemError("normal equations not factorizable", layout.first_free);
        }
        const Eigen::VectorXd& d = solver.vectorD();
        Eigen::Index worst = 0;
        if (d.minCoeff(&worst) <= 0.0) {
          const Eigen::Index column = solver.permutationPinv().indices()[worst];
          throw SingularSystemError("damped normal equations are not positive definite",
                                    layout.state_of(column));
        }
        const Eigen::VectorXd delta = solver.solve(-sys.gradient);
        if (!delta.allFinite()) {
          throw SingularSystemError("non-finite update", layout.first_free);
        }

        std::vector<StateNode> cand_states = graph.states();
        Eigen::Vector3d cand_gravity = graph.gravity();
        apply_step(layout, delta, cand_states, cand_gravity);
        const double cand_cost = graph.cost(cand_states, cand_gravity);

        IterationRecord rec;
        rec.iteration = iteration;
        rec.damping = damping;
        rec.step_norm = delta.norm();
        rec.cost = cand_cost;
        rec.accepted = cand_cost <= cost;
        result.log.push_back(rec);

        if (rec.accepted) {
          const double decrease = cost - cand_cost;
          graph.mutable_states() = std::move(cand_states);
          graph.set_gravity(cand_gravity);
          damping = std::max(damping * params.damping_down, params.min_damping);
          if (cand_cost <= 0.0 || decrease <= params.relative_tolerance * cost) done = true;
          cost = cand_cost;
          break;
        }
        if (damping >= params.max_damping) {
          done = true;
          break;
        }
        damping = std::min(damping * params.damping_up, params.max_damping);
      }
    }
  }

  result.states = graph.states();
  result.gravity = graph.gravity();
  result.final_cost = cost;
  return result;
}

OptimizeResult solve_incremental(FactorGraph& graph, const StateNode& new_state,
                                 std::vector<Factor> new_factors, std::size_t window,
                                 const OptimizerParams& params) {
  graph.add_state(new_state);
  for (auto& f : new_factors) graph.add_factor(std::move(f));
  const std::size_t n = graph.states().size();
  const std::size_t first_free = (window == 0 || window >= n) ? 0 : n - window;
  return optimize(graph, params, first_free);
}

void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << "iteration,cost,damping,step_norm,accepted\n";
  for (const auto& r : log) {
    os << r.iteration << ',' << r.cost << ',' << r.damping << ',' << r.step_norm << ','
       << (r.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace maploc
