#pragma once

#include "contactrom/common.hpp"
#include "contactrom/coupling.hpp"
#include "contactrom/reduced_model.hpp"
#include "contactrom/snapshots.hpp"
#include "contactrom/spd_lsq.hpp"

#include <optional>
#include <sstream>

namespace contactrom {

struct InferredOperators {
  Matrix m;
  Matrix k;
  SpdLsqDiagnostics diagnostics;
};

namespace detail {

inline SpdLsqProblem make_problem(const Matrix& q, const Matrix& q_ddot, const Matrix& f) {
  require(q.rows() == q_ddot.rows() && q.rows() == f.rows(),
          "reduced training data must share the row dimension");
  require(q.cols() == q_ddot.cols() && q.cols() == f.cols(),
          "reduced training data must share the column count (trim endpoints consistently)");
  SpdLsqProblem problem;
  problem.data.resize(q.cols(), 2 * q.rows());
  problem.data << q_ddot.transpose(), q.transpose();
  problem.rhs = f.transpose();
  return problem;
}

inline double resolve_margin(std::optional<double> margin, const SpdLsqProblem& problem) {
  if (margin) {
    require(*margin > 0.0, "SPD margin must be positive");
    return *margin;
  }
  return default_spd_margin(problem.data, problem.rhs);
}

}  // namespace detail

/// Fits the interior subsystem operators from the fixed-boundary run.
inline InferredOperators infer_interior(const Matrix& q_reduced, const Matrix& q_ddot_reduced,
                                        const Matrix& f_reduced,
                                        std::optional<double> margin = std::nullopt,
                                        const SpdLsqOptions& options = {}) {
  SpdLsqProblem problem = detail::make_problem(q_reduced, q_ddot_reduced, f_reduced);
  problem.margin = detail::resolve_margin(margin, problem);
  SpdLsqResult result = solve_spd_lsq(problem, options);
  return {std::move(result.m), std::move(result.k), result.diagnostics};
}

/// Projects the fixed-boundary run onto V_I and fits (M_II^(1), K_II^(1)).
inline InferredOperators infer_interior(const SnapshotSet& snapshots, const Matrix& interior_basis,
                                        std::optional<double> margin = std::nullopt,
                                        const SpdLsqOptions& options = {}) {
  const Matrix q = interior_basis.transpose() * snapshots.q_fixed;
  const Matrix f = interior_basis.transpose() * snapshots.f_fixed;
  return infer_interior(trim_endpoints(q), second_derivatives(q, snapshots.h), trim_endpoints(f),
                        margin, options);
}

/// Final reduced operators with the interior blocks pinned to the
/// separately inferred interior operators.
inline InferredOperators infer_global(const ReducedTrainingData& training,
                                      const Matrix& m_interior_target,
                                      const Matrix& k_interior_target,
                                      std::optional<double> margin = std::nullopt,
                                      const SpdLsqOptions& options = {}) {
  SpdLsqProblem problem = detail::make_problem(training.q, training.q_ddot, training.f);
  const Index n = training.q.rows();
  const Index r = m_interior_target.rows();
  detail::require(r >= 1 && r < n, "interior target size " + std::to_string(r) +
                                        " incompatible with reduced dimension " +
                                        std::to_string(n));
  problem.fixed_block = BlockEquality{n - r, m_interior_target, k_interior_target};
  problem.margin = detail::resolve_margin(margin, problem);
  SpdLsqResult result = solve_spd_lsq(problem, options);
  return {std::move(result.m), std::move(result.k), result.diagnostics};
}

inline std::string format_diagnostics(const SpdLsqDiagnostics& d) {
  std::ostringstream out;
  out.precision(17);
  out << "objective = " << d.objective << "\n"
      << "initial_objective = " << d.initial_objective << "\n"
      << "unconstrained_objective = " << d.unconstrained_objective << "\n"
      << "gap_bound = " << d.gap_bound << "\n"
      << "feasibility_residual = " << d.feasibility_residual << "\n"
      << "newton_decrement = " << d.newton_decrement << "\n"
      << "iterations = " << d.iterations << "\n"
      << "barrier_stages = " << d.barrier_stages << "\n"
      << "epsilon = " << d.margin << "\n"
      << "data_rank = " << d.data_rank << "\n"
      << "unknowns = " << d.unknowns << "\n"
      << "rank_warning = " << (d.rank_warning ? "true" : "false") << "\n"
      << "ridge_applied = " << (d.ridge_applied ? "true" : "false") << "\n"
      << "unconstrained_feasible = " << (d.unconstrained_feasible ? "true" : "false") << "\n"
      << "degenerate = " << (d.degenerate ? "true" : "false") << "\n";
  return out.str();
}

struct InferenceReport {
  InferredOperators interior;
  InferredOperators global;
  CouplingMatrix coupling;
  PodBasis interior_basis;
};

/// Non-intrusive substructured inference from the two contact-free runs:
/// interior basis and operators, global basis, reduced data, final fit.
inline ReducedModel infer_reduced_model(const SnapshotSet& snapshots, const CouplingMatrix& coupling,
                                        const PodTruncation& truncation,
                                        const ContactConstraints& constraints,
                                        std::optional<double> margin = std::nullopt,
                                        InferenceReport* report = nullptr,
                                        const SpdLsqOptions& options = {}) {
  const PodBasis basis = pod(snapshots.q_fixed, truncation);
  const InferredOperators interior = infer_interior(snapshots, basis.basis, margin, options);
  const ReducedTrainingData training = reduce_training_data(snapshots, basis.basis, coupling.phi);
  const double eps = margin ? *margin : interior.diagnostics.margin;
  const InferredOperators global = infer_global(training, interior.m, interior.k, eps, options);

  ReducedModel model;
  model.m_hat = global.m;
  model.k_hat = global.k;
  model.interior_basis = basis.basis;
  model.coupling = coupling.phi;
  model.global_basis = assemble_global_basis(coupling.phi, basis.basis);
  model.constraints = constraints;
  model.spd_margin = eps;
  model.provenance["method"] = "substructured-operator-inference";
  model.provenance["coupling"] = to_string(coupling.method);
  model.provenance["rank"] = std::to_string(basis.rank);
  {
    std::ostringstream value;
    value.precision(17);
    value << coupling.residual;
    model.provenance["coupling_residual"] = value.str();
  }
  if (report) *report = {interior, global, coupling, basis};
  return model;
}

}  // namespace contactrom
