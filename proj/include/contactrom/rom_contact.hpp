#pragma once

#include "contactrom/common.hpp"
#include "contactrom/lemke.hpp"
#include "contactrom/model.hpp"
#include "contactrom/reduced_model.hpp"
#include "contactrom/timestep.hpp"

#include <string>
#include <vector>

namespace contactrom {

namespace detail {

inline Matrix embed_contact_matrix(const Matrix& c_boundary, Index reduced_dim) {
  require(c_boundary.cols() <= reduced_dim, "contact matrix wider than the reduced state");
  Matrix c = Matrix::Zero(c_boundary.rows(), reduced_dim);
  c.leftCols(c_boundary.cols()) = c_boundary;
  return c;
}

}  // namespace detail

/// A_hat = h^2 C_B (M_hat + h^2 K_hat)^-1 C_B^T with C_B acting on the
/// boundary block of the reduced state.
inline Matrix assemble_lcp_matrix(const Matrix& m_hat, const Matrix& k_hat, const Matrix& c_boundary,
                                  double h) {
  detail::require(h > 0.0, "time step must be positive");
  detail::require(m_hat.rows() == k_hat.rows() && m_hat.cols() == k_hat.cols(),
                  "reduced mass and stiffness differ in size");
  const Matrix c = detail::embed_contact_matrix(c_boundary, m_hat.rows());
  const Eigen::LLT<Matrix> factor = detail::factor_step_matrix(m_hat, k_hat, h);
  return symmetrize(h * h * c * factor.solve(c.transpose()));
}

/// Holds one factorization of M_hat + h^2 K_hat and reuses it for every
/// right-hand side and update of a reduced contact run.
class ReducedContactStepper {
 public:
  ReducedContactStepper(const ReducedModel& model, double h) : model_(model), h_(h) {
    detail::require(h > 0.0, "time step must be positive");
    detail::require(model.m_hat.rows() == model.reduced_dim() && model.k_hat.rows() == model.reduced_dim(),
                    "reduced operators have inconsistent sizes");
    validate(model.constraints, model.n_boundary());
    c_ = detail::embed_contact_matrix(model.constraints.c_matrix, model.reduced_dim());
    factor_ = detail::factor_step_matrix(model.m_hat, model.k_hat, h);
    ++factorizations_;
    s_inv_ct_ = factor_.solve(c_.transpose());
    lcp_matrix_ = symmetrize(h * h * c_ * s_inv_ct_);
    ++lcp_matrix_assemblies_;
  }

  const Matrix& lcp_matrix() const { return lcp_matrix_; }
  int factorizations() const { return factorizations_; }
  int lcp_matrix_assemblies() const { return lcp_matrix_assemblies_; }

  /// Contact-free prediction (M_hat + h^2 K_hat)^-1 (h^2 f + 2 M q1 - M q2).
  Vector predict(const Vector& f_hat, const Vector& q_prev, const Vector& q_prev2) const {
    check_dims(f_hat, q_prev, q_prev2);
    const Vector rhs = h_ * h_ * f_hat + model_.m_hat * (2.0 * q_prev - q_prev2);
    return factor_.solve(rhs);
  }

  /// B_hat_i = C_B (prediction) + b.
  Vector lcp_rhs(const Vector& f_hat, const Vector& q_prev, const Vector& q_prev2) const {
    return c_ * predict(f_hat, q_prev, q_prev2) + model_.constraints.offsets;
  }

  /// Reduced update with the contact forces entering through C_B^T.
  Vector step(const Vector& f_hat, const Vector& q_prev, const Vector& q_prev2,
              const Vector& lambda) const {
    detail::require(lambda.size() == c_.rows(), "multiplier vector has the wrong length");
    detail::require(lambda.size() == 0 || lambda.minCoeff() >= 0.0,
                    "contact multipliers must be nonnegative");
    return predict(f_hat, q_prev, q_prev2) + h_ * h_ * (s_inv_ct_ * lambda);
  }

 private:
  void check_dims(const Vector& f, const Vector& q1, const Vector& q2) const {
    const Index n = model_.reduced_dim();
    detail::require(f.size() == n && q1.size() == n && q2.size() == n,
                    "reduced vectors must have length " + std::to_string(n));
  }

  const ReducedModel& model_;
  double h_;
  Matrix c_;
  Eigen::LLT<Matrix> factor_;
  Matrix s_inv_ct_;
  Matrix lcp_matrix_;
  int factorizations_ = 0;
  int lcp_matrix_assemblies_ = 0;
};

inline Vector assemble_lcp_rhs(const ReducedModel& model, double h, const Vector& f_hat,
                               const Vector& q_prev, const Vector& q_prev2) {
  return ReducedContactStepper(model, h).lcp_rhs(f_hat, q_prev, q_prev2);
}

inline Vector step_reduced(const ReducedModel& model, double h, const Vector& f_hat,
                           const Vector& q_prev, const Vector& q_prev2, const Vector& lambda) {
  return ReducedContactStepper(model, h).step(f_hat, q_prev, q_prev2, lambda);
}

struct RomContactResult {
  Trajectory reduced;  // q_hat, f_hat, lambda
  Trajectory lifted;   // V q_hat, f, lambda
  ContactRunStats stats;
};

/// Reduced dynamic contact run. Initial data is given in full-order
/// coordinates and reduced through the consistent inverse of the lifting.
inline RomContactResult simulate_contact_rom(const ReducedModel& model, const ForceSignal& force,
                                             const Vector& q0, const Vector& v0, double h,
                                             Index steps) {
  detail::check_step_args(h, steps);
  const Index n_full = model.global_basis.rows();
  detail::require(force.dimension == n_full, "force dimension does not match the full model");
  detail::require(q0.size() == n_full && v0.size() == n_full,
                  "initial data must be given in full-order coordinates");

  ReducedContactStepper stepper(model, h);
  const Index n = model.reduced_dim();
  const Index m = model.constraints.count();

  RomContactResult out;
  out.lifted.h = out.reduced.h = h;
  out.lifted.forces = detail::sample_forces(force, n_full, 0.0, h, steps);
  out.reduced.forces = model.global_basis.transpose() * out.lifted.forces;
  out.reduced.states.resize(n, steps + 1);
  out.reduced.multipliers = Matrix::Zero(m, steps + 1);
  out.reduced.states.col(0) = reduce_state(model, q0);
  out.reduced.states.col(1) = reduce_state(model, q0 + h * v0);
  out.stats.pivot_counts.assign(2, 0);

  for (Index j = 2; j <= steps; ++j) {
    const Vector f_hat = out.reduced.forces.col(j);
    const Vector q1 = out.reduced.states.col(j - 1);
    const Vector q2 = out.reduced.states.col(j - 2);
    LcpProblem lcp{stepper.lcp_matrix(), stepper.lcp_rhs(f_hat, q1, q2)};
    const LcpSolution solution = lemke_solve(lcp);
    if (solution.status != LcpStatus::solved)
      throw NumericalError("reduced contact LCP failed at step " + std::to_string(j) + ": " +
                           to_string(solution.status));
    out.stats.pivot_counts.push_back(solution.pivot_count);
    out.stats.max_complementarity =
        std::max(out.stats.max_complementarity, complementarity_residual(lcp, solution));
    out.reduced.multipliers->col(j) = solution.lambda;
    out.reduced.states.col(j) = stepper.step(f_hat, q1, q2, solution.lambda);
  }
  out.stats.factorizations = stepper.factorizations();
  out.stats.lcp_matrix_assemblies = stepper.lcp_matrix_assemblies();

  out.lifted.states = model.global_basis * out.reduced.states;
  out.lifted.multipliers = out.reduced.multipliers;
  return out;
}

/// Contact-free reduced run, lifted to full order.
inline Trajectory simulate_free_rom(const ReducedModel& model, const ForceSignal& force,
                                    const Vector& q0, const Vector& v0, double h, Index steps) {
  detail::check_step_args(h, steps);
  const Index n_full = model.global_basis.rows();
  detail::require(force.dimension == n_full, "force dimension does not match the full model");
  Trajectory out;
  out.h = h;
  out.forces = detail::sample_forces(force, n_full, 0.0, h, steps);
  const Matrix reduced_forces = model.global_basis.transpose() * out.forces;
  const Vector q0_hat = reduce_state(model, q0);
  const Vector q1_hat = reduce_state(model, q0 + h * v0);
  const Vector v0_hat = (q1_hat - q0_hat) / h;
  out.states = model.global_basis *
               detail::integrate(model.m_hat, model.k_hat, reduced_forces, q0_hat, v0_hat, h, {});
  return out;
}

}  // namespace contactrom
