#pragma once

#include "contactrom/common.hpp"
#include "contactrom/lemke.hpp"
#include "contactrom/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace contactrom {

/// States and loads on an equidistant grid t_j = t0 + j h, one column per step.
struct Trajectory {
  double t0 = 0.0;
  double h = 0.0;
  Matrix states;
  Matrix forces;
  std::optional<Matrix> multipliers;

  Index steps() const { return states.cols(); }
  Index dimension() const { return states.rows(); }
  double time(Index j) const { return t0 + double(j) * h; }
};

inline void validate(const Trajectory& trajectory) {
  detail::require(trajectory.h > 0.0, "trajectory step must be positive");
  detail::require(trajectory.states.cols() >= 3, "trajectory needs at least three time steps");
  detail::require(trajectory.forces.cols() == trajectory.states.cols() &&
                      trajectory.forces.rows() == trajectory.states.rows(),
                  "trajectory forces " + detail::dims(trajectory.forces) +
                      " do not match states " + detail::dims(trajectory.states));
  if (trajectory.multipliers) {
    detail::require(trajectory.multipliers->cols() == trajectory.states.cols(),
                    "multiplier history has the wrong number of steps");
    detail::require(trajectory.multipliers->size() == 0 || trajectory.multipliers->minCoeff() >= 0.0,
                    "negative Lagrange multiplier in trajectory");
  }
}

struct TimestepOptions {
  // Re-factorize M + h^2 K at every step instead of reusing one factorization.
  bool refactor_each_step = false;
};

namespace detail {

inline void check_step_args(double h, Index steps) {
  require(h > 0.0, "time step h must be positive");
  require(steps >= 2, "the two-step scheme needs steps >= 2");
}

inline Eigen::LLT<Matrix> factor_step_matrix(const Matrix& mass, const Matrix& stiffness, double h) {
  Eigen::LLT<Matrix> factor(mass + h * h * stiffness);
  if (factor.info() != Eigen::Success)
    throw NumericalError("step matrix M + h^2 K is not positive definite");
  return factor;
}

// Implicit Euler two-step recursion for M q'' + K q = f with forces given
// per column; the first two columns come from the explicit start.
inline Matrix integrate(const Matrix& mass, const Matrix& stiffness, const Matrix& forces,
                        const Vector& q0, const Vector& v0, double h,
                        const TimestepOptions& options) {
  const Index n = mass.rows();
  const Index k = forces.cols();
  Matrix states(n, k);
  states.col(0) = q0;
  states.col(1) = q0 + h * v0;
  Eigen::LLT<Matrix> factor = factor_step_matrix(mass, stiffness, h);
  for (Index j = 2; j < k; ++j) {
    if (options.refactor_each_step) factor = factor_step_matrix(mass, stiffness, h);
    const Vector rhs =
        h * h * forces.col(j) + mass * (2.0 * states.col(j - 1) - states.col(j - 2));
    states.col(j) = factor.solve(rhs);
  }
  return states;
}

inline Matrix sample_forces(const ForceSignal& force, Index rows, double t0, double h, Index steps,
                            Index offset = 0) {
  Matrix forces(rows, steps + 1);
  for (Index j = 0; j <= steps; ++j) {
    const Vector f = force(t0 + double(j) * h);
    require(f.size() == force.dimension, "force sampler returned a vector of the wrong size");
    forces.col(j) = f.segment(offset, rows);
  }
  return forces;
}

}  // namespace detail

/// Contact-free full-order run: (M + h^2 K) q_{j+1} = h^2 f_{j+1} + 2 M q_j - M q_{j-1}.
inline Trajectory simulate_free(const PartitionedSystem& system, const ForceSignal& force,
                                const Vector& q0, const Vector& v0, double h, Index steps,
                                const TimestepOptions& options = {}) {
  detail::check_step_args(h, steps);
  const Index n = system.size();
  detail::require(force.dimension == n, "force dimension does not match the system");
  detail::require(q0.size() == n && v0.size() == n, "initial data has the wrong dimension");
  Trajectory out;
  out.h = h;
  out.forces = detail::sample_forces(force, n, 0.0, h, steps);
  out.states = detail::integrate(system.mass, system.stiffness, out.forces, q0, v0, h, options);
  return out;
}

/// Interior subsystem with the boundary DOFs clamped; states and forces
/// are interior-only.
inline Trajectory simulate_fixed_boundary(const PartitionedSystem& system, const ForceSignal& force,
                                          const Vector& q0_interior, const Vector& v0_interior,
                                          double h, Index steps,
                                          const TimestepOptions& options = {}) {
  detail::check_step_args(h, steps);
  const Index ni = system.n_interior;
  detail::require(force.dimension == system.size(), "force dimension does not match the system");
  detail::require(q0_interior.size() == ni && v0_interior.size() == ni,
                  "interior initial data has the wrong dimension");
  Trajectory out;
  out.h = h;
  out.forces = detail::sample_forces(force, ni, 0.0, h, steps, system.n_boundary);
  out.states = detail::integrate(system.m_ii(), system.k_ii(), out.forces, q0_interior,
                                 v0_interior, h, options);
  return out;
}

/// Per-step LCP statistics of a contact run.
struct ContactRunStats {
  std::vector<int> pivot_counts;
  double max_complementarity = 0.0;
  int lcp_matrix_assemblies = 0;
  int factorizations = 0;
};

/// Full-order reference solution of the dynamic obstacle problem: at each
/// step A = h^2 C S^-1 C^T (assembled once, S = M + h^2 K) and
/// B = C S^-1 (h^2 f + 2 M q_{j-1} - M q_{j-2}) + b feed Lemke's method.
inline Trajectory solve_contact_fom(const PartitionedSystem& system,
                                    const ContactConstraints& constraints,
                                    const ForceSignal& force, const Vector& q0, const Vector& v0,
                                    double h, Index steps, ContactRunStats* stats = nullptr) {
  detail::check_step_args(h, steps);
  validate(constraints, system.n_boundary);
  const Index n = system.size();
  const Index m = constraints.count();
  detail::require(force.dimension == n, "force dimension does not match the system");
  detail::require(q0.size() == n && v0.size() == n, "initial data has the wrong dimension");

  Matrix c = Matrix::Zero(m, n);
  c.leftCols(system.n_boundary) = constraints.c_matrix;
  const Eigen::LLT<Matrix> factor = detail::factor_step_matrix(system.mass, system.stiffness, h);
  const Matrix s_inv_ct = factor.solve(c.transpose());
  const Matrix a = symmetrize(h * h * c * s_inv_ct);

  ContactRunStats local;
  local.factorizations = 1;
  local.lcp_matrix_assemblies = 1;

  Trajectory out;
  out.h = h;
  out.forces = detail::sample_forces(force, n, 0.0, h, steps);
  out.states.resize(n, steps + 1);
  out.multipliers = Matrix::Zero(m, steps + 1);
  out.states.col(0) = q0;
  out.states.col(1) = q0 + h * v0;
  local.pivot_counts.assign(2, 0);

  for (Index j = 2; j <= steps; ++j) {
    const Vector rhs = h * h * out.forces.col(j) +
                       system.mass * (2.0 * out.states.col(j - 1) - out.states.col(j - 2));
    const Vector predicted = factor.solve(rhs);
    LcpProblem lcp{a, c * predicted + constraints.offsets};
    const LcpSolution solution = lemke_solve(lcp);
    if (solution.status != LcpStatus::solved)
      throw NumericalError("full-order contact LCP failed at step " + std::to_string(j) + ": " +
                           to_string(solution.status));
    local.pivot_counts.push_back(solution.pivot_count);
    local.max_complementarity =
        std::max(local.max_complementarity, complementarity_residual(lcp, solution));
    out.multipliers->col(j) = solution.lambda;
    out.states.col(j) = predicted + h * h * (s_inv_ct * solution.lambda);
  }
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace contactrom
