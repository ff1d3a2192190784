#pragma once

#include "contactrom/common.hpp"
#include "contactrom/timestep.hpp"

#include <Eigen/SVD>

#include <variant>

namespace contactrom {

/// Training data of the two contact-free runs, split at n_B.
struct SnapshotSet {
  Matrix q_boundary;     // Q_B
  Matrix q_interior;     // Q_I
  Matrix f_boundary;     // F_B
  Matrix f_interior;     // F_I
  Matrix q_fixed;        // Q^(1), fixed-boundary run
  Matrix f_fixed;        // F_I^(1)
  double h = 0.0;

  Index columns() const { return q_boundary.cols(); }
  Index n_boundary() const { return q_boundary.rows(); }
  Index n_interior() const { return q_interior.rows(); }
};

/// Splits the free run at n_B and pairs it with the fixed-boundary run.
/// Both runs must use the same grid and the same interior load.
inline SnapshotSet collect(const Trajectory& free_run, const Trajectory& fixed_run, Index n_boundary) {
  detail::require(n_boundary >= 1 && n_boundary < free_run.dimension(),
                  "n_B = " + std::to_string(n_boundary) + " incompatible with free run dimension " +
                      std::to_string(free_run.dimension()));
  const Index ni = free_run.dimension() - n_boundary;
  detail::require(fixed_run.dimension() == ni,
                  "fixed-boundary run has " + std::to_string(fixed_run.dimension()) +
                      " rows, expected n_I = " + std::to_string(ni));
  detail::require(free_run.h == fixed_run.h && free_run.t0 == fixed_run.t0,
                  "training runs use different time grids");
  detail::require(free_run.steps() == fixed_run.steps(),
                  "training runs have different step counts");
  detail::require(free_run.forces.rows() == free_run.dimension() &&
                      fixed_run.forces.rows() == ni,
                  "training force histories have the wrong shape");

  SnapshotSet set;
  set.h = free_run.h;
  set.q_boundary = free_run.states.topRows(n_boundary);
  set.q_interior = free_run.states.bottomRows(ni);
  set.f_boundary = free_run.forces.topRows(n_boundary);
  set.f_interior = free_run.forces.bottomRows(ni);
  set.q_fixed = fixed_run.states;
  set.f_fixed = fixed_run.forces;
  if (set.f_interior != set.f_fixed)
    throw ConfigError("interior loads differ between the free and the fixed-boundary run");
  return set;
}

/// Central differences (q_{j+1} - 2 q_j + q_{j-1}) / h^2; the first and
/// last columns are dropped, so companions must be trimmed to 1..k-2.
inline Matrix second_derivatives(const Matrix& states, double h) {
  detail::require(states.cols() >= 3, "second derivatives need at least three columns");
  detail::require(h > 0.0, "time step must be positive");
  const Index k = states.cols();
  return (states.rightCols(k - 2) - 2.0 * states.middleCols(1, k - 2) + states.leftCols(k - 2)) /
         (h * h);
}

/// Columns 1..k-2, the time indices that survive second_derivatives.
inline Matrix trim_endpoints(const Matrix& data) { return data.middleCols(1, data.cols() - 2); }

struct PodBasis {
  Matrix basis;
  Vector singular_values;  // all of them, nonincreasing
  Index rank = 0;
};

struct PodRank {
  Index value;
};
struct PodTolerance {
  double value;
};
using PodTruncation = std::variant<PodRank, PodTolerance>;

/// Number of singular values above the usual rounding threshold.
inline Index effective_rank(const Vector& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0 || singular_values(0) == 0.0) return 0;
  const double threshold = singular_values(0) * double(std::max(rows, cols)) *
                           std::numeric_limits<double>::epsilon();
  return Index((singular_values.array() > threshold).count());
}

/// Truncated left singular vectors. With a tolerance tau the rank is the
/// smallest r with sigma_{r+1} / sigma_1 <= tau.
inline PodBasis pod(const Matrix& data, const PodTruncation& truncation) {
  detail::require(data.size() > 0 && data.cwiseAbs().maxCoeff() > 0.0,
                  "POD needs nonzero snapshot data");
  Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinU);
  const Vector sigma = svd.singularValues();
  const Index available = effective_rank(sigma, data.rows(), data.cols());

  Index rank = 0;
  if (const auto* r = std::get_if<PodRank>(&truncation)) {
    detail::require(r->value >= 1, "POD rank must be at least 1");
    if (r->value > available)
      throw NumericalError("requested POD rank " + std::to_string(r->value) +
                           " exceeds the effective rank " + std::to_string(available) +
                           " of the snapshot matrix");
    rank = r->value;
  } else {
    const double tau = std::get<PodTolerance>(truncation).value;
    detail::require(tau >= 0.0, "POD tolerance must be nonnegative");
    rank = sigma.size();
    for (Index i = 0; i < sigma.size(); ++i) {
      if (sigma(i) / sigma(0) <= tau) {
        rank = i;
        break;
      }
    }
    rank = std::max<Index>(rank, 1);
  }

  PodBasis out;
  out.basis = svd.matrixU().leftCols(rank);
  fix_column_signs(out.basis);
  out.singular_values = sigma;
  out.rank = rank;
  return out;
}

/// Reduced data for the final inference: Q_hat = [Q_B; V_I^T Q^(1)],
/// F_hat = [F_B + Phi^T F_I; V_I^T F_I], all trimmed to columns 1..k-2.
struct ReducedTrainingData {
  Matrix q;
  Matrix q_ddot;
  Matrix f;
  double h = 0.0;

  Index columns() const { return q.cols(); }
};

inline ReducedTrainingData reduce_training_data(const SnapshotSet& snapshots,
                                                const Matrix& interior_basis,
                                                const Matrix& coupling) {
  const Index nb = snapshots.n_boundary();
  const Index ni = snapshots.n_interior();
  const Index r = interior_basis.cols();
  detail::require(interior_basis.rows() == ni,
                  "interior basis has " + std::to_string(interior_basis.rows()) +
                      " rows, expected n_I = " + std::to_string(ni));
  detail::require(coupling.rows() == ni && coupling.cols() == nb,
                  "coupling matrix is " + detail::dims(coupling) + ", expected " +
                      std::to_string(ni) + "x" + std::to_string(nb));
  const Index k = snapshots.columns();
  Matrix q(nb + r, k);
  q.topRows(nb) = snapshots.q_boundary;
  q.bottomRows(r) = interior_basis.transpose() * snapshots.q_fixed;
  Matrix f(nb + r, k);
  f.topRows(nb) = snapshots.f_boundary + coupling.transpose() * snapshots.f_interior;
  f.bottomRows(r) = interior_basis.transpose() * snapshots.f_interior;

  ReducedTrainingData out;
  out.h = snapshots.h;
  out.q_ddot = second_derivatives(q, snapshots.h);
  out.q = trim_endpoints(q);
  out.f = trim_endpoints(f);
  return out;
}

}  // namespace contactrom
