#pragma once

#include "contactrom/common.hpp"
#include "contactrom/reduced_model.hpp"
#include "contactrom/snapshots.hpp"

namespace contactrom {

/// Static interior response to boundary displacements, Phi_IB (n_I x n_B).
struct CouplingMatrix {
  Matrix phi;
  CouplingMethod method = CouplingMethod::static_modes;
  double residual = 0.0;  // ||Q_I - Phi Q_B - Q^(1)||_F for the fits, 0 otherwise
  bool underdetermined = false;  // fewer snapshots than boundary DOFs
  Index data_rank = 0;           // numerical rank of Q_B used by the fits
};

/// Relative pivot level below which Q_B directions are dropped in the fits.
inline constexpr double kCouplingRankTolerance = 1e-8;

namespace detail {

// argmin_X ||X basis_rows - target||_F via an orthogonal factorization of
// basis_rows^T; minimum-norm when basis_rows is numerically rank deficient.
// Pivots below rank_tolerance * |largest pivot| count as zero: trajectory
// data carries directions at the 1e-10 level that are integration noise, and
// keeping them inflates Phi by orders of magnitude.
inline Matrix min_norm_right_solve(const Matrix& target, const Matrix& basis_rows,
                                   double rank_tolerance, Index* rank = nullptr) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(basis_rows.transpose());
  cod.setThreshold(rank_tolerance);
  if (rank) *rank = cod.rank();
  return cod.solve(target.transpose()).transpose();
}

}  // namespace detail

/// Fits Q_I - Q^(1) = Phi Q_B in the least-squares sense.
inline CouplingMatrix coupling_full_lsq(const SnapshotSet& snapshots) {
  detail::require(snapshots.columns() >= 1, "coupling fit needs snapshot data");
  CouplingMatrix out;
  out.method = CouplingMethod::full_lsq;
  out.underdetermined = snapshots.columns() < snapshots.n_boundary();
  const Matrix target = snapshots.q_interior - snapshots.q_fixed;
  out.phi = detail::min_norm_right_solve(target, snapshots.q_boundary, kCouplingRankTolerance,
                                         &out.data_rank);
  out.residual = (target - out.phi * snapshots.q_boundary).norm();
  return out;
}

/// Same fit projected onto the leading r2 POD modes of Q_I; Phi = V2 Phi~.
inline CouplingMatrix coupling_reduced_lsq(const SnapshotSet& snapshots, Index r2) {
  detail::require(snapshots.columns() >= 1, "coupling fit needs snapshot data");
  const PodBasis v2 = pod(snapshots.q_interior, PodRank{r2});
  const Matrix target = snapshots.q_interior - snapshots.q_fixed;
  CouplingMatrix out;
  const Matrix reduced =
      detail::min_norm_right_solve(v2.basis.transpose() * target, snapshots.q_boundary,
                                   kCouplingRankTolerance, &out.data_rank);
  out.method = CouplingMethod::reduced_lsq;
  out.underdetermined = snapshots.columns() < snapshots.n_boundary();
  out.phi = v2.basis * reduced;
  out.residual = (target - out.phi * snapshots.q_boundary).norm();
  return out;
}

/// Wraps constrained modes (from static_modes or from static-run outputs).
inline CouplingMatrix coupling_from_static_modes(const Matrix& modes, Index n_interior,
                                                 Index n_boundary) {
  detail::require(modes.rows() == n_interior && modes.cols() == n_boundary,
                  "static mode matrix is " + detail::dims(modes) + ", expected " +
                      std::to_string(n_interior) + "x" + std::to_string(n_boundary));
  detail::require(modes.allFinite(), "static modes contain non-finite entries");
  CouplingMatrix out;
  out.method = CouplingMethod::static_modes;
  out.phi = modes;
  return out;
}

}  // namespace contactrom
