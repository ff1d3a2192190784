#pragma once

#include "contactrom/common.hpp"

#include <Eigen/SVD>

#include <optional>
#include <string>
#include <vector>

namespace contactrom {

/// Trailing diagonal block [offset, n) of both operators pinned to targets.
struct BlockEquality {
  Index offset = 0;
  Matrix m_target;
  Matrix k_target;
};

/// min ||D [M K]^T - R||_F^2 over symmetric M, K with M >= eps I, K >= eps I.
struct SpdLsqProblem {
  Matrix data;  // D = [Qdd^T, Q^T], k x 2n
  Matrix rhs;   // R = F^T, k x n
  double margin = 0.0;
  std::optional<BlockEquality> fixed_block;
};

struct SpdLsqOptions {
  int max_iterations = 10000;          // Newton steps over all barrier stages
  double optimality_tolerance = 1e-8;  // relative to ||R||_F^2
};

struct SpdLsqDiagnostics {
  double objective = 0.0;
  double initial_objective = 0.0;        // clipped unconstrained initializer
  double unconstrained_objective = 0.0;  // lower bound on the optimum
  double gap_bound = 0.0;                // certified bound on objective - optimum
  double feasibility_residual = 0.0;     // max(0, eps - lambda_min) over M, K
  double newton_decrement = 0.0;
  double margin = 0.0;
  int iterations = 0;
  int barrier_stages = 0;
  Index data_rank = 0;
  Index unknowns = 0;
  bool rank_warning = false;
  bool ridge_applied = false;
  bool unconstrained_feasible = false;
  bool degenerate = false;
};

struct SpdLsqResult {
  Matrix m;
  Matrix k;
  SpdLsqDiagnostics diagnostics;
};

class SpdLsqError : public NumericalError {
 public:
  SpdLsqError(const std::string& what, SpdLsqDiagnostics diagnostics)
      : NumericalError(what), diagnostics_(diagnostics) {}
  const SpdLsqDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  SpdLsqDiagnostics diagnostics_;
};

/// Default margin: 1e-8 times the operator scale ||R||_F / ||D||_F.
inline double default_spd_margin(const Matrix& data, const Matrix& rhs) {
  const double d = data.norm();
  const double r = rhs.norm();
  if (d == 0.0 || r == 0.0) return 1e-8;
  return 1e-8 * r / d;
}

namespace detail {

// Log-det barrier interior-point solver over the free entries of (M, K).
class SpdLsqSolver {
 public:
  SpdLsqSolver(const SpdLsqProblem& problem, const SpdLsqOptions& options)
      : problem_(problem), options_(options), n_(problem.rhs.cols()) {
    build_variables();
    build_quadratic();
  }

  SpdLsqResult solve() {
    SpdLsqDiagnostics diag;
    diag.margin = problem_.margin;
    diag.unknowns = Index(vars_.size());
    diag.data_rank = data_rank();
    diag.rank_warning = diag.data_rank < 2 * n_;

    const double rhs_norm2 = problem_.rhs.squaredNorm();
    const double max_curv = curvature_.size() ? curvature_.maxCoeff() : 0.0;
    if (vars_.empty() || max_curv == 0.0) {
      diag.degenerate = true;
      return finish(feasible_floor_point(), diag);
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(g_scaled_);
    const Vector evals = eig.eigenvalues();
    const double emax = evals.maxCoeff();
    const Vector y_unc = pseudo_solve(eig, g_vec_scaled_, 1e-13 * emax);
    if (evals.minCoeff() <= 1e-13 * emax) {
      g_scaled_.diagonal().array() += 1e-12 * emax;
      diag.ridge_applied = true;
    }
    auto [m_unc, k_unc] = to_matrices(unscale(y_unc));
    diag.unconstrained_objective = objective(m_unc, k_unc);

    const double eps = problem_.margin;
    if (min_eigenvalue(m_unc) >= eps && min_eigenvalue(k_unc) >= eps) {
      diag.unconstrained_feasible = true;
      diag.objective = diag.unconstrained_objective;
      diag.initial_objective = diag.objective;
      return finish({m_unc, k_unc}, diag);
    }

    // Clipped initializer (feasible, on the boundary) and a strictly
    // interior start for the barrier.
    const Pair init = {clipped(m_unc, 0, eps), clipped(k_unc, 1, eps)};
    diag.initial_objective = objective(init.m, init.k);
    floors_[0] = barrier_floor(m_unc, 0);
    floors_[1] = barrier_floor(k_unc, 1);
    const Pair start = {clipped(m_unc, 0, eps + start_margin(m_unc)),
                        clipped(k_unc, 1, eps + start_margin(k_unc))};
    Vector y = scale_inverse(from_matrices(start.m, start.k));

    const double tol_abs =
        options_.optimality_tolerance * std::max({rhs_norm2, diag.initial_objective, 1e-300});
    const double theta = 2.0 * double(n_);
    const double lower = quad_value(y_unc);
    double t = theta / std::max(quad_value(y) - lower, tol_abs);
    int iterations = 0;
    int stages = 0;
    double decrement = 0.0;
    while (true) {
      ++stages;
      decrement = center(y, t, iterations);
      if (theta / t <= 0.5 * tol_abs) break;
      t *= 20.0;
    }
    diag.iterations = iterations;
    diag.barrier_stages = stages;
    diag.newton_decrement = decrement;

    Pair result = to_matrices(unscale(y));
    double value = objective(result.m, result.k);
    const double central_value = value;
    if (!problem_.fixed_block) {
      Pair snapped = {snap_to_margin(result.m), snap_to_margin(result.k)};
      const double snapped_value = objective(snapped.m, snapped.k);
      if (snapped_value <= value + 0.25 * tol_abs) {
        result = snapped;
        value = snapped_value;
      }
    }
    if (diag.initial_objective < value) {
      result = init;
      value = diag.initial_objective;
    }
    diag.objective = value;
    diag.gap_bound = std::min(theta / t + std::max(0.0, value - central_value),
                              std::max(0.0, value - diag.unconstrained_objective));
    return finish(result, diag);
  }

 private:
  struct Var {
    int op;  // 0 = M, 1 = K
    Index i, j;
  };
  struct Pair {
    Matrix m, k;
  };

  const SpdLsqProblem& problem_;
  SpdLsqOptions options_;
  Index n_;
  std::vector<Var> vars_;
  Matrix base_;  // fixed part of L = [M K]
  Matrix gram_;  // D^T D
  Matrix g_scaled_;
  Vector g_vec_scaled_;
  Vector scale_;
  Vector curvature_;
  double floors_[2] = {0.0, 0.0};

  bool is_fixed(Index i, Index j) const {
    return problem_.fixed_block && i >= problem_.fixed_block->offset &&
           j >= problem_.fixed_block->offset;
  }

  void build_variables() {
    const Index n = n_;
    require(n >= 1, "SPD least squares needs at least one unknown row");
    require(problem_.data.cols() == 2 * n,
            "data matrix has " + std::to_string(problem_.data.cols()) + " columns, expected " +
                std::to_string(2 * n));
    require(problem_.data.rows() == problem_.rhs.rows(),
            "data matrix and right-hand side have different row counts");
    require(problem_.margin > 0.0, "SPD margin must be positive");
    require(problem_.data.allFinite() && problem_.rhs.allFinite(), "training data must be finite");
    base_ = Matrix::Zero(n, 2 * n);
    if (problem_.fixed_block) {
      const auto& fb = *problem_.fixed_block;
      const Index r = n - fb.offset;
      require(fb.offset >= 0 && fb.offset < n, "fixed block offset out of range");
      require(fb.m_target.rows() == r && fb.m_target.cols() == r && fb.k_target.rows() == r &&
                  fb.k_target.cols() == r,
              "fixed block targets must be " + std::to_string(r) + "x" + std::to_string(r));
      base_.block(fb.offset, fb.offset, r, r) = symmetrize(fb.m_target);
      base_.block(fb.offset, n + fb.offset, r, r) = symmetrize(fb.k_target);
    }
    for (int op = 0; op < 2; ++op)
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i <= j; ++i)
          if (!is_fixed(i, j)) vars_.push_back({op, i, j});
  }

  // Entries of L touched by variable a: (row, column in L).
  template <typename F>
  void for_entries(const Var& v, F&& f) const {
    const Index col0 = v.op * n_;
    f(v.i, col0 + v.j);
    if (v.i != v.j) f(v.j, col0 + v.i);
  }

  void build_quadratic() {
    const Index nv = Index(vars_.size());
    gram_ = problem_.data.transpose() * problem_.data;
    const Matrix cross = problem_.rhs.transpose() * problem_.data - base_ * gram_;
    Matrix g(nv, nv);
    Vector lin(nv);
    for (Index a = 0; a < nv; ++a) {
      double acc = 0.0;
      for_entries(vars_[a], [&](Index r, Index s) { acc += cross(r, s); });
      lin(a) = acc;
      for (Index b = 0; b <= a; ++b) {
        double gab = 0.0;
        for_entries(vars_[a], [&](Index r, Index s) {
          for_entries(vars_[b], [&](Index r2, Index s2) {
            if (r == r2) gab += gram_(s, s2);
          });
        });
        g(a, b) = g(b, a) = gab;
      }
    }
    curvature_ = g.diagonal();
    scale_ = Vector::Ones(nv);
    for (Index a = 0; a < nv; ++a)
      if (curvature_(a) > 0.0) scale_(a) = 1.0 / std::sqrt(curvature_(a));
    g_scaled_ = scale_.asDiagonal() * g * scale_.asDiagonal();
    g_vec_scaled_ = scale_.cwiseProduct(lin);
  }

  Index data_rank() const {
    if (problem_.data.size() == 0) return 0;
    Vector norms = problem_.data.colwise().norm().transpose();
    Matrix normalized = problem_.data;
    for (Index j = 0; j < normalized.cols(); ++j)
      if (norms(j) > 0.0) normalized.col(j) /= norms(j);
    Eigen::JacobiSVD<Matrix> svd(normalized);
    const Vector s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    return Index((s.array() > 1e-10 * s(0)).count());
  }

  static Vector pseudo_solve(const Eigen::SelfAdjointEigenSolver<Matrix>& eig, const Vector& rhs,
                             double cutoff) {
    const Vector proj = eig.eigenvectors().transpose() * rhs;
    Vector coef = Vector::Zero(proj.size());
    for (Index i = 0; i < proj.size(); ++i)
      if (eig.eigenvalues()(i) > cutoff) coef(i) = proj(i) / eig.eigenvalues()(i);
    return eig.eigenvectors() * coef;
  }

  Vector unscale(const Vector& y) const { return scale_.cwiseProduct(y); }
  Vector scale_inverse(const Vector& x) const { return x.cwiseQuotient(scale_); }

  // Quadratic model in scaled coordinates, up to the constant term.
  double quad_value(const Vector& y) const {
    return y.dot(g_scaled_ * y) - 2.0 * g_vec_scaled_.dot(y);
  }

  Pair to_matrices(const Vector& x) const {
    Matrix l = base_;
    for (Index a = 0; a < Index(vars_.size()); ++a)
      for_entries(vars_[a], [&](Index r, Index s) { l(r, s) = x(a); });
    return {l.leftCols(n_), l.rightCols(n_)};
  }

  Vector from_matrices(const Matrix& m, const Matrix& k) const {
    Vector x(vars_.size());
    for (Index a = 0; a < Index(vars_.size()); ++a) {
      const Matrix& op = vars_[a].op == 0 ? m : k;
      x(a) = op(vars_[a].i, vars_[a].j);
    }
    return x;
  }

  double objective(const Matrix& m, const Matrix& k) const {
    Matrix l(n_, 2 * n_);
    l << m, k;
    return (problem_.data * l.transpose() - problem_.rhs).squaredNorm();
  }

  const Matrix* target(int op) const {
    if (!problem_.fixed_block) return nullptr;
    return op == 0 ? &problem_.fixed_block->m_target : &problem_.fixed_block->k_target;
  }

  double reference_norm(const Matrix& unconstrained, int op) const {
    double ref = std::max(spectral_norm(unconstrained), problem_.margin);
    if (const Matrix* t = target(op)) ref = std::max(ref, spectral_norm(*t));
    return ref;
  }

  double barrier_floor(const Matrix& unconstrained, int op) const {
    const double ref = reference_norm(unconstrained, op);
    double floor = problem_.margin - 1e-10 * ref;
    if (const Matrix* t = target(op)) {
      const double tmin = min_eigenvalue(symmetrize(*t));
      if (tmin < problem_.margin - 1e-8 * ref)
        throw SpdLsqError(std::string("infeasible equality target for ") + (op ? "K" : "M") +
                              ": smallest eigenvalue " + std::to_string(tmin) +
                              " below margin " + std::to_string(problem_.margin),
                          {});
      floor = std::min(floor, tmin - 1e-10 * ref);
    }
    return floor;
  }

  double start_margin(const Matrix& unconstrained) const {
    return 1e-3 * std::max(spectral_norm(unconstrained), problem_.margin);
  }

  // Feasible point built from an unconstrained matrix: plain eigenvalue
  // clipping, or block-diagonal clipping when the trailing block is pinned.
  Matrix clipped(const Matrix& unconstrained, int op, double floor) const {
    const Matrix* t = target(op);
    if (!t) return clip_eigenvalues(unconstrained, floor);
    if (min_eigenvalue(unconstrained) >= floor) return unconstrained;
    const Index off = problem_.fixed_block->offset;
    Matrix out = Matrix::Zero(n_, n_);
    out.topLeftCorner(off, off) = clip_eigenvalues(unconstrained.topLeftCorner(off, off), floor);
    out.bottomRightCorner(n_ - off, n_ - off) = symmetrize(*t);
    return out;
  }

  Matrix snap_to_margin(const Matrix& x) const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(x));
    Vector values = eig.eigenvalues();
    const double tol = 1e-7 * std::max(values.cwiseAbs().maxCoeff(), problem_.margin);
    bool changed = false;
    for (Index i = 0; i < values.size(); ++i)
      if (values(i) < problem_.margin + tol) {
        values(i) = problem_.margin;
        changed = true;
      }
    if (!changed) return x;
    return symmetrize(eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose());
  }

  Pair feasible_floor_point() const {
    const double eps = problem_.margin;
    Pair p = {eps * Matrix::Identity(n_, n_), eps * Matrix::Identity(n_, n_)};
    if (problem_.fixed_block) {
      const Index off = problem_.fixed_block->offset;
      p.m.bottomRightCorner(n_ - off, n_ - off) = symmetrize(problem_.fixed_block->m_target);
      p.k.bottomRightCorner(n_ - off, n_ - off) = symmetrize(problem_.fixed_block->k_target);
    }
    return p;
  }

  // Barrier value -sum log det(X - floor I), or nullopt outside the domain.
  // Also returns the inverses of the shifted matrices.
  std::optional<double> barrier(const Pair& p, Matrix* inv_m, Matrix* inv_k) const {
    double value = 0.0;
    for (int op = 0; op < 2; ++op) {
      const Matrix shifted = (op == 0 ? p.m : p.k) - floors_[op] * Matrix::Identity(n_, n_);
      Eigen::LLT<Matrix> llt(shifted);
      if (llt.info() != Eigen::Success) return std::nullopt;
      const Vector diag = Matrix(llt.matrixL()).diagonal();
      if ((diag.array() <= 0.0).any()) return std::nullopt;
      value -= 2.0 * diag.array().log().sum();
      Matrix* out = op == 0 ? inv_m : inv_k;
      if (out) *out = llt.solve(Matrix::Identity(n_, n_));
    }
    return value;
  }

  // Damped Newton centering of t f + barrier; returns the final decrement.
  double center(Vector& y, double t, int& iterations) {
    const Index nv = Index(vars_.size());
    double decrement = 0.0;
    for (int inner = 0; inner < 200; ++inner) {
      if (iterations >= options_.max_iterations) {
        SpdLsqDiagnostics d;
        d.iterations = iterations;
        d.newton_decrement = decrement;
        throw SpdLsqError("SPD least squares did not converge within " +
                              std::to_string(options_.max_iterations) + " Newton iterations",
                          d);
      }
      ++iterations;
      Matrix inv_m, inv_k;
      const Pair current = to_matrices(unscale(y));
      const auto phi = barrier(current, &inv_m, &inv_k);
      if (!phi) throw SpdLsqError("barrier iterate left the feasible region", {});

      Vector grad = 2.0 * t * (g_scaled_ * y - g_vec_scaled_);
      Matrix hess = 2.0 * t * g_scaled_;
      for (Index a = 0; a < nv; ++a) {
        const Matrix& inv_a = vars_[a].op == 0 ? inv_m : inv_k;
        const double sa = scale_(a);
        double ga = 0.0;
        pairs(vars_[a], [&](Index p, Index q) { ga += inv_a(q, p); });
        grad(a) -= sa * ga;
        for (Index b = 0; b <= a; ++b) {
          if (vars_[b].op != vars_[a].op) continue;
          double hab = 0.0;
          pairs(vars_[a], [&](Index p, Index q) {
            pairs(vars_[b], [&](Index r, Index s) { hab += inv_a(q, r) * inv_a(s, p); });
          });
          hab *= sa * scale_(b);
          hess(a, b) += hab;
          if (a != b) hess(b, a) += hab;
        }
      }
      Eigen::LDLT<Matrix> ldlt(hess);
      const Vector step = ldlt.solve(-grad);
      const double slope = grad.dot(step);
      decrement = -slope;
      if (!(decrement > 2e-10)) break;

      const double quad_dir = step.dot(g_scaled_ * step);
      const double lin_dir = 2.0 * (g_scaled_ * y - g_vec_scaled_).dot(step);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Vector trial = y + alpha * step;
        const auto phi_trial = barrier(to_matrices(unscale(trial)), nullptr, nullptr);
        if (!phi_trial) continue;
        const double change =
            t * (alpha * lin_dir + alpha * alpha * quad_dir) + (*phi_trial - *phi);
        if (change <= 0.25 * alpha * slope) {
          y = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    return decrement;
  }

  // (p, q) index pairs of the symmetric basis matrix of a variable.
  template <typename F>
  static void pairs(const Var& v, F&& f) {
    f(v.i, v.j);
    if (v.i != v.j) f(v.j, v.i);
  }

  SpdLsqResult finish(const Pair& p, SpdLsqDiagnostics diag) const {
    SpdLsqResult out;
    out.m = symmetrize(p.m);
    out.k = symmetrize(p.k);
    diag.objective = objective(out.m, out.k);
    diag.feasibility_residual =
        std::max({0.0, problem_.margin - min_eigenvalue(out.m), problem_.margin - min_eigenvalue(out.k)});
    out.diagnostics = diag;
    return out;
  }
};

}  // namespace detail

/// Joint SPD-constrained least squares for (M, K). Deterministic: the
/// unconstrained optimum is returned when feasible, otherwise a log-det
/// barrier path started from the clipped initializer is followed until the
/// certified gap is below optimality_tolerance * ||R||_F^2 / 2.
inline SpdLsqResult solve_spd_lsq(const SpdLsqProblem& problem, const SpdLsqOptions& options = {}) {
  detail::SpdLsqSolver solver(problem, options);
  return solver.solve();
}

}  // namespace contactrom
