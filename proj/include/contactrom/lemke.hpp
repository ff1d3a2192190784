#pragma once

#include "contactrom/common.hpp"

#include <limits>
#include <string>
#include <vector>

namespace contactrom {

/// Find lambda >= 0 with w = b + A lambda >= 0 and lambda^T w = 0.
struct LcpProblem {
  Matrix a;
  Vector b;
};

enum class LcpStatus { solved, ray_termination, iteration_cap };

inline std::string to_string(LcpStatus status) {
  switch (status) {
    case LcpStatus::solved: return "solved";
    case LcpStatus::ray_termination: return "ray_termination";
    case LcpStatus::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

struct LcpSolution {
  Vector lambda;
  Vector w;
  LcpStatus status = LcpStatus::solved;
  int pivot_count = 0;
};

/// Magnitude used to scale the feasibility and complementarity tolerances:
/// the largest of |b| and |A lambda| (1 if both vanish).
inline double lcp_scale(const LcpProblem& problem, const Vector& lambda) {
  double scale = problem.b.size() ? problem.b.cwiseAbs().maxCoeff() : 0.0;
  if (lambda.size()) scale = std::max(scale, (problem.a * lambda).cwiseAbs().maxCoeff());
  return scale > 0.0 ? scale : 1.0;
}

/// max(|lambda_i w_i|) / (scale * max(|lambda|)); zero when lambda = 0.
inline double complementarity_residual(const LcpProblem& problem, const LcpSolution& solution) {
  if (solution.lambda.size() == 0) return 0.0;
  const double lmax = solution.lambda.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return 0.0;
  const double scale = lcp_scale(problem, solution.lambda);
  return std::abs(solution.lambda.dot(solution.w)) / (scale * lmax);
}

namespace detail {

class LemkeTableau {
 public:
  LemkeTableau(const Matrix& a, const Vector& b) : m_(a.rows()), t_(a.rows(), 2 * a.rows() + 2) {
    t_.leftCols(m_).setIdentity();
    t_.middleCols(m_, m_) = -a;
    t_.col(2 * m_).setConstant(-1.0);
    t_.col(2 * m_ + 1) = b;
    basis_.resize(m_);
    for (Index i = 0; i < m_; ++i) basis_[i] = i;
  }

  Index artificial() const { return 2 * m_; }
  Index rhs() const { return 2 * m_ + 1; }
  Index complement(Index var) const { return var < m_ ? var + m_ : var - m_; }
  Index basic(Index row) const { return basis_[row]; }

  // Lexicographic comparison of rows i and j scaled by the entering column:
  // true when row i is strictly smaller than row j.
  bool lex_less(Index i, Index j, Index col, double tol) const {
    const double ai = t_(i, col);
    const double aj = t_(j, col);
    auto compare = [&](Index c) {
      const double lhs = t_(i, c) * aj;
      const double rhs = t_(j, c) * ai;
      const double slack = tol * (std::abs(lhs) + std::abs(rhs));
      if (lhs < rhs - slack) return -1;
      if (lhs > rhs + slack) return 1;
      return 0;
    };
    if (int c = compare(rhs()); c != 0) return c < 0;
    for (Index c = 0; c < m_; ++c)
      if (int v = compare(c); v != 0) return v < 0;
    return false;
  }

  bool ratio_tie(Index i, Index j, Index col, double tol) const {
    const double lhs = t_(i, rhs()) * t_(j, col);
    const double rhs_v = t_(j, rhs()) * t_(i, col);
    return std::abs(lhs - rhs_v) <= tol * (std::abs(lhs) + std::abs(rhs_v));
  }

  // Minimum ratio row for the entering column, -1 when the column has no
  // positive entry.
  Index ratio_test(Index col, double pivot_tol, double tie_tol) const {
    Index best = -1;
    for (Index i = 0; i < m_; ++i) {
      if (t_(i, col) <= pivot_tol) continue;
      if (best < 0 || lex_less(i, best, col, tie_tol)) best = i;
    }
    if (best < 0) return best;
    // Prefer letting the artificial variable leave when it ties on the ratio.
    for (Index i = 0; i < m_; ++i) {
      if (basis_[i] == artificial() && t_(i, col) > pivot_tol && ratio_tie(i, best, col, tie_tol))
        return i;
    }
    return best;
  }

  Index pivot(Index row, Index col) {
    t_.row(row) /= t_(row, col);
    for (Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
    }
    const Index leaving = basis_[row];
    basis_[row] = col;
    return leaving;
  }

  Vector z_values() const {
    Vector z = Vector::Zero(m_);
    for (Index i = 0; i < m_; ++i)
      if (basis_[i] >= m_ && basis_[i] < 2 * m_) z(basis_[i] - m_) = std::max(0.0, t_(i, rhs()));
    return z;
  }

  const Matrix& table() const { return t_; }

 private:
  Index m_;
  Matrix t_;
  std::vector<Index> basis_;
};

// Re-solves the equality system on the support of z for full accuracy.
inline Vector polish_support(const Matrix& a, const Vector& b, const Vector& z) {
  std::vector<Index> support;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) > 0.0) support.push_back(i);
  if (support.empty()) return z;
  const Index s = Index(support.size());
  Matrix a_ss(s, s);
  Vector b_s(s);
  for (Index i = 0; i < s; ++i) {
    b_s(i) = b(support[i]);
    for (Index j = 0; j < s; ++j) a_ss(i, j) = a(support[i], support[j]);
  }
  Eigen::FullPivLU<Matrix> lu(a_ss);
  if (!lu.isInvertible()) return z;
  const Vector z_s = lu.solve(-b_s);
  if ((z_s.array() < 0.0).any()) return z;
  Vector polished = Vector::Zero(z.size());
  for (Index i = 0; i < s; ++i) polished(support[i]) = z_s(i);
  const Vector w_old = b + a * z;
  const Vector w_new = b + a * polished;
  if (w_new.minCoeff() < std::min(0.0, w_old.minCoeff())) return z;
  return polished;
}

}  // namespace detail

/// Lemke's complementary pivoting with covering vector of ones and
/// lexicographic degeneracy resolution. The problem is rescaled internally
/// to unit magnitude; the pivot threshold is 1e-12 relative.
inline LcpSolution lemke_solve(const LcpProblem& problem) {
  const Index m = problem.b.size();
  detail::require(m >= 1, "LCP needs at least one constraint");
  detail::require(problem.a.rows() == m && problem.a.cols() == m,
                  "LCP matrix is " + detail::dims(problem.a) + ", vector has length " +
                      std::to_string(m));
  detail::require(problem.a.allFinite() && problem.b.allFinite(), "LCP data must be finite");

  LcpSolution solution;
  if (problem.b.minCoeff() >= 0.0) {
    solution.lambda = Vector::Zero(m);
    solution.w = problem.b;
    return solution;
  }

  const double a_scale = problem.a.cwiseAbs().maxCoeff() > 0.0 ? problem.a.cwiseAbs().maxCoeff() : 1.0;
  const double b_scale = problem.b.cwiseAbs().maxCoeff();
  const Matrix a = problem.a / a_scale;
  const Vector b = problem.b / b_scale;

  constexpr double kPivotTol = 1e-12;
  constexpr double kTieTol = 1e-12;
  const int max_pivots = int(50 * m);

  detail::LemkeTableau tableau(a, b);
  Index row = 0;
  {
    // The artificial variable enters; the row with the most negative b leaves.
    for (Index i = 1; i < m; ++i)
      if (tableau.table()(i, tableau.rhs()) < tableau.table()(row, tableau.rhs()) ||
          (tableau.table()(i, tableau.rhs()) == tableau.table()(row, tableau.rhs()) &&
           tableau.lex_less(i, row, tableau.artificial(), kTieTol)))
        row = i;
  }
  Index leaving = tableau.pivot(row, tableau.artificial());
  solution.pivot_count = 1;
  solution.status = LcpStatus::iteration_cap;

  while (solution.pivot_count < max_pivots) {
    const Index entering = tableau.complement(leaving);
    row = tableau.ratio_test(entering, kPivotTol, kTieTol);
    if (row < 0) {
      solution.status = LcpStatus::ray_termination;
      break;
    }
    leaving = tableau.pivot(row, entering);
    ++solution.pivot_count;
    if (leaving == tableau.artificial()) {
      solution.status = LcpStatus::solved;
      break;
    }
  }

  Vector z = tableau.z_values();
  if (solution.status == LcpStatus::solved) z = detail::polish_support(a, b, z);
  solution.lambda = z * (b_scale / a_scale);
  solution.w = problem.b + problem.a * solution.lambda;
  return solution;
}

}  // namespace contactrom
