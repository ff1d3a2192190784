#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace contactrom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Failure categories; the CLI maps each one onto an exit code.
enum class ErrorKind { config, numerical, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

inline std::string dims(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace detail

/// ||A - A^T||_F / ||A||_F, zero for the zero matrix.
inline double relative_asymmetry(const Matrix& a) {
  const double norm = a.norm();
  if (norm == 0.0) return 0.0;
  return (a - a.transpose()).norm() / norm;
}

inline double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

inline double spectral_norm(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Flips column signs so that the largest-magnitude entry of each column is
/// positive. Ties go to the first index.
inline void fix_column_signs(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0.0) basis.col(j) *= -1.0;
  }
}

/// Replaces eigenvalues below `floor` by `floor`.
inline Matrix clip_eigenvalues(const Matrix& symmetric, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(symmetric));
  Vector values = solver.eigenvalues().cwiseMax(floor);
  Matrix clipped = solver.eigenvectors() * values.asDiagonal() *
                   solver.eigenvectors().transpose();
  return symmetrize(clipped);
}

}  // namespace contactrom
