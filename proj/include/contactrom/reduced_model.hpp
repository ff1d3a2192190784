#pragma once

#include "contactrom/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace contactrom {

/// Node-to-node non-penetration: gap = c_matrix * q_B + offsets >= 0.
struct ContactConstraints {
  Matrix c_matrix;  // m x n_B, one +-1 per row
  Vector offsets;   // length m, meters

  Index count() const { return c_matrix.rows(); }
  Vector gap(const Vector& q_boundary) const { return c_matrix * q_boundary + offsets; }
};

inline void validate(const ContactConstraints& constraints, Index n_boundary) {
  const Matrix& c = constraints.c_matrix;
  detail::require(c.cols() == n_boundary,
                  "contact matrix has " + std::to_string(c.cols()) +
                      " columns, expected n_B = " + std::to_string(n_boundary));
  detail::require(constraints.offsets.size() == c.rows(),
                  "gap offsets length " + std::to_string(constraints.offsets.size()) +
                      " does not match " + std::to_string(c.rows()) + " constraint rows");
  for (Index i = 0; i < c.rows(); ++i) {
    Index nonzeros = 0;
    for (Index j = 0; j < c.cols(); ++j) {
      const double v = c(i, j);
      if (v == 0.0) continue;
      ++nonzeros;
      detail::require(v == 1.0 || v == -1.0,
                      "contact matrix row " + std::to_string(i) + " has entry other than +-1");
    }
    detail::require(nonzeros == 1, "contact matrix row " + std::to_string(i) +
                                       " must have exactly one nonzero entry");
    detail::require(constraints.offsets(i) >= 0.0,
                    "negative reference gap in constraint row " + std::to_string(i));
  }
}

enum class CouplingMethod { full_lsq, reduced_lsq, static_modes, intrusive };

inline std::string to_string(CouplingMethod method) {
  switch (method) {
    case CouplingMethod::full_lsq: return "full-lsq";
    case CouplingMethod::reduced_lsq: return "reduced-lsq";
    case CouplingMethod::static_modes: return "static-modes";
    case CouplingMethod::intrusive: return "intrusive";
  }
  return "unknown";
}

inline CouplingMethod parse_coupling_method(const std::string& text) {
  if (text == "full-lsq" || text == "full_lsq") return CouplingMethod::full_lsq;
  if (text == "reduced-lsq" || text == "reduced_lsq") return CouplingMethod::reduced_lsq;
  if (text == "static-modes" || text == "static_modes") return CouplingMethod::static_modes;
  if (text == "intrusive") return CouplingMethod::intrusive;
  throw ConfigError("unknown coupling method '" + text +
                    "' (expected full-lsq, reduced-lsq or static-modes)");
}

/// Substructured reduced model: reduced state is (q_B, q_I_hat) and the
/// full state is recovered as global_basis * q_hat.
struct ReducedModel {
  Matrix m_hat;
  Matrix k_hat;
  Matrix interior_basis;  // n_I x r
  Matrix coupling;        // n_I x n_B
  Matrix global_basis;    // (n_B + n_I) x (n_B + r)
  ContactConstraints constraints;
  double spd_margin = 0.0;
  std::map<std::string, std::string> provenance;

  Index n_boundary() const { return coupling.cols(); }
  Index n_interior() const { return coupling.rows(); }
  Index rank() const { return interior_basis.cols(); }
  Index reduced_dim() const { return m_hat.rows(); }
};

/// Block assembly [[I, 0], [Phi, V_I]].
inline Matrix assemble_global_basis(const Matrix& coupling, const Matrix& interior_basis) {
  detail::require(coupling.rows() == interior_basis.rows(),
                  "coupling " + detail::dims(coupling) + " and interior basis " +
                      detail::dims(interior_basis) + " disagree on n_I");
  const Index nb = coupling.cols();
  const Index ni = coupling.rows();
  const Index r = interior_basis.cols();
  Matrix v = Matrix::Zero(nb + ni, nb + r);
  v.topLeftCorner(nb, nb).setIdentity();
  v.bottomLeftCorner(ni, nb) = coupling;
  v.bottomRightCorner(ni, r) = interior_basis;
  return v;
}

/// Reduced coordinates consistent with the lifting q = V q_hat:
/// (q_B, V_I^+ (q_I - Phi q_B)).
inline Vector reduce_state(const ReducedModel& model, const Vector& q_full) {
  const Index nb = model.n_boundary();
  detail::require(q_full.size() == nb + model.n_interior(),
                  "full state has length " + std::to_string(q_full.size()) + ", expected " +
                      std::to_string(nb + model.n_interior()));
  Vector q_hat(nb + model.rank());
  q_hat.head(nb) = q_full.head(nb);
  const Vector residual = q_full.tail(model.n_interior()) - model.coupling * q_full.head(nb);
  if (model.rank() > 0) {
    q_hat.tail(model.rank()) =
        model.interior_basis.completeOrthogonalDecomposition().solve(residual);
  }
  return q_hat;
}

}  // namespace contactrom
