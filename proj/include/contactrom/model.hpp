#pragma once

#include "contactrom/common.hpp"
#include "contactrom/reduced_model.hpp"

#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace contactrom {

struct DofLabel {
  int node = 0;
  int direction = 0;  // 0 = deflection/translation, 1 = rotation

  bool operator==(const DofLabel&) const = default;
};

/// Full-order mass/stiffness pair in boundary-first DOF order.
struct PartitionedSystem {
  Matrix mass;
  Matrix stiffness;
  Index n_boundary = 0;
  Index n_interior = 0;
  std::vector<DofLabel> dof_labels;

  Index size() const { return n_boundary + n_interior; }

  Matrix m_bb() const { return mass.topLeftCorner(n_boundary, n_boundary); }
  Matrix m_bi() const { return mass.topRightCorner(n_boundary, n_interior); }
  Matrix m_ib() const { return mass.bottomLeftCorner(n_interior, n_boundary); }
  Matrix m_ii() const { return mass.bottomRightCorner(n_interior, n_interior); }
  Matrix k_bb() const { return stiffness.topLeftCorner(n_boundary, n_boundary); }
  Matrix k_bi() const { return stiffness.topRightCorner(n_boundary, n_interior); }
  Matrix k_ib() const { return stiffness.bottomLeftCorner(n_interior, n_boundary); }
  Matrix k_ii() const { return stiffness.bottomRightCorner(n_interior, n_interior); }
};

inline constexpr double kSymmetryTolerance = 1e-12;

/// Checks the partition counts, symmetry and positive definiteness.
inline void validate(const PartitionedSystem& system) {
  const Index n = system.size();
  detail::require(system.n_boundary >= 1, "system needs at least one boundary DOF");
  detail::require(system.n_interior >= 1, "system needs at least one interior DOF (n_I >= 1)");
  detail::require(system.n_boundary <= system.n_interior,
                  "contact zone too large: n_B = " + std::to_string(system.n_boundary) +
                      " exceeds n_I = " + std::to_string(system.n_interior));
  detail::require(system.mass.rows() == n && system.mass.cols() == n,
                  "mass matrix is " + detail::dims(system.mass) + ", expected " +
                      std::to_string(n) + "x" + std::to_string(n));
  detail::require(system.stiffness.rows() == n && system.stiffness.cols() == n,
                  "stiffness matrix is " + detail::dims(system.stiffness) + ", expected " +
                      std::to_string(n) + "x" + std::to_string(n));
  detail::require(system.dof_labels.empty() || Index(system.dof_labels.size()) == n,
                  "dof label count does not match system size");
  for (const auto& [name, matrix] :
       {std::pair<const char*, const Matrix*>{"mass", &system.mass},
        std::pair<const char*, const Matrix*>{"stiffness", &system.stiffness}}) {
    const double asym = relative_asymmetry(*matrix);
    if (asym > kSymmetryTolerance)
      throw ConfigError(std::string(name) + " matrix is not symmetric (relative asymmetry " +
                        std::to_string(asym) + ")");
    const double lmin = min_eigenvalue(*matrix);
    if (!(lmin > 0.0))
      throw ConfigError(std::string(name) + " matrix is not positive definite (smallest eigenvalue " +
                        std::to_string(lmin) + ")");
  }
}

/// Time-dependent full-order load.
struct ForceSignal {
  std::function<Vector(double)> sampler;
  Index dimension = 0;
  std::string description;

  Vector operator()(double t) const { return sampler(t); }
};

/// f(t) = amplitude * sin(2 pi frequency t) on every loaded DOF.
inline ForceSignal harmonic_force(double amplitude, double frequency,
                                  const std::vector<Index>& loaded_dofs, Index dimension) {
  detail::require(frequency > 0.0, "harmonic load frequency must be positive");
  detail::require(!loaded_dofs.empty(), "harmonic load needs at least one loaded DOF");
  for (Index dof : loaded_dofs)
    detail::require(dof >= 0 && dof < dimension,
                    "loaded DOF " + std::to_string(dof) + " outside system of size " +
                        std::to_string(dimension));
  ForceSignal signal;
  signal.dimension = dimension;
  signal.description = "harmonic amplitude=" + std::to_string(amplitude) +
                       " frequency=" + std::to_string(frequency) +
                       " dofs=" + std::to_string(loaded_dofs.size());
  signal.sampler = [amplitude, frequency, loaded_dofs, dimension](double t) {
    Vector f = Vector::Zero(dimension);
    const double value = amplitude * std::sin(2.0 * std::numbers::pi * frequency * t);
    for (Index dof : loaded_dofs) f(dof) = value;
    return f;
  };
  return signal;
}

/// Euler-Bernoulli cantilever above a rigid plane.
struct BeamSpec {
  double length = 10.0;
  int element_count = 50;
  double youngs_modulus = 210e9;
  double poisson_ratio = 0.3;
  double density = 7860.0;
  double width = 0.1;
  double height = 0.1;
  int contact_node_count = 3;
  double obstacle_gap = 1.0;
};

inline void validate(const BeamSpec& spec) {
  detail::require(spec.length > 0.0, "beam length must be positive");
  detail::require(spec.element_count >= 2, "beam needs at least two elements");
  detail::require(spec.youngs_modulus > 0.0, "Young's modulus must be positive");
  detail::require(spec.poisson_ratio > 0.0 && spec.poisson_ratio < 0.5,
                  "Poisson's ratio must lie in (0, 0.5)");
  detail::require(spec.density > 0.0, "density must be positive");
  detail::require(spec.width > 0.0 && spec.height > 0.0, "cross section must be positive");
  detail::require(spec.contact_node_count >= 1, "at least one contact node is required");
  detail::require(spec.contact_node_count < spec.element_count,
                  "contact_node_count must be smaller than element_count");
  detail::require(spec.obstacle_gap > 0.0, "obstacle gap must be positive");
}

namespace detail {

/// Reorders DOFs so that `boundary` comes first (in the given order) and all
/// remaining DOFs follow in ascending order. Returns old indices in new order.
inline std::vector<Index> boundary_first_order(Index n, const std::vector<Index>& boundary) {
  std::vector<Index> order(boundary.begin(), boundary.end());
  std::set<Index> seen(boundary.begin(), boundary.end());
  require(seen.size() == boundary.size(), "duplicate boundary DOF index");
  for (Index b : boundary)
    require(b >= 0 && b < n, "boundary DOF index " + std::to_string(b) + " out of range");
  for (Index i = 0; i < n; ++i)
    if (!seen.count(i)) order.push_back(i);
  return order;
}

inline Matrix permute_symmetric(const Matrix& a, const std::vector<Index>& order) {
  const Index n = Index(order.size());
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) out(i, j) = a(order[i], order[j]);
  return out;
}

}  // namespace detail

/// Assembles a clamped-free Euler-Bernoulli beam with consistent mass.
/// Deflection DOFs of the last `contact_node_count` nodes form the boundary
/// block; the plane lies `obstacle_gap` below, deflection is positive upward.
inline std::pair<PartitionedSystem, ContactConstraints> build_cantilever_beam(
    const BeamSpec& spec) {
  validate(spec);
  const int elements = spec.element_count;
  const Index n_free = 2 * Index(elements);  // node 0 is clamped
  const double le = spec.length / elements;
  const double area = spec.width * spec.height;
  const double inertia = spec.width * std::pow(spec.height, 3) / 12.0;
  const double ei = spec.youngs_modulus * inertia;
  const double rho_a = spec.density * area;

  Eigen::Matrix4d ke;
  ke << 12, 6 * le, -12, 6 * le,
        6 * le, 4 * le * le, -6 * le, 2 * le * le,
        -12, -6 * le, 12, -6 * le,
        6 * le, 2 * le * le, -6 * le, 4 * le * le;
  ke *= ei / (le * le * le);
  Eigen::Matrix4d me;
  me << 156, 22 * le, 54, -13 * le,
        22 * le, 4 * le * le, 13 * le, -3 * le * le,
        54, 13 * le, 156, -22 * le,
        -13 * le, -3 * le * le, -22 * le, 4 * le * le;
  me *= rho_a * le / 420.0;

  // Natural ordering of free DOFs: node k (1..N) owns 2(k-1) and 2(k-1)+1.
  Matrix k_nat = Matrix::Zero(n_free, n_free);
  Matrix m_nat = Matrix::Zero(n_free, n_free);
  for (int e = 0; e < elements; ++e) {
    const Index global[4] = {2 * Index(e) - 2, 2 * Index(e) - 1, 2 * Index(e), 2 * Index(e) + 1};
    for (int a = 0; a < 4; ++a) {
      if (global[a] < 0) continue;
      for (int b = 0; b < 4; ++b) {
        if (global[b] < 0) continue;
        k_nat(global[a], global[b]) += ke(a, b);
        m_nat(global[a], global[b]) += me(a, b);
      }
    }
  }

  std::vector<Index> boundary;
  for (int node = elements - spec.contact_node_count + 1; node <= elements; ++node)
    boundary.push_back(2 * Index(node - 1));
  const auto order = detail::boundary_first_order(n_free, boundary);

  PartitionedSystem system;
  system.mass = detail::permute_symmetric(m_nat, order);
  system.stiffness = detail::permute_symmetric(k_nat, order);
  system.n_boundary = Index(boundary.size());
  system.n_interior = n_free - system.n_boundary;
  for (Index old : order) system.dof_labels.push_back({int(old / 2) + 1, int(old % 2)});
  validate(system);

  ContactConstraints constraints;
  constraints.c_matrix = Matrix::Identity(system.n_boundary, system.n_boundary);
  constraints.offsets = Vector::Constant(system.n_boundary, spec.obstacle_gap);
  return {std::move(system), std::move(constraints)};
}

/// Chain of point masses: spring i joins masses i and i+1, the last spring
/// anchors the last mass to the wall.
inline std::pair<PartitionedSystem, ContactConstraints> build_mass_spring_chain(
    const std::vector<double>& masses, const std::vector<double>& spring_constants,
    const std::vector<Index>& boundary_indices, const std::vector<double>& obstacle_gaps) {
  const Index n = Index(masses.size());
  detail::require(n >= 1, "chain needs at least one mass");
  detail::require(Index(spring_constants.size()) == n,
                  "chain is not anchored: expected " + std::to_string(n) +
                      " springs (one per mass, the last one to the wall), got " +
                      std::to_string(spring_constants.size()));
  detail::require(obstacle_gaps.size() == boundary_indices.size(),
                  "one obstacle gap per boundary mass is required");
  for (double m : masses) detail::require(m > 0.0, "masses must be positive");
  for (double k : spring_constants) detail::require(k > 0.0, "spring constants must be positive");

  Matrix k_nat = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) {
    const double k = spring_constants[i];
    k_nat(i, i) += k;
    k_nat(i + 1, i + 1) += k;
    k_nat(i, i + 1) -= k;
    k_nat(i + 1, i) -= k;
  }
  k_nat(n - 1, n - 1) += spring_constants[n - 1];
  Matrix m_nat = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) m_nat(i, i) = masses[i];

  const auto order = detail::boundary_first_order(n, boundary_indices);
  PartitionedSystem system;
  system.mass = detail::permute_symmetric(m_nat, order);
  system.stiffness = detail::permute_symmetric(k_nat, order);
  system.n_boundary = Index(boundary_indices.size());
  system.n_interior = n - system.n_boundary;
  for (Index old : order) system.dof_labels.push_back({int(old), 0});
  validate(system);

  ContactConstraints constraints;
  constraints.c_matrix = Matrix::Identity(system.n_boundary, system.n_boundary);
  constraints.offsets = Eigen::Map<const Vector>(obstacle_gaps.data(), Index(obstacle_gaps.size()));
  validate(constraints, system.n_boundary);
  return {std::move(system), std::move(constraints)};
}

/// Constrained modes: column j is the interior response to a unit
/// displacement of boundary DOF j with the other boundary DOFs held fixed.
/// Two refinement sweeps with the residual accumulated in long double bring
/// the result to near working accuracy even for the stiff beam blocks, where
/// a plain Cholesky solve loses about four digits.
inline Matrix static_modes(const PartitionedSystem& system) {
  const Matrix k_ii = system.k_ii();
  const Matrix rhs = -system.k_ib();
  Eigen::LLT<Matrix> factor(k_ii);
  if (factor.info() != Eigen::Success)
    throw NumericalError("interior stiffness block K_II is singular or indefinite");
  Matrix x = factor.solve(rhs);
  using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LongMatrix k_long = k_ii.cast<long double>();
  const LongMatrix rhs_long = rhs.cast<long double>();
  for (int sweep = 0; sweep < 2; ++sweep) {
    const Matrix residual = (rhs_long - k_long * x.cast<long double>()).cast<double>();
    x += factor.solve(residual);
  }
  return x;
}

/// Intrusive Craig-Bampton projection; the oracle the non-intrusive
/// pipeline is judged against.
inline ReducedModel intrusive_craig_bampton(const PartitionedSystem& system, Index rank) {
  detail::require(rank >= 1 && rank <= system.n_interior,
                  "Craig-Bampton rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(system.n_interior) + "]");
  ReducedModel model;
  model.coupling = static_modes(system);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> modes(system.k_ii(), system.m_ii());
  if (modes.info() != Eigen::Success)
    throw NumericalError("generalized eigenproblem (K_II, M_II) failed");
  Matrix basis = modes.eigenvectors().leftCols(rank);
  fix_column_signs(basis);
  model.interior_basis = basis;
  model.global_basis = assemble_global_basis(model.coupling, model.interior_basis);
  model.m_hat = symmetrize(model.global_basis.transpose() * system.mass * model.global_basis);
  model.k_hat = symmetrize(model.global_basis.transpose() * system.stiffness * model.global_basis);
  model.provenance["method"] = "intrusive-craig-bampton";
  model.provenance["rank"] = std::to_string(rank);
  return model;
}

}  // namespace contactrom
