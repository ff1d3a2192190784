#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace contactrom;
using support::rel;

namespace {

ForceSignal constant_force(const Vector& value) {
  ForceSignal f;
  f.dimension = value.size();
  f.sampler = [value](double) { return value; };
  f.description = "constant";
  return f;
}

// Two decoupled unit oscillators; each row follows the scalar recursion.
PartitionedSystem unit_pair() {
  PartitionedSystem s;
  s.n_boundary = 1;
  s.n_interior = 1;
  s.mass = Matrix::Identity(2, 2);
  s.stiffness = Matrix::Identity(2, 2);
  return s;
}

}  // namespace

TEST(SimulateFree, ScalarHandRecursion) {
  const Trajectory t =
      simulate_free(unit_pair(), constant_force(Vector::Ones(2)), Vector::Zero(2), Vector::Zero(2),
                    0.1, 2);
  ASSERT_EQ(t.steps(), 3);
  EXPECT_EQ(t.states.col(1), Vector::Zero(2));
  // (1 + h^2) q2 = h^2 * 1 + 2*0 - 0
  EXPECT_NEAR(t.states(0, 2), 0.01 / 1.01, 1e-17);
  EXPECT_NEAR(t.states(0, 2), 9.9010e-3, 1e-7);
  EXPECT_EQ(t.states(0, 2), t.states(1, 2));
}

TEST(SimulateFree, ExplicitStartUsesVelocity) {
  Vector v0(2);
  v0 << 0.5, -2.0;
  Vector q0(2);
  q0 << 1.0, 0.25;
  const Trajectory t =
      simulate_free(unit_pair(), constant_force(Vector::Zero(2)), q0, v0, 0.1, 4);
  EXPECT_EQ(t.states.col(0), q0);
  EXPECT_EQ(t.states.col(1), q0 + 0.1 * v0);
}

TEST(SimulateFree, ZeroDynamicsStayZero) {
  const auto [s, c] = support::three_mass_chain();
  const Trajectory t = simulate_free(s, constant_force(Vector::Zero(3)), Vector::Zero(3),
                                     Vector::Zero(3), 0.05, 40);
  EXPECT_EQ(t.states, Matrix::Zero(3, 41));
}

TEST(SimulateFree, FirstOrderConvergenceAgainstModalSolution) {
  const auto [s, c] = support::three_mass_chain();
  const double omega = 2.0 * std::numbers::pi * 0.16;
  const ForceSignal f = harmonic_force(1.0, 0.16, {2}, 3);
  const double horizon = 5.0;
  const Vector exact = support::exact_harmonic(s, 1.0, omega, 2, horizon);
  std::vector<double> errors;
  for (double h : {0.02, 0.01, 0.005, 0.0025}) {
    const Index steps = Index(std::llround(horizon / h));
    const Trajectory t = simulate_free(s, f, Vector::Zero(3), Vector::Zero(3), h, steps);
    errors.push_back((t.states.col(steps) - exact).norm());
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    EXPECT_NEAR(errors[i] / errors[i + 1], 2.0, 0.3) << "halving " << i;
}

TEST(SimulateFree, RecursionResidualOnRandomSystems) {
  auto g = support::rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = support::uniform_index(g, 2, 15);
    const auto s = support::random_dense_system(g, 1, n - 1 > 0 ? n - 1 : 1);
    const double h = support::uniform(g, 1e-3, 0.5);
    const ForceSignal f = harmonic_force(support::uniform(g, -5, 5), support::uniform(g, 0.05, 2.0),
                                         {0, s.size() - 1}, s.size());
    const Vector q0 = support::gaussian(g, s.size(), 1);
    const Vector v0 = support::gaussian(g, s.size(), 1);
    const Trajectory t = simulate_free(s, f, q0, v0, h, 30);
    for (Index i = 2; i < t.steps(); ++i) {
      const Vector r = s.mass * (t.states.col(i) - 2 * t.states.col(i - 1) + t.states.col(i - 2)) +
                       h * h * s.stiffness * t.states.col(i) - h * h * t.forces.col(i);
      const double bound = 1e-9 * (h * h * t.forces.col(i)).norm() + 1e-12 *
                           std::max(1.0, (s.mass * t.states.col(i)).norm());
      EXPECT_LE(r.norm(), bound) << "step " << i;
    }
  }
}

TEST(SimulateFree, RefactorizationIsBitwiseIdentical) {
  auto g = support::rng(22);
  const auto s = support::random_dense_system(g, 2, 6);
  const ForceSignal f = harmonic_force(3.0, 0.4, {0, 3, 7}, 8);
  const Vector q0 = support::gaussian(g, 8, 1);
  const Trajectory a = simulate_free(s, f, q0, Vector::Zero(8), 0.05, 50);
  const Trajectory b = simulate_free(s, f, q0, Vector::Zero(8), 0.05, 50, {true});
  EXPECT_TRUE(a.states == b.states);
}

TEST(SimulateFree, RejectsBadArguments) {
  const auto s = unit_pair();
  const ForceSignal f = constant_force(Vector::Ones(2));
  EXPECT_THROW(simulate_free(s, f, Vector::Zero(2), Vector::Zero(2), 0.0, 5), ConfigError);
  EXPECT_THROW(simulate_free(s, f, Vector::Zero(2), Vector::Zero(2), 0.1, 1), ConfigError);
  EXPECT_THROW(simulate_free(s, f, Vector::Zero(3), Vector::Zero(2), 0.1, 5), ConfigError);
  EXPECT_THROW(simulate_free(s, constant_force(Vector::Ones(3)), Vector::Zero(2), Vector::Zero(2), 0.1, 5),
               ConfigError);
}

TEST(SimulateFixedBoundary, DecoupledSystemMatchesInteriorBlock) {
  auto g = support::rng(23);
  PartitionedSystem s;
  s.n_boundary = 2;
  s.n_interior = 4;
  s.mass = Matrix::Zero(6, 6);
  s.stiffness = Matrix::Zero(6, 6);
  s.mass.topLeftCorner(2, 2) = support::random_spd(g, 2);
  s.mass.bottomRightCorner(4, 4) = support::random_spd(g, 4);
  s.stiffness.topLeftCorner(2, 2) = support::random_spd(g, 2);
  s.stiffness.bottomRightCorner(4, 4) = support::random_spd(g, 4);
  const ForceSignal f = harmonic_force(2.0, 0.3, {0, 2, 5}, 6);
  const Vector q0 = support::gaussian(g, 6, 1);
  const Vector v0 = support::gaussian(g, 6, 1);
  const Trajectory full = simulate_free(s, f, q0, v0, 0.1, 30);
  const Trajectory fixed = simulate_fixed_boundary(s, f, q0.tail(4), v0.tail(4), 0.1, 30);
  ASSERT_EQ(fixed.dimension(), 4);
  EXPECT_LE((fixed.states - full.states.bottomRows(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(fixed.forces, full.forces.bottomRows(4));
}

TEST(SimulateFixedBoundary, ZeroLoadZeroTrajectory) {
  const auto [s, c] = support::three_mass_chain();
  const ForceSignal f = harmonic_force(1.0, 0.2, {0}, 3);  // boundary load only
  const Trajectory t = simulate_fixed_boundary(s, f, Vector::Zero(2), Vector::Zero(2), 0.1, 20);
  EXPECT_EQ(t.states, Matrix::Zero(2, 21));
}

TEST(SimulateFixedBoundary, MatchesDenseRecursionOracle) {
  const auto [s, c] = support::three_mass_chain();
  // Unit step on n2 (position 2 in boundary-first order), switched on after t = 0.
  ForceSignal step;
  step.dimension = 3;
  step.sampler = [](double t) {
    Vector f = Vector::Zero(3);
    if (t > 0.0) f(2) = 1.0;
    return f;
  };
  const double h = 0.1;
  const Index steps = 60;
  const Trajectory t = simulate_fixed_boundary(s, step, Vector::Zero(2), Vector::Zero(2), h, steps);

  // Oracle: explicit inverse of the step matrix, plain loop.
  const Matrix m = (Matrix(2, 2) << 1, 0, 0, 1).finished();
  const Matrix k = (Matrix(2, 2) << 2, -1, -1, 2).finished();
  const Matrix s_inv = (m + h * h * k).inverse();
  Matrix q = Matrix::Zero(2, steps + 1);
  for (Index j = 2; j <= steps; ++j) {
    Vector f(2);
    f << 0.0, 1.0;
    q.col(j) = s_inv * (h * h * f + m * (2 * q.col(j - 1) - q.col(j - 2)));
  }
  EXPECT_LE((t.states - q).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ContactFom, InactiveConstraintsReproduceFreeRun) {
  const auto [s, c] = support::three_mass_chain(1e6);
  const ForceSignal f = harmonic_force(1.0, 0.16, {0, 1, 2}, 3);
  const Trajectory free_run = simulate_free(s, f, Vector::Zero(3), Vector::Zero(3), 0.05, 200);
  const Trajectory contact = solve_contact_fom(s, c, f, Vector::Zero(3), Vector::Zero(3), 0.05, 200);
  ASSERT_TRUE(contact.multipliers.has_value());
  EXPECT_EQ(*contact.multipliers, Matrix::Zero(1, 201));
  EXPECT_LE((contact.states - free_run.states).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ContactFom, BeamClampsAtTheObstacle) {
  const auto cfg = support::beam_scenario();
  const auto [s, c] = build_system(cfg);
  ContactRunStats stats;
  const Trajectory t = simulate_reference(s, c, cfg, &stats);
  const Matrix& lambda = *t.multipliers;
  int contact_entries = 0;
  for (Index j = 0; j < t.steps(); ++j) {
    const Vector gap = c.gap(t.states.col(j).head(s.n_boundary));
    EXPECT_GE(gap.minCoeff(), -1e-9) << "step " << j;
    for (Index i = 0; i < c.count(); ++i) {
      EXPECT_GE(lambda(i, j), 0.0);
      if (lambda(i, j) > 0.0) {
        ++contact_entries;
        EXPECT_NEAR(t.states(i, j), -cfg.beam.obstacle_gap, 1e-9) << "node " << i << " step " << j;
      }
    }
  }
  EXPECT_GT(contact_entries, 0) << "the test load must reach the plane";
  EXPECT_LE(stats.max_complementarity, 1e-8);
  EXPECT_EQ(stats.factorizations, 1);
  EXPECT_EQ(stats.lcp_matrix_assemblies, 1);
}

TEST(ContactFom, ScalarSteadyContactBalance) {
  // Boundary DOF: M = K = 1, plane 0.5 below, constant pull of -2.
  const PartitionedSystem s = unit_pair();
  ContactConstraints c{Matrix::Identity(1, 1), Vector::Constant(1, 0.5)};
  Vector f(2);
  f << -2.0, 0.0;
  const Trajectory t =
      solve_contact_fom(s, c, constant_force(f), Vector::Zero(2), Vector::Zero(2), 0.1, 400);
  // Resting on the plane, q = -b, so K q = f + lambda gives lambda = -f - K b.
  const double expected = 2.0 - 1.0 * 0.5;
  EXPECT_NEAR(t.states(0, 400), -0.5, 1e-12);
  EXPECT_NEAR((*t.multipliers)(0, 400), expected, 1e-9);
  EXPECT_NEAR((*t.multipliers)(0, 399), expected, 1e-9);
}

TEST(ContactFom, RandomSystemsSatisfyComplementarity) {
  auto g = support::rng(24);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = support::uniform_index(g, 4, 16);
    const auto [s, c] = support::random_chain(g, n, support::uniform_index(g, 1, n / 2));
    std::vector<Index> loaded;
    for (Index i = 0; i < n; ++i) loaded.push_back(i);
    const ForceSignal f = harmonic_force(-support::uniform(g, 0.5, 3.0),
                                         support::uniform(g, 0.05, 0.3), loaded, n);
    const double h = support::uniform(g, 0.01, 0.2);
    ContactRunStats stats;
    const Trajectory t = solve_contact_fom(s, c, f, Vector::Zero(n), Vector::Zero(n), h, 150, &stats);
    const ContactReport report = contact_diagnostics(t, c);
    EXPECT_LE(report.max_gap_violation, 1e-9);
    EXPECT_EQ(report.max_negative_multiplier, 0.0);
    EXPECT_LE(report.max_complementarity, 1e-8);
    EXPECT_LE(stats.max_complementarity, 1e-8);
  }
}

TEST(ContactFom, RejectsMismatchedConstraints) {
  const auto [s, c] = support::three_mass_chain();
  ContactConstraints wrong{Matrix::Identity(2, 2), Vector::Ones(2)};
  const ForceSignal f = harmonic_force(1.0, 0.1, {0}, 3);
  EXPECT_THROW(solve_contact_fom(s, wrong, f, Vector::Zero(3), Vector::Zero(3), 0.1, 5), ConfigError);
  EXPECT_THROW(solve_contact_fom(s, c, f, Vector::Zero(3), Vector::Zero(3), 0.1, 1), ConfigError);
}

TEST(TrajectoryType, ValidationRules) {
  Trajectory t;
  t.h = 0.1;
  t.states = Matrix::Zero(2, 3);
  t.forces = Matrix::Zero(2, 3);
  EXPECT_NO_THROW(validate(t));
  t.multipliers = Matrix::Constant(1, 3, -1.0);
  EXPECT_THROW(validate(t), ConfigError);
  t.multipliers.reset();
  t.states = Matrix::Zero(2, 2);
  t.forces = Matrix::Zero(2, 2);
  EXPECT_THROW(validate(t), ConfigError);
}
