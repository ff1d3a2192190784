#pragma once

#include "contactrom/pipeline.hpp"

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace support {

using contactrom::Index;
using contactrom::Matrix;
using contactrom::Vector;

// CONTACTROM_SEED overrides the default so a failing draw can be replayed.
inline std::uint64_t base_seed() {
  if (const char* env = std::getenv("CONTACTROM_SEED")) return std::strtoull(env, nullptr, 10);
  return 20240611ULL;
}

inline std::mt19937_64 rng(std::uint64_t salt) {
  std::seed_seq seq{base_seed(), salt};
  return std::mt19937_64(seq);
}

inline Matrix gaussian(std::mt19937_64& g, Index rows, Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = n(g);
  return a;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Index uniform_index(std::mt19937_64& g, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(g);
}

// G G^T / n + shift I: well conditioned, eigenvalues above `shift`.
inline Matrix random_spd(std::mt19937_64& g, Index n, double shift = 0.5) {
  const Matrix a = gaussian(g, n, n);
  Matrix s = a * a.transpose() / double(n) + shift * Matrix::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

inline double rel(const Matrix& a, const Matrix& b) {
  const double nb = b.norm();
  return nb == 0.0 ? a.norm() : (a - b).norm() / nb;
}

inline double min_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

inline double norm2(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

// wall - k - n2 - k - n1 - k - n0, contact at n0.
inline std::pair<contactrom::PartitionedSystem, contactrom::ContactConstraints> three_mass_chain(
    double gap = 1.0) {
  return contactrom::build_mass_spring_chain({1, 1, 1}, {1, 1, 1}, {0}, {gap});
}

inline std::pair<contactrom::PartitionedSystem, contactrom::ContactConstraints> random_chain(
    std::mt19937_64& g, Index n, Index n_boundary) {
  std::vector<double> masses, springs, gaps;
  for (Index i = 0; i < n; ++i) {
    masses.push_back(uniform(g, 0.5, 2.0));
    springs.push_back(uniform(g, 0.5, 2.0));
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[std::size_t(i)] = i;
  std::shuffle(all.begin(), all.end(), g);
  std::vector<Index> boundary(all.begin(), all.begin() + n_boundary);
  for (Index i = 0; i < n_boundary; ++i) gaps.push_back(uniform(g, 0.1, 1.0));
  return contactrom::build_mass_spring_chain(masses, springs, boundary, gaps);
}

// Dense SPD system with arbitrary coupling blocks.
inline contactrom::PartitionedSystem random_dense_system(std::mt19937_64& g, Index n_boundary,
                                                         Index n_interior) {
  contactrom::PartitionedSystem s;
  s.n_boundary = n_boundary;
  s.n_interior = n_interior;
  s.mass = random_spd(g, n_boundary + n_interior);
  s.stiffness = random_spd(g, n_boundary + n_interior);
  return s;
}

struct BruteForce {
  Vector lambda;
  int candidates_ok = 0;
};

// Enumerates all 2^m active sets: lambda_S = -A_SS^-1 b_S, zero elsewhere,
// accepted when lambda >= 0 and w = b + A lambda >= 0 up to `tol`.
inline std::optional<BruteForce> lcp_brute_force(const Matrix& a, const Vector& b,
                                                 double tol = 1e-10) {
  const Index m = b.size();
  std::optional<BruteForce> best;
  double best_violation = 0.0;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Index> s;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) s.push_back(i);
    Vector lambda = Vector::Zero(m);
    if (!s.empty()) {
      Matrix ass(Index(s.size()), Index(s.size()));
      Vector bs(Index(s.size()));
      for (std::size_t i = 0; i < s.size(); ++i) {
        bs(Index(i)) = b(s[i]);
        for (std::size_t j = 0; j < s.size(); ++j) ass(Index(i), Index(j)) = a(s[i], s[j]);
      }
      const Vector ls = ass.fullPivLu().solve(-bs);
      for (std::size_t i = 0; i < s.size(); ++i) lambda(s[i]) = ls(Index(i));
    }
    const Vector w = b + a * lambda;
    const double violation = std::max({0.0, -lambda.minCoeff(), -w.minCoeff()}) / scale;
    if (violation > tol) continue;
    if (!best) {
      best = BruteForce{lambda, 1};
      best_violation = violation;
    } else {
      ++best->candidates_ok;
      if (violation < best_violation) {
        best->lambda = lambda;
        best_violation = violation;
      }
    }
  }
  return best;
}

// Exact response of M q'' + K q = a sin(W t) e_dof from rest, by modal
// superposition with the generalized eigenvectors.
inline Vector exact_harmonic(const contactrom::PartitionedSystem& s, double amplitude,
                             double omega_load, Index dof, double t) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> modes(s.stiffness, s.mass);
  const Matrix phi = modes.eigenvectors();
  Vector eta(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const double w = std::sqrt(modes.eigenvalues()(i));
    const double g = amplitude * phi(dof, i);
    eta(i) = g / (w * w - omega_load * omega_load) *
             (std::sin(omega_load * t) - omega_load / w * std::sin(w * t));
  }
  return phi * eta;
}

// Analytic reduced trajectories for the intrusive Craig-Bampton model of a
// 10-mass unit chain (n_B = 1, r = 3). Coordinate j carries sin(w_j t + p_j)
// and 0.5 cos(v_j t) with eight distinct frequencies, so [Qdd^T, Q^T] has
// full column rank 8. Forces come from the full-order equation
// M q'' + K q with q = V q_hat, then projected with V^T.
struct ManufacturedChain {
  contactrom::PartitionedSystem system;
  contactrom::ReducedModel intrusive;
  contactrom::ReducedTrainingData global;  // all n_B + r coordinates
  Matrix interior_q, interior_q_ddot, interior_f;  // fixed-boundary analogue, r rows
};

inline ManufacturedChain manufactured_chain(Index samples = 200, double h = 0.1) {
  auto [system, constraints] = contactrom::build_mass_spring_chain(
      std::vector<double>(10, 1.0), std::vector<double>(10, 1.0), {0}, {1.0});
  ManufacturedChain out;
  out.system = system;
  out.intrusive = contactrom::intrusive_craig_bampton(system, 3);
  const Index n = 4;
  const double w[4] = {0.31, 0.57, 0.83, 1.19};
  const double v[4] = {0.13, 0.44, 0.71, 1.02};
  const double p[4] = {0.2, 1.1, 2.3, 0.7};
  auto fill = [&](Matrix& q, Matrix& qdd, double shift) {
    q.resize(n, samples);
    qdd.resize(n, samples);
    for (Index j = 0; j < samples; ++j) {
      const double t = double(j) * h;
      for (Index i = 0; i < n; ++i) {
        const double wi = w[i] * (1.0 + shift), vi = v[i] * (1.0 - shift);
        q(i, j) = std::sin(wi * t + p[i]) + 0.5 * std::cos(vi * t);
        qdd(i, j) = -wi * wi * std::sin(wi * t + p[i]) - 0.5 * vi * vi * std::cos(vi * t);
      }
    }
  };
  const Matrix& basis = out.intrusive.global_basis;
  Matrix q, qdd;
  fill(q, qdd, 0.0);
  const Matrix f_full = system.mass * basis * qdd + system.stiffness * basis * q;
  out.global.q = q;
  out.global.q_ddot = qdd;
  out.global.f = basis.transpose() * f_full;
  out.global.h = h;

  // Fixed-boundary analogue: interior coordinates only, boundary clamped.
  Matrix qi, qddi;
  fill(qi, qddi, 0.05);
  const Matrix& vi = out.intrusive.interior_basis;
  out.interior_q = qi.bottomRows(3);
  out.interior_q_ddot = qddi.bottomRows(3);
  const Matrix fi_full = system.m_ii() * vi * out.interior_q_ddot + system.k_ii() * vi * out.interior_q;
  out.interior_f = vi.transpose() * fi_full;
  return out;
}

// Cantilever scenario used by the end-to-end checks; demo/beam.ini holds
// the same numbers.
inline contactrom::ExperimentConfig beam_scenario(
    contactrom::CouplingMethod coupling = contactrom::CouplingMethod::static_modes) {
  contactrom::ExperimentConfig cfg;
  cfg.source = contactrom::ModelSource::beam;
  cfg.beam.length = 10.0;
  cfg.beam.element_count = 50;
  cfg.beam.youngs_modulus = 210e9;
  cfg.beam.poisson_ratio = 0.3;
  cfg.beam.density = 7860.0;
  cfg.beam.width = 0.3;
  cfg.beam.height = 0.3;
  cfg.beam.contact_node_count = 4;
  cfg.beam.obstacle_gap = 0.13;
  cfg.training = {-3000.0, 0.16, "deflection", 125};
  cfg.test = {-3000.0, 0.32, "deflection", 63};
  cfg.h = 0.05;
  cfg.rank = 2;
  cfg.r2 = 2;
  cfg.coupling = coupling;
  return cfg;
}

inline contactrom::ExperimentConfig chain_scenario() {
  contactrom::ExperimentConfig cfg;
  cfg.source = contactrom::ModelSource::chain;
  cfg.chain.masses.assign(10, 1.0);
  cfg.chain.springs.assign(10, 1000.0);
  cfg.chain.boundary = {0};
  cfg.chain.gaps = {0.005};
  cfg.training = {-1.0, 0.05, "all", 100};
  cfg.test = {-1.0, 0.1, "all", 50};
  cfg.h = 0.2;
  cfg.rank = 3;
  return cfg;
}

}  // namespace support
