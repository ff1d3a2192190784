#pragma once

#include "contactrom/common.hpp"
#include "contactrom/reduced_model.hpp"
#include "contactrom/timestep.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace contactrom {

enum class CurveKind { displacement, multiplier };

struct ErrorCurve {
  std::vector<double> times;
  std::vector<double> values;
  CurveKind kind = CurveKind::displacement;
  bool squared = true;

  double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
  double mean() const {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / double(values.size());
  }
};

/// Which rows of the state enter the displacement error.
enum class RowSet { full, boundary, interior };

inline std::string to_string(RowSet rows) {
  switch (rows) {
    case RowSet::full: return "full";
    case RowSet::boundary: return "boundary";
    case RowSet::interior: return "interior";
  }
  return "unknown";
}

namespace detail {

inline Matrix select_rows(const Matrix& states, RowSet rows, Index n_boundary) {
  switch (rows) {
    case RowSet::full: return states;
    case RowSet::boundary: return states.topRows(n_boundary);
    case RowSet::interior: return states.bottomRows(states.rows() - n_boundary);
  }
  return states;
}

// ||ref(t) - approx(t)||^2 / max_t ||ref(t)||^2 per column (square roots of
// both when squared is false).
inline ErrorCurve curve(const Matrix& reference, const Matrix& approx, const Trajectory& grid,
                        CurveKind kind, bool squared) {
  const Vector ref_norm2 = reference.colwise().squaredNorm().transpose();
  const double denom = ref_norm2.size() ? ref_norm2.maxCoeff() : 0.0;
  if (!(denom > 0.0))
    throw NumericalError(std::string("reference ") +
                         (kind == CurveKind::displacement ? "displacement" : "multiplier") +
                         " trajectory is identically zero; relative error undefined");
  const Vector diff2 = (reference - approx).colwise().squaredNorm().transpose();
  ErrorCurve out;
  out.kind = kind;
  out.squared = squared;
  for (Index j = 0; j < diff2.size(); ++j) {
    out.times.push_back(grid.time(j));
    out.values.push_back(squared ? diff2(j) / denom : std::sqrt(diff2(j) / denom));
  }
  return out;
}

}  // namespace detail

/// Relative error curves of an approximation against a reference run on the
/// same grid. The multiplier curve is present when both runs carry
/// multipliers; it is skipped (nullopt) when the reference never touches.
inline std::pair<ErrorCurve, std::optional<ErrorCurve>> relative_error_curves(
    const Trajectory& reference, const Trajectory& approx, RowSet rows = RowSet::full,
    Index n_boundary = 0, bool squared = true) {
  detail::require(reference.states.rows() == approx.states.rows() &&
                      reference.states.cols() == approx.states.cols(),
                  "trajectories differ in shape: " + detail::dims(reference.states) + " vs " +
                      detail::dims(approx.states));
  detail::require(reference.h == approx.h && reference.t0 == approx.t0,
                  "trajectories use different time grids");
  if (rows != RowSet::full)
    detail::require(n_boundary >= 1 && n_boundary < reference.dimension(),
                    "boundary/interior error needs 1 <= n_B < n");

  auto displacement =
      detail::curve(detail::select_rows(reference.states, rows, n_boundary),
                    detail::select_rows(approx.states, rows, n_boundary), reference,
                    CurveKind::displacement, squared);
  std::optional<ErrorCurve> multiplier;
  if (reference.multipliers && approx.multipliers && reference.multipliers->size() > 0) {
    detail::require(reference.multipliers->rows() == approx.multipliers->rows() &&
                        reference.multipliers->cols() == approx.multipliers->cols(),
                    "multiplier histories differ in shape");
    if (reference.multipliers->cwiseAbs().maxCoeff() > 0.0)
      multiplier = detail::curve(*reference.multipliers, *approx.multipliers, reference,
                                 CurveKind::multiplier, squared);
  }
  return {std::move(displacement), std::move(multiplier)};
}

struct ContactEvent {
  Index step = 0;
  bool onset = true;  // false: release
};

struct ContactReport {
  double max_gap_violation = 0.0;        // max(0, -gap), meters
  double max_negative_multiplier = 0.0;  // max(0, -lambda)
  double max_complementarity = 0.0;      // max |lambda_j^T gap_j| / (max|lambda| max(1, |b|))
  std::vector<ContactEvent> events;
  bool valid() const { return max_negative_multiplier == 0.0; }
};

/// Relative level above which a multiplier counts as an active contact.
inline constexpr double kContactActivity = 1e-8;

/// Post-hoc check of the contact conditions along a trajectory.
inline ContactReport contact_diagnostics(const Trajectory& trajectory,
                                         const ContactConstraints& constraints) {
  detail::require(trajectory.multipliers.has_value(), "contact diagnostics need multipliers");
  const Matrix& lambda = *trajectory.multipliers;
  const Index nb = constraints.c_matrix.cols();
  detail::require(lambda.rows() == constraints.count(), "multiplier rows do not match constraints");
  detail::require(lambda.cols() == trajectory.steps(), "multiplier history has the wrong length");

  ContactReport report;
  const double lambda_max = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
  const double gap_scale =
      std::max(1.0, constraints.offsets.size() ? constraints.offsets.cwiseAbs().maxCoeff() : 0.0);
  const double active = kContactActivity * lambda_max;
  bool in_contact = false;
  for (Index j = 0; j < trajectory.steps(); ++j) {
    const Vector gap = constraints.gap(trajectory.states.col(j).head(nb));
    const Vector l = lambda.col(j);
    if (gap.size()) report.max_gap_violation = std::max(report.max_gap_violation, -gap.minCoeff());
    if (l.size()) report.max_negative_multiplier = std::max(report.max_negative_multiplier, -l.minCoeff());
    if (lambda_max > 0.0)
      report.max_complementarity =
          std::max(report.max_complementarity, std::abs(l.dot(gap)) / (lambda_max * gap_scale));
    const bool touching = lambda_max > 0.0 && l.size() && l.maxCoeff() > active;
    if (touching != in_contact) {
      report.events.push_back({j, touching});
      in_contact = touching;
    }
  }
  return report;
}

/// Largest step distance between matching events of two runs, or -1 when
/// the event counts differ.
inline Index max_event_offset(const ContactReport& a, const ContactReport& b) {
  if (a.events.size() != b.events.size()) return -1;
  Index worst = 0;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    if (a.events[i].onset != b.events[i].onset) return -1;
    worst = std::max<Index>(worst, std::abs(a.events[i].step - b.events[i].step));
  }
  return worst;
}

}  // namespace contactrom
