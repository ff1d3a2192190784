#pragma once

#include "contactrom/config.hpp"
#include "contactrom/coupling.hpp"
#include "contactrom/io.hpp"
#include "contactrom/metrics.hpp"
#include "contactrom/model.hpp"
#include "contactrom/opinf.hpp"
#include "contactrom/rom_contact.hpp"
#include "contactrom/snapshots.hpp"
#include "contactrom/timestep.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace contactrom {

/// Runs `body`, re-raising library failures tagged with `stage`.
template <class F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, ErrorKind::io, e.what());
  }
}

struct TrainingRuns {
  Trajectory free_run;
  Trajectory fixed_run;
  SnapshotSet snapshots;
};

/// The two contact-free training runs from rest.
inline TrainingRuns simulate_training(const PartitionedSystem& system, const ExperimentConfig& cfg) {
  const ForceSignal force = make_force(system, cfg.training, cfg.source);
  const Vector zero = Vector::Zero(system.size());
  const Vector zero_i = Vector::Zero(system.n_interior);
  TrainingRuns runs;
  runs.free_run = simulate_free(system, force, zero, zero, cfg.h, cfg.training.steps);
  runs.fixed_run = simulate_fixed_boundary(system, force, zero_i, zero_i, cfg.h, cfg.training.steps);
  runs.snapshots = collect(runs.free_run, runs.fixed_run, system.n_boundary);
  return runs;
}

inline CouplingMatrix fit_coupling(CouplingMethod method, const PartitionedSystem& system,
                                   const SnapshotSet& snapshots, Index r2) {
  switch (method) {
    case CouplingMethod::full_lsq: return coupling_full_lsq(snapshots);
    case CouplingMethod::reduced_lsq: return coupling_reduced_lsq(snapshots, r2);
    case CouplingMethod::static_modes:
      return coupling_from_static_modes(static_modes(system), system.n_interior, system.n_boundary);
    case CouplingMethod::intrusive: break;
  }
  throw ConfigError("coupling method '" + to_string(method) + "' is not available in the pipeline");
}

inline PodTruncation truncation_of(const ExperimentConfig& cfg) {
  if (cfg.pod_tolerance) return PodTolerance{*cfg.pod_tolerance};
  return PodRank{cfg.rank.value_or(2)};
}

inline Trajectory simulate_reference(const PartitionedSystem& system,
                                     const ContactConstraints& constraints,
                                     const ExperimentConfig& cfg, ContactRunStats* stats = nullptr) {
  const Vector zero = Vector::Zero(system.size());
  return solve_contact_fom(system, constraints, make_force(system, cfg.test, cfg.source), zero, zero,
                           cfg.h, cfg.test.steps, stats);
}

inline RomContactResult simulate_rom(const ReducedModel& model, const PartitionedSystem& system,
                                     const ExperimentConfig& cfg) {
  const Vector zero = Vector::Zero(system.size());
  return simulate_contact_rom(model, make_force(system, cfg.test, cfg.source), zero, zero, cfg.h,
                              cfg.test.steps);
}

struct ErrorSummary {
  ErrorCurve q_boundary;
  ErrorCurve q_interior;
  std::optional<ErrorCurve> lambda;
  ContactReport fom_contact;
  ContactReport rom_contact;
  Index event_offset = 0;  // -1: event sequences differ
};

inline ErrorSummary evaluate(const Trajectory& reference, const Trajectory& approx,
                             const ContactConstraints& constraints, Index n_boundary) {
  ErrorSummary out;
  auto [qb, lambda] = relative_error_curves(reference, approx, RowSet::boundary, n_boundary);
  out.q_boundary = std::move(qb);
  out.lambda = std::move(lambda);
  out.q_interior = relative_error_curves(reference, approx, RowSet::interior, n_boundary).first;
  out.fom_contact = contact_diagnostics(reference, constraints);
  out.rom_contact = contact_diagnostics(approx, constraints);
  out.event_offset = max_event_offset(out.fom_contact, out.rom_contact);
  return out;
}

struct ExperimentResult {
  PartitionedSystem system;
  ContactConstraints constraints;
  TrainingRuns training;
  InferenceReport report;
  ReducedModel model;
  Trajectory reference;
  ContactRunStats reference_stats;
  RomContactResult rom;
  ErrorSummary errors;
};

/// Whole experiment in memory: training runs, inference, FOM and ROM contact
/// runs on the test load, error curves.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r;
  std::tie(r.system, r.constraints) = build_system(cfg);
  r.training = run_stage("simulate_training", [&] { return simulate_training(r.system, cfg); });
  const CouplingMatrix coupling = run_stage(
      "coupling", [&] { return fit_coupling(cfg.coupling, r.system, r.training.snapshots, cfg.r2); });
  r.model = run_stage("infer", [&] {
    return infer_reduced_model(r.training.snapshots, coupling, truncation_of(cfg), r.constraints,
                               cfg.epsilon, &r.report);
  });
  r.reference = run_stage("fom_contact", [&] {
    return simulate_reference(r.system, r.constraints, cfg, &r.reference_stats);
  });
  r.rom = run_stage("rom_contact", [&] { return simulate_rom(r.model, r.system, cfg); });
  r.errors = run_stage("metrics", [&] {
    return evaluate(r.reference, r.rom.lifted, r.constraints, r.system.n_boundary);
  });
  return r;
}

// ---------------------------------------------------------------------------
// Persistence

namespace artifacts {

namespace fs = std::filesystem;

inline std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  io::write_key_values(path, text);
}

inline nlohmann::json snapshot_header(const SnapshotSet& s, const std::string& name) {
  return {{"name", name}, {"h", s.h}, {"k", s.columns()}, {"n_B", s.n_boundary()},
          {"n_I", s.n_interior()}};
}

inline void write_training(const fs::path& dir, const TrainingRuns& runs) {
  const fs::path t = dir / "training";
  io::write_trajectory_csv(t / "free.csv", runs.free_run);
  io::write_trajectory_csv(t / "fixed.csv", runs.fixed_run);
  const SnapshotSet& s = runs.snapshots;
  for (const auto& [name, m] :
       {std::pair<const char*, const Matrix*>{"Q_B", &s.q_boundary}, {"Q_I", &s.q_interior},
        {"F_B", &s.f_boundary}, {"F_I", &s.f_interior}, {"Q1", &s.q_fixed}, {"F1", &s.f_fixed}})
    io::write_snapshot_csv(t / (std::string(name) + ".csv"), *m, snapshot_header(s, name));
}

inline SnapshotSet read_training(const fs::path& dir) {
  const fs::path t = dir / "training";
  nlohmann::json header;
  SnapshotSet s;
  s.q_boundary = io::read_snapshot_csv(t / "Q_B.csv", &header);
  s.q_interior = io::read_snapshot_csv(t / "Q_I.csv");
  s.f_boundary = io::read_snapshot_csv(t / "F_B.csv");
  s.f_interior = io::read_snapshot_csv(t / "F_I.csv");
  s.q_fixed = io::read_snapshot_csv(t / "Q1.csv");
  s.f_fixed = io::read_snapshot_csv(t / "F1.csv");
  if (!header.contains("h")) throw IoError("snapshot header in '" + (t / "Q_B.csv").string() + "' lacks h");
  s.h = header["h"].get<double>();
  const Index k = s.columns();
  for (const Matrix* m : {&s.q_interior, &s.f_boundary, &s.f_interior, &s.q_fixed, &s.f_fixed})
    if (m->cols() != k) throw IoError("snapshot files in '" + t.string() + "' differ in column count");
  return s;
}

inline void write_coupling(const fs::path& dir, const CouplingMatrix& c) {
  io::write_matrix_market(dir / "rom" / "phi.mtx", c.phi);
  write_text(dir / "rom" / "phi.txt",
             "method = " + to_string(c.method) + "\nresidual = " + fmt(c.residual) +
                 "\ndata_rank = " + std::to_string(c.data_rank) +
                 "\nunderdetermined = " + (c.underdetermined ? "true" : "false") + "\n");
}

inline void write_model(const fs::path& dir, const ReducedModel& model, const InferenceReport* report) {
  const fs::path rom = dir / "rom";
  io::write_matrix_market(rom / "M_hat.mtx", model.m_hat);
  io::write_matrix_market(rom / "K_hat.mtx", model.k_hat);
  io::write_matrix_market(rom / "V_I.mtx", model.interior_basis);
  io::write_matrix_market(rom / "V.mtx", model.global_basis);
  io::write_matrix_market(rom / "phi.mtx", model.coupling);
  io::write_matrix_market(rom / "C_B.mtx", model.constraints.c_matrix);
  io::write_vector(rom / "b.txt", model.constraints.offsets);
  std::string text = "epsilon = " + fmt(model.spd_margin) + "\n";
  for (const auto& [key, value] : model.provenance) text += key + " = " + value + "\n";
  write_text(rom / "model.txt", text);
  if (report) {
    io::write_matrix_market(rom / "M_II.mtx", report->interior.m);
    io::write_matrix_market(rom / "K_II.mtx", report->interior.k);
    io::write_vector(rom / "singular_values.txt", report->interior_basis.singular_values);
    write_text(rom / "interior_fit.txt", format_diagnostics(report->interior.diagnostics));
    write_text(rom / "global_fit.txt", format_diagnostics(report->global.diagnostics));
  }
}

inline ReducedModel read_model(const fs::path& dir) {
  const fs::path rom = dir / "rom";
  ReducedModel model;
  model.m_hat = io::read_matrix_market(rom / "M_hat.mtx");
  model.k_hat = io::read_matrix_market(rom / "K_hat.mtx");
  model.interior_basis = io::read_matrix_market(rom / "V_I.mtx");
  model.coupling = io::read_matrix_market(rom / "phi.mtx");
  model.global_basis = assemble_global_basis(model.coupling, model.interior_basis);
  model.constraints.c_matrix = io::read_matrix_market(rom / "C_B.mtx");
  model.constraints.offsets = io::read_vector(rom / "b.txt");
  for (const auto& [key, value] : io::read_key_values(rom / "model.txt")) {
    if (key == "epsilon")
      model.spd_margin = std::stod(value);
    else
      model.provenance[key] = value;
  }
  const Index n = model.n_boundary() + model.rank();
  if (model.m_hat.rows() != n || model.m_hat.cols() != n || model.k_hat.rows() != n ||
      model.k_hat.cols() != n)
    throw IoError("reduced operators in '" + rom.string() + "' do not match n_B + r = " +
                  std::to_string(n));
  return model;
}

inline std::string lcp_report(const ContactRunStats& stats) {
  int total = 0, worst = 0;
  for (int p : stats.pivot_counts) {
    total += p;
    worst = std::max(worst, p);
  }
  return "steps = " + std::to_string(stats.pivot_counts.size()) +
         "\ntotal_pivots = " + std::to_string(total) + "\nmax_pivots = " + std::to_string(worst) +
         "\nmax_complementarity = " + fmt(stats.max_complementarity) +
         "\nfactorizations = " + std::to_string(stats.factorizations) +
         "\nlcp_matrix_assemblies = " + std::to_string(stats.lcp_matrix_assemblies) + "\n";
}

inline std::string contact_report(const ContactReport& c) {
  std::string text = "max_gap_violation = " + fmt(c.max_gap_violation) +
                     "\nmax_negative_multiplier = " + fmt(c.max_negative_multiplier) +
                     "\nmax_complementarity = " + fmt(c.max_complementarity) +
                     "\nevents = " + std::to_string(c.events.size()) + "\n";
  for (std::size_t i = 0; i < c.events.size(); ++i)
    text += "event_" + std::to_string(i) + " = " + (c.events[i].onset ? "onset " : "release ") +
            std::to_string(c.events[i].step) + "\n";
  return text;
}

inline std::string summary_text(const ErrorSummary& e, const std::string& coupling) {
  std::string text = "coupling = " + coupling + "\n";
  text += "max_eps_q_boundary = " + fmt(e.q_boundary.max()) + "\n";
  text += "mean_eps_q_boundary = " + fmt(e.q_boundary.mean()) + "\n";
  text += "max_eps_q_interior = " + fmt(e.q_interior.max()) + "\n";
  text += "mean_eps_q_interior = " + fmt(e.q_interior.mean()) + "\n";
  if (e.lambda) {
    text += "max_eps_lambda = " + fmt(e.lambda->max()) + "\n";
    text += "mean_eps_lambda = " + fmt(e.lambda->mean()) + "\n";
  } else {
    text += "max_eps_lambda = none\nmean_eps_lambda = none\n";
  }
  // Unsquared peaks for comparison with other conventions; sqrt is monotone.
  text += "max_eps_q_boundary_unsquared = " + fmt(std::sqrt(e.q_boundary.max())) + "\n";
  text += "max_eps_q_interior_unsquared = " + fmt(std::sqrt(e.q_interior.max())) + "\n";
  text += "max_eps_lambda_unsquared = " + (e.lambda ? fmt(std::sqrt(e.lambda->max())) : "none") + "\n";
  text += "fom_events = " + std::to_string(e.fom_contact.events.size()) + "\n";
  text += "rom_events = " + std::to_string(e.rom_contact.events.size()) + "\n";
  text += "event_offset = " + std::to_string(e.event_offset) + "\n";
  return text;
}

inline void write_errors(const fs::path& dir, const ErrorSummary& e, const std::string& coupling) {
  io::write_error_curve_csv(dir / "errors" / "q_boundary.csv", e.q_boundary);
  io::write_error_curve_csv(dir / "errors" / "q_interior.csv", e.q_interior);
  if (e.lambda) io::write_error_curve_csv(dir / "errors" / "lambda.csv", *e.lambda);
  auto unsquared = [](ErrorCurve c) {
    for (double& v : c.values) v = std::sqrt(v);
    c.squared = false;
    return c;
  };
  io::write_error_curve_csv(dir / "errors" / "q_boundary_unsquared.csv", unsquared(e.q_boundary));
  io::write_error_curve_csv(dir / "errors" / "q_interior_unsquared.csv", unsquared(e.q_interior));
  if (e.lambda) io::write_error_curve_csv(dir / "errors" / "lambda_unsquared.csv", unsquared(*e.lambda));
  write_text(dir / "errors" / "fom_contact.txt", contact_report(e.fom_contact));
  write_text(dir / "errors" / "rom_contact.txt", contact_report(e.rom_contact));
  write_text(dir / "summary.txt", summary_text(e, coupling));
}

}  // namespace artifacts

/// End-to-end run that writes every artifact under cfg.output.
inline ExperimentResult run_pipeline(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir = cfg.output;
  run_stage("output", [&] {
    fs::create_directories(dir);
    artifacts::write_text(dir / "config.resolved", resolved_text(cfg));
  });
  ExperimentResult r = run_experiment(cfg);
  run_stage("output", [&] {
    artifacts::write_training(dir, r.training);
    artifacts::write_coupling(dir, r.report.coupling);
    artifacts::write_model(dir, r.model, &r.report);
    io::write_trajectory_csv(dir / "test" / "fom_contact.csv", r.reference);
    artifacts::write_text(dir / "test" / "fom_lcp.txt", artifacts::lcp_report(r.reference_stats));
    io::write_trajectory_csv(dir / "test" / "rom_contact.csv", r.rom.lifted);
    io::write_trajectory_csv(dir / "test" / "rom_reduced.csv", r.rom.reduced);
    artifacts::write_text(dir / "test" / "rom_lcp.txt", artifacts::lcp_report(r.rom.stats));
    artifacts::write_errors(dir, r.errors, to_string(cfg.coupling));
  });
  return r;
}

// ---------------------------------------------------------------------------
// Comparison of finished runs

struct ComparisonRow {
  std::string quantity;  // q_B, q_I, lambda
  std::string method;
  std::string run;
  double max = 0.0;
  double mean = 0.0;
  double delta_max = 0.0;  // max minus the first run's max for the same quantity
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::string csv() const;
  std::string text() const;
};

inline std::string Comparison::csv() const {
  std::string out = "quantity,method,run,max,mean,delta_max\n";
  for (const auto& r : rows)
    out += r.quantity + "," + r.method + "," + r.run + "," + artifacts::fmt(r.max) + "," +
           artifacts::fmt(r.mean) + "," + artifacts::fmt(r.delta_max) + "\n";
  return out;
}

inline std::string Comparison::text() const {
  std::ostringstream out;
  out << std::left << std::setw(9) << "quantity" << std::setw(14) << "method" << std::setw(24) << "run"
      << std::right << std::setw(14) << "max" << std::setw(14) << "mean" << std::setw(14)
      << "delta_max" << "\n";
  out << std::setprecision(4) << std::scientific;
  for (const auto& r : rows)
    out << std::left << std::setw(9) << r.quantity << std::setw(14) << r.method << std::setw(24)
        << r.run << std::right << std::setw(14) << r.max << std::setw(14) << r.mean << std::setw(14)
        << r.delta_max << "\n";
  return out.str();
}

/// Side-by-side error table of pipeline output directories. All runs must
/// share the time grid of the first one.
inline Comparison compare_runs(const std::vector<std::filesystem::path>& dirs) {
  detail::require(!dirs.empty(), "compare needs at least one run directory");
  struct Loaded {
    std::string method, run;
    std::vector<std::pair<std::string, std::optional<ErrorCurve>>> curves;
  };
  std::vector<Loaded> runs;
  for (const auto& d : dirs) {
    Loaded l;
    l.run = d.filename().empty() ? d.parent_path().filename().string() : d.filename().string();
    const auto summary = io::read_key_values(d / "summary.txt");
    const auto it = summary.find("coupling");
    l.method = it == summary.end() ? "unknown" : it->second;
    l.curves.emplace_back("q_B", io::read_error_curve_csv(d / "errors" / "q_boundary.csv"));
    l.curves.emplace_back("q_I", io::read_error_curve_csv(d / "errors" / "q_interior.csv"));
    const auto lambda = d / "errors" / "lambda.csv";
    l.curves.emplace_back("lambda", std::filesystem::exists(lambda)
                                        ? std::optional<ErrorCurve>(io::read_error_curve_csv(lambda))
                                        : std::nullopt);
    runs.push_back(std::move(l));
  }
  const auto& grid = runs.front().curves.front().second->times;
  for (const auto& l : runs)
    for (const auto& [name, curve] : l.curves)
      if (curve && curve->times != grid)
        throw ConfigError("runs '" + runs.front().run + "' and '" + l.run +
                          "' use incompatible time grids");

  Comparison out;
  for (std::size_t q = 0; q < runs.front().curves.size(); ++q) {
    std::optional<double> first;
    for (const auto& l : runs) {
      const auto& [name, curve] = l.curves[q];
      ComparisonRow row{name, l.method, l.run};
      if (curve) {
        row.max = curve->max();
        row.mean = curve->mean();
      } else {
        row.max = row.mean = std::numeric_limits<double>::quiet_NaN();
      }
      if (!first) first = row.max;
      row.delta_max = row.max - *first;
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace contactrom
