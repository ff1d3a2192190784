#include "contactrom/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace contactrom;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::numerical: return 3;
    case ErrorKind::io: return 4;
  }
  return 1;
}

std::string kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

struct Options {
  std::string config;
  std::string out;
  std::string coupling;
  std::optional<std::int64_t> seed;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig cfg = parse_config(o.config);
  if (!o.out.empty()) cfg.output = o.out;
  if (!o.coupling.empty()) {
    cfg.coupling = parse_coupling_method(o.coupling);
    if (cfg.coupling == CouplingMethod::intrusive)
      throw ConfigError("--coupling must be full-lsq, reduced-lsq or static-modes");
  }
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

void print_summary(const fs::path& dir) {
  const auto path = dir / "summary.txt";
  if (!fs::exists(path)) return;
  for (const auto& [key, value] : io::read_key_values(path))
    std::cout << "  " << key << " = " << value << "\n";
}

int cmd_simulate_fom(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  artifacts::write_text(dir / "config.resolved", resolved_text(cfg));
  auto [system, constraints] = build_system(cfg);
  const TrainingRuns runs = run_stage("simulate_training", [&] { return simulate_training(system, cfg); });
  ContactRunStats stats;
  const Trajectory reference =
      run_stage("fom_contact", [&] { return simulate_reference(system, constraints, cfg, &stats); });
  run_stage("output", [&] {
    artifacts::write_training(dir, runs);
    io::write_trajectory_csv(dir / "test" / "fom_contact.csv", reference);
    artifacts::write_text(dir / "test" / "fom_lcp.txt", artifacts::lcp_report(stats));
  });
  std::cout << "full-order runs written to " << dir.string() << "\n";
  return 0;
}

int cmd_infer(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const fs::path dir = cfg.output;
  const SnapshotSet snapshots = run_stage("read_training", [&] { return artifacts::read_training(dir); });
  auto [system, constraints] = build_system(cfg);
  const CouplingMatrix coupling = run_stage(
      "coupling", [&] { return fit_coupling(cfg.coupling, system, snapshots, cfg.r2); });
  InferenceReport report;
  const ReducedModel model = run_stage("infer", [&] {
    return infer_reduced_model(snapshots, coupling, truncation_of(cfg), constraints, cfg.epsilon,
                               &report);
  });
  run_stage("output", [&] {
    artifacts::write_coupling(dir, coupling);
    artifacts::write_model(dir, model, &report);
  });
  std::cout << "reduced model (" << to_string(cfg.coupling) << ", n_B + r = " << model.reduced_dim()
            << ") written to " << (dir / "rom").string() << "\n";
  return 0;
}

int cmd_simulate_rom(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const fs::path dir = cfg.output;
  const ReducedModel model = run_stage("read_model", [&] { return artifacts::read_model(dir); });
  auto [system, constraints] = build_system(cfg);
  const RomContactResult rom = run_stage("rom_contact", [&] { return simulate_rom(model, system, cfg); });
  run_stage("output", [&] {
    io::write_trajectory_csv(dir / "test" / "rom_contact.csv", rom.lifted);
    io::write_trajectory_csv(dir / "test" / "rom_reduced.csv", rom.reduced);
    artifacts::write_text(dir / "test" / "rom_lcp.txt", artifacts::lcp_report(rom.stats));
  });
  const fs::path reference_path = dir / "test" / "fom_contact.csv";
  if (fs::exists(reference_path)) {
    const Trajectory reference =
        run_stage("read_reference", [&] { return io::read_trajectory_csv(reference_path); });
    const ErrorSummary errors = run_stage("metrics", [&] {
      Trajectory lifted = rom.lifted;
      lifted.h = reference.h;  // the CSV grid is recovered from rounded times
      return evaluate(reference, lifted, constraints, system.n_boundary);
    });
    const auto method = model.provenance.count("coupling") ? model.provenance.at("coupling")
                                                           : std::string("unknown");
    run_stage("output", [&] { artifacts::write_errors(dir, errors, method); });
    print_summary(dir);
  }
  std::cout << "reduced contact run written to " << (dir / "test").string() << "\n";
  return 0;
}

int cmd_pipeline(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const auto start = std::chrono::steady_clock::now();
  run_pipeline(cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "pipeline finished in " << seconds << " s, artifacts in " << cfg.output.string() << "\n";
  print_summary(cfg.output);
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const Comparison table = run_stage("compare", [&] { return compare_runs(paths); });
  std::cout << table.text();
  if (!out.empty()) {
    run_stage("output", [&] {
      artifacts::write_text(fs::path(out) / "compare.csv", table.csv());
      artifacts::write_text(fs::path(out) / "compare.txt", table.text());
    });
  }
  return 0;
}

void write_failure(const std::string& out, const std::string& stage, ErrorKind kind,
                   const std::string& message) {
  if (out.empty()) return;
  try {
    artifacts::write_text(fs::path(out) / "failure.txt",
                          "stage = " + stage + "\ncategory = " + kind_name(kind) +
                              "\nmessage = " + message + "\n");
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-intrusive substructured reduced models for dynamic contact"};
  app.require_subcommand(1);

  Options opts;
  std::vector<std::string> compare_dirs;
  std::string compare_out;

  auto add_common = [&](CLI::App* sub, bool with_coupling) {
    sub->add_option("--config", opts.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory (overrides [output] directory)");
    if (with_coupling)
      sub->add_option("--coupling", opts.coupling, "full-lsq | reduced-lsq | static-modes");
    sub->add_option("--seed", opts.seed, "seed recorded with the run (randomized tests only)");
  };
  auto* fom = app.add_subcommand("simulate-fom", "training runs and full-order contact reference");
  add_common(fom, false);
  auto* infer = app.add_subcommand("infer", "infer the reduced model from persisted training data");
  add_common(infer, true);
  auto* rom = app.add_subcommand("simulate-rom", "reduced contact run from a persisted model");
  add_common(rom, false);
  auto* pipeline = app.add_subcommand("pipeline", "all stages end to end");
  add_common(pipeline, true);
  auto* compare = app.add_subcommand("compare", "side-by-side error table of finished runs");
  compare->add_option("runs", compare_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--out", compare_out, "directory for compare.csv / compare.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string stage = "config";
  try {
    if (*fom) return cmd_simulate_fom(opts);
    if (*infer) return cmd_infer(opts);
    if (*rom) return cmd_simulate_rom(opts);
    if (*pipeline) return cmd_pipeline(opts);
    if (*compare) return cmd_compare(compare_dirs, compare_out);
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << ", " << kind_name(e.kind()) << "]: " << e.what() << "\n";
    write_failure(opts.out, e.stage(), e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const Error& e) {
    std::cerr << "error [" << stage << ", " << kind_name(e.kind()) << "]: " << e.what() << "\n";
    write_failure(opts.out, stage, e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
