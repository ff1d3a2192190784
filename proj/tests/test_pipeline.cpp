#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace contactrom;
namespace fs = std::filesystem;

namespace {

const std::string kChain = R"([model]
source = chain
masses = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1
springs = 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000
boundary = 0
gaps = 0.005

[training]
amplitude = -1
frequency = 0.05
loaded_dofs = all
steps = 100

[test]
amplitude = -1
frequency = 0.1
loaded_dofs = all
steps = 50

[time]
h = 0.2

[reduction]
r = 3
r2 = 1
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::runtime_error("pattern not found: " + from);
  return text.replace(pos, from.size(), to);
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "no error";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CONTACTROM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(::testing::TempDir()) /
           (std::string("contactrom_pipe_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

using Config = TempDir;
using Pipeline = TempDir;
using Cli = TempDir;

}  // namespace

TEST(ConfigParse, ChainExample) {
  const ExperimentConfig cfg = parse_config_text(kChain);
  EXPECT_EQ(cfg.source, ModelSource::chain);
  EXPECT_EQ(cfg.chain.masses.size(), 10u);
  EXPECT_EQ(cfg.chain.boundary, (std::vector<Index>{0}));
  EXPECT_EQ(cfg.chain.gaps, (std::vector<double>{0.005}));
  EXPECT_EQ(cfg.training.loaded_dofs, "all");
  EXPECT_EQ(cfg.test.steps, 50);
  EXPECT_EQ(cfg.h, 0.2);
  EXPECT_EQ(cfg.rank, Index(3));
  EXPECT_EQ(cfg.r2, 1);
  EXPECT_EQ(cfg.coupling, CouplingMethod::static_modes);
  EXPECT_FALSE(cfg.epsilon.has_value());
}

TEST(ConfigParse, DemoBeamMatchesScenario) {
  const ExperimentConfig cfg = parse_config(fs::path(CONTACTROM_DEMO_DIR) / "beam.ini");
  const ExperimentConfig ref = support::beam_scenario();
  EXPECT_EQ(cfg.source, ModelSource::beam);
  EXPECT_EQ(cfg.beam.length, ref.beam.length);
  EXPECT_EQ(cfg.beam.element_count, ref.beam.element_count);
  EXPECT_EQ(cfg.beam.youngs_modulus, ref.beam.youngs_modulus);
  EXPECT_EQ(cfg.beam.density, ref.beam.density);
  EXPECT_EQ(cfg.beam.width, ref.beam.width);
  EXPECT_EQ(cfg.beam.height, ref.beam.height);
  EXPECT_EQ(cfg.beam.contact_node_count, ref.beam.contact_node_count);
  EXPECT_EQ(cfg.beam.obstacle_gap, ref.beam.obstacle_gap);
  EXPECT_EQ(cfg.training.amplitude, ref.training.amplitude);
  EXPECT_EQ(cfg.training.frequency, ref.training.frequency);
  EXPECT_EQ(cfg.training.steps, ref.training.steps);
  EXPECT_EQ(cfg.test.frequency, ref.test.frequency);
  EXPECT_EQ(cfg.test.steps, ref.test.steps);
  EXPECT_EQ(cfg.h, ref.h);
  EXPECT_EQ(cfg.rank, ref.rank);
  EXPECT_EQ(cfg.r2, ref.r2);
}

TEST(ConfigParse, ErrorsNameTheProblem) {
  EXPECT_NE(config_error(kChain + "colour = red\n").find("unknown key 'colour' in section [reduction]"),
            std::string::npos);
  EXPECT_NE(config_error(replace(kChain, "h = 0.2\n", "")).find("missing key 'h'"), std::string::npos);
  EXPECT_NE(config_error(replace(kChain, "h = 0.2", "h = fast")).find("time.h"), std::string::npos);
  EXPECT_NE(config_error(replace(kChain, "h = 0.2", "h = -1")).find("positive"), std::string::npos);
  EXPECT_NE(config_error(kChain + "pod_tolerance = 1e-6\n").find("either r or pod_tolerance"),
            std::string::npos);
  EXPECT_NE(config_error(kChain + "coupling = intrusive\n").find("test oracle"), std::string::npos);
  EXPECT_NE(config_error(kChain + "coupling = magic\n").find("unknown coupling method"), std::string::npos);
  EXPECT_NE(config_error(replace(kChain, "source = chain", "source = cloud")).find("[model] source"),
            std::string::npos);
  EXPECT_NE(config_error(replace(kChain, "steps = 50", "steps = 1")).find("at least 2"), std::string::npos);
  EXPECT_NE(config_error("[model\nsource = beam\n").find("malformed config"), std::string::npos);
}

TEST(ConfigParse, ResolvedTextRoundTrips) {
  for (const std::string& text :
       {kChain, kChain + "epsilon = 1e-7\ncoupling = full-lsq\n",
        replace(kChain, "r = 3", "pod_tolerance = 1e-8")}) {
    const ExperimentConfig a = parse_config_text(text);
    const std::string resolved = resolved_text(a);
    const ExperimentConfig b = parse_config_text(resolved);
    EXPECT_EQ(resolved_text(b), resolved);
    EXPECT_EQ(a.pod_tolerance, b.pod_tolerance);
    EXPECT_EQ(a.epsilon, b.epsilon);
  }
  const ExperimentConfig beam = parse_config(fs::path(CONTACTROM_DEMO_DIR) / "beam.ini");
  EXPECT_EQ(resolved_text(parse_config_text(resolved_text(beam))), resolved_text(beam));
}

TEST_F(Config, FileSourceLoadsTheWrittenSystem) {
  const auto [chain, con] = support::three_mass_chain(0.2);
  SystemFiles files{dir_ / "M.mtx", dir_ / "K.mtx", dir_ / "C.mtx", dir_ / "b.txt", dir_ / "p.txt"};
  write_system(files, chain, con);
  const std::string model = "[model]\nsource = files\nmass = M.mtx\nstiffness = K.mtx\n"
                            "contact_matrix = C.mtx\ngap_offsets = b.txt\npartition = p.txt\n";
  const std::string rest = kChain.substr(kChain.find("[training]"));
  const ExperimentConfig cfg = parse_config(write("sys.ini", model + "\n" + rest));
  const auto [loaded, lcon] = build_system(cfg);
  EXPECT_EQ(loaded.mass, chain.mass);
  EXPECT_EQ(loaded.stiffness, chain.stiffness);
  EXPECT_EQ(lcon.offsets, con.offsets);

  fs::remove(dir_ / "K.mtx");
  try {
    parse_config(dir_ / "sys.ini");
    FAIL() << "expected a load_system error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load_system");
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST_F(Pipeline, RunsAreBitwiseReproducible) {
  ExperimentConfig cfg = parse_config_text(kChain);
  cfg.output = dir_ / "a";
  run_pipeline(cfg);
  cfg.output = dir_ / "b";
  run_pipeline(cfg);
  for (const char* f : {"test/fom_contact.csv", "test/rom_contact.csv", "rom/M_hat.mtx", "rom/K_hat.mtx",
                        "errors/q_boundary.csv", "training/Q_I.csv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Pipeline, WritesTheArtifactTree) {
  ExperimentConfig cfg = parse_config_text(kChain);
  cfg.output = dir_;
  const ExperimentResult r = run_pipeline(cfg);
  for (const char* f :
       {"config.resolved", "summary.txt", "training/free.csv", "training/fixed.csv", "training/Q_B.csv",
        "training/F1.csv", "rom/M_hat.mtx", "rom/K_hat.mtx", "rom/V.mtx", "rom/phi.txt", "rom/model.txt",
        "rom/interior_fit.txt", "rom/global_fit.txt", "test/fom_contact.csv", "test/rom_contact.csv",
        "test/fom_lcp.txt", "test/rom_lcp.txt", "errors/q_boundary.csv", "errors/q_interior.csv",
        "errors/fom_contact.txt"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const auto summary = io::read_key_values(dir_ / "summary.txt");
  EXPECT_EQ(summary.at("coupling"), "static-modes");
  EXPECT_EQ(std::stod(summary.at("max_eps_q_boundary")), r.errors.q_boundary.max());
  EXPECT_DOUBLE_EQ(std::stod(summary.at("max_eps_q_interior_unsquared")),
                   std::sqrt(r.errors.q_interior.max()));
  const ErrorCurve plain = io::read_error_curve_csv(dir_ / "errors" / "q_boundary_unsquared.csv");
  EXPECT_DOUBLE_EQ(plain.values.back(), std::sqrt(r.errors.q_boundary.values.back()));

  // The persisted model reads back to the in-memory one.
  const ReducedModel back = artifacts::read_model(dir_);
  EXPECT_EQ(back.m_hat, r.model.m_hat);
  EXPECT_EQ(back.global_basis, r.model.global_basis);
  EXPECT_EQ(back.spd_margin, r.model.spd_margin);
  const SnapshotSet s = artifacts::read_training(dir_);
  EXPECT_EQ(s.q_interior, r.training.snapshots.q_interior);
  EXPECT_EQ(s.h, cfg.h);

  const auto lcp = io::read_key_values(dir_ / "test" / "rom_lcp.txt");
  EXPECT_EQ(lcp.at("factorizations"), "1");
  EXPECT_EQ(lcp.at("lcp_matrix_assemblies"), "1");
}

TEST_F(Pipeline, FailuresCarryTheStage) {
  ExperimentConfig cfg = parse_config_text(kChain);
  cfg.rank = 20;  // more interior modes than the chain has
  cfg.output = dir_;
  try {
    run_experiment(cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "infer");
  }
}

TEST_F(Cli, PipelineAndStagewiseRunsAgree) {
  const fs::path cfg = write("chain.ini", kChain);
  ASSERT_EQ(run_cli("pipeline --config " + cfg.string() + " --out " + (dir_ / "all").string()), 0);
  const std::string staged = " --config " + cfg.string() + " --out " + (dir_ / "staged").string();
  ASSERT_EQ(run_cli("simulate-fom" + staged), 0);
  ASSERT_EQ(run_cli("infer" + staged), 0);
  ASSERT_EQ(run_cli("simulate-rom" + staged), 0);
  EXPECT_EQ(slurp(dir_ / "all" / "rom" / "M_hat.mtx"), slurp(dir_ / "staged" / "rom" / "M_hat.mtx"));
  EXPECT_EQ(slurp(dir_ / "all" / "test" / "rom_contact.csv"),
            slurp(dir_ / "staged" / "test" / "rom_contact.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "staged" / "summary.txt"));
}

TEST_F(Cli, ExitCodesAndFailureRecord) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("pipeline --config " + (dir_ / "nope.ini").string()), 2);

  const std::string model = "[model]\nsource = files\nmass = missing.mtx\nstiffness = missing.mtx\n"
                            "contact_matrix = missing.mtx\ngap_offsets = missing.txt\npartition = p.txt\n";
  const fs::path cfg = write("bad.ini", model + "\n" + kChain.substr(kChain.find("[training]")));
  EXPECT_EQ(run_cli("pipeline --config " + cfg.string() + " --out " + (dir_ / "out").string()), 2);
  const auto failure = io::read_key_values(dir_ / "out" / "failure.txt");
  EXPECT_EQ(failure.at("stage"), "load_system");
  EXPECT_EQ(failure.at("category"), "config");

  // infer without training data on disk is an io failure.
  const fs::path good = write("chain.ini", kChain);
  EXPECT_EQ(run_cli("infer --config " + good.string() + " --out " + (dir_ / "empty").string()), 4);
  EXPECT_EQ(io::read_key_values(dir_ / "empty" / "failure.txt").at("stage"), "read_training");
  EXPECT_EQ(run_cli("pipeline --coupling intrusive --config " + good.string() + " --out " +
                    (dir_ / "x").string()),
            2);
}

TEST_F(Cli, CompareTablesMethods) {
  const fs::path cfg = write("chain.ini", kChain);
  std::string dirs;
  for (const char* m : {"full-lsq", "reduced-lsq", "static-modes"}) {
    const fs::path out = dir_ / m;
    ASSERT_EQ(run_cli("pipeline --coupling " + std::string(m) + " --config " + cfg.string() + " --out " +
                      out.string()),
              0);
    dirs += " " + out.string();
  }
  ASSERT_EQ(run_cli("compare" + dirs + " --out " + (dir_ / "cmp").string()), 0);
  const std::string csv = slurp(dir_ / "cmp" / "compare.csv");
  for (const char* q : {"q_B,", "q_I,", "lambda,"}) {
    std::size_t count = 0;
    for (std::size_t pos = csv.find(std::string("\n") + q); pos != std::string::npos;
         pos = csv.find(std::string("\n") + q, pos + 1))
      ++count;
    EXPECT_EQ(count, 3u) << q;
  }

  const Comparison same = compare_runs({dir_ / "static-modes", dir_ / "static-modes"});
  for (const auto& row : same.rows) EXPECT_EQ(row.delta_max, 0.0);
  const Comparison three = compare_runs({dir_ / "full-lsq", dir_ / "reduced-lsq", dir_ / "static-modes"});
  EXPECT_EQ(three.rows[0].method, "full-lsq");
  EXPECT_EQ(three.rows[2].method, "static-modes");
  EXPECT_EQ(three.rows[0].delta_max, 0.0);
}
