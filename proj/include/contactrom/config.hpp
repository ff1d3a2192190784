#pragma once

#include "contactrom/common.hpp"
#include "contactrom/model.hpp"
#include "contactrom/reduced_model.hpp"
#include "contactrom/system_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace contactrom {

/// Failure tagged with the pipeline stage it happened in.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what)
      : Error(kind, stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class ModelSource { beam, chain, files };

inline std::string to_string(ModelSource source) {
  switch (source) {
    case ModelSource::beam: return "beam";
    case ModelSource::chain: return "chain";
    case ModelSource::files: return "files";
  }
  return "unknown";
}

struct ChainSpec {
  std::vector<double> masses;
  std::vector<double> springs;
  std::vector<Index> boundary;
  std::vector<double> gaps;
};

/// Harmonic load plus the number of steps it is integrated for.
/// loaded_dofs is "deflection", "all" or a list of natural DOF indices.
struct LoadSpec {
  double amplitude = 0.0;
  double frequency = 0.0;
  std::string loaded_dofs = "deflection";
  Index steps = 0;
};

struct ExperimentConfig {
  ModelSource source = ModelSource::beam;
  BeamSpec beam;
  ChainSpec chain;
  SystemFiles files;
  LoadSpec training;
  LoadSpec test;
  double h = 0.0;
  std::optional<Index> rank = Index(2);
  std::optional<double> pod_tolerance;
  Index r2 = 2;
  CouplingMethod coupling = CouplingMethod::static_modes;
  std::optional<double> epsilon;  // nullopt: derived from the data
  std::filesystem::path output = "out";
  std::int64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips an inline "# ..." or "; ..." comment.
inline std::string value_text(const std::string& raw) {
  const auto cut = raw.find_first_of("#;");
  return trim(cut == std::string::npos ? raw : raw.substr(0, cut));
}

inline double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

inline long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

template <class T>
std::string format_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

/// Section-aware reader that records which keys were consumed so that
/// misspelled keys are reported instead of silently ignored.
class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto node = sec->get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
    if (!node) return std::nullopt;
    return value_text(node->data());
  }

  std::string required(const std::string& section, const std::string& key) {
    auto v = get(section, key);
    if (!v || v->empty()) throw ConfigError("missing key '" + key + "' in section [" + section + "]");
    return *v;
  }

  double number(const std::string& section, const std::string& key) {
    return to_double(section + "." + key, required(section, key));
  }
  double number(const std::string& section, const std::string& key, double fallback) {
    auto v = get(section, key);
    return v && !v->empty() ? to_double(section + "." + key, *v) : fallback;
  }
  long long integer(const std::string& section, const std::string& key) {
    return to_integer(section + "." + key, required(section, key));
  }
  long long integer(const std::string& section, const std::string& key, long long fallback) {
    auto v = get(section, key);
    return v && !v->empty() ? to_integer(section + "." + key, *v) : fallback;
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty())
        throw ConfigError("key '" + section + "' outside of any section");
      for (const auto& [key, value] : body)
        if (!used_.count(section + "." + key))
          throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::set<std::string> used_;
};

inline LoadSpec read_load(ConfigReader& in, const std::string& section) {
  LoadSpec load;
  load.amplitude = in.number(section, "amplitude");
  load.frequency = in.number(section, "frequency");
  load.loaded_dofs = in.get(section, "loaded_dofs").value_or("deflection");
  if (load.loaded_dofs.empty()) load.loaded_dofs = "deflection";
  load.steps = Index(in.integer(section, "steps"));
  require(load.frequency > 0.0, "[" + section + "] frequency must be positive");
  require(load.steps >= 2, "[" + section + "] steps must be at least 2");
  return load;
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(text);
  return p.is_absolute() ? p : base / p;
}

}  // namespace detail

/// Parses the sectioned key = value format. Relative paths are taken
/// relative to `base_dir`. Referenced files must exist.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::filesystem::path& base_dir = ".") {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  detail::ConfigReader in(tree);
  ExperimentConfig cfg;

  const std::string source = in.required("model", "source");
  if (source == "beam") {
    cfg.source = ModelSource::beam;
    BeamSpec& b = cfg.beam;
    b.length = in.number("model", "length", b.length);
    b.element_count = int(in.integer("model", "elements", b.element_count));
    b.youngs_modulus = in.number("model", "youngs_modulus", b.youngs_modulus);
    b.poisson_ratio = in.number("model", "poisson_ratio", b.poisson_ratio);
    b.density = in.number("model", "density", b.density);
    b.width = in.number("model", "width", b.width);
    b.height = in.number("model", "height", b.height);
    b.contact_node_count = int(in.integer("model", "contact_nodes", b.contact_node_count));
    b.obstacle_gap = in.number("model", "gap", b.obstacle_gap);
    validate(b);
  } else if (source == "chain") {
    cfg.source = ModelSource::chain;
    auto doubles = [&](const std::string& key) {
      std::vector<double> v;
      for (const auto& t : detail::split_list(in.required("model", key)))
        v.push_back(detail::to_double("model." + key, t));
      return v;
    };
    cfg.chain.masses = doubles("masses");
    cfg.chain.springs = doubles("springs");
    cfg.chain.gaps = doubles("gaps");
    for (const auto& t : detail::split_list(in.required("model", "boundary")))
      cfg.chain.boundary.push_back(Index(detail::to_integer("model.boundary", t)));
  } else if (source == "files") {
    cfg.source = ModelSource::files;
    SystemFiles& f = cfg.files;
    f.mass = detail::resolve_path(base_dir, in.required("model", "mass"));
    f.stiffness = detail::resolve_path(base_dir, in.required("model", "stiffness"));
    f.contact_matrix = detail::resolve_path(base_dir, in.required("model", "contact_matrix"));
    f.gap_offsets = detail::resolve_path(base_dir, in.required("model", "gap_offsets"));
    f.partition = detail::resolve_path(base_dir, in.required("model", "partition"));
    for (const auto* p : {&f.mass, &f.stiffness, &f.contact_matrix, &f.gap_offsets, &f.partition})
      if (!std::filesystem::exists(*p))
        throw StageError("load_system", ErrorKind::config,
                         "referenced file '" + p->string() + "' does not exist");
  } else {
    throw ConfigError("[model] source must be beam, chain or files, got '" + source + "'");
  }

  cfg.training = detail::read_load(in, "training");
  cfg.test = detail::read_load(in, "test");
  cfg.h = in.number("time", "h");
  detail::require(cfg.h > 0.0, "[time] h must be positive");

  const auto rank = in.get("reduction", "r");
  const auto tol = in.get("reduction", "pod_tolerance");
  const bool has_rank = rank && !rank->empty(), has_tol = tol && !tol->empty();
  detail::require(!(has_rank && has_tol), "[reduction] give either r or pod_tolerance, not both");
  if (has_tol) {
    cfg.rank.reset();
    cfg.pod_tolerance = detail::to_double("reduction.pod_tolerance", *tol);
    detail::require(*cfg.pod_tolerance > 0.0 && *cfg.pod_tolerance < 1.0,
                    "[reduction] pod_tolerance must lie in (0, 1)");
  } else if (has_rank) {
    cfg.rank = Index(detail::to_integer("reduction.r", *rank));
    detail::require(*cfg.rank >= 1, "[reduction] r must be at least 1");
  }
  cfg.r2 = Index(in.integer("reduction", "r2", 2));
  detail::require(cfg.r2 >= 1, "[reduction] r2 must be at least 1");
  cfg.coupling = parse_coupling_method(in.get("reduction", "coupling").value_or("static-modes"));
  detail::require(cfg.coupling != CouplingMethod::intrusive,
                  "[reduction] the intrusive projection is a test oracle, not a pipeline method");
  const std::string eps = in.get("reduction", "epsilon").value_or("auto");
  if (eps != "auto" && !eps.empty()) {
    cfg.epsilon = detail::to_double("reduction.epsilon", eps);
    detail::require(*cfg.epsilon > 0.0, "[reduction] epsilon must be positive");
  }

  if (auto dir = in.get("output", "directory"); dir && !dir->empty())
    cfg.output = detail::resolve_path(base_dir, *dir);
  cfg.seed = in.integer("output", "seed", 0);
  in.reject_unknown();
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.has_parent_path() ? path.parent_path() : ".");
}

/// Fully explicit echo of a config; parsing it reproduces the run.
inline std::string resolved_text(const ExperimentConfig& cfg) {
  using detail::format_double;
  std::ostringstream out;
  out << "[model]\nsource = " << to_string(cfg.source) << "\n";
  switch (cfg.source) {
    case ModelSource::beam: {
      const BeamSpec& b = cfg.beam;
      out << "length = " << format_double(b.length) << "\n"
          << "elements = " << b.element_count << "\n"
          << "youngs_modulus = " << format_double(b.youngs_modulus) << "\n"
          << "poisson_ratio = " << format_double(b.poisson_ratio) << "\n"
          << "density = " << format_double(b.density) << "\n"
          << "width = " << format_double(b.width) << "\n"
          << "height = " << format_double(b.height) << "\n"
          << "contact_nodes = " << b.contact_node_count << "\n"
          << "gap = " << format_double(b.obstacle_gap) << "\n";
      break;
    }
    case ModelSource::chain:
      out << "masses = " << detail::format_list(cfg.chain.masses) << "\n"
          << "springs = " << detail::format_list(cfg.chain.springs) << "\n"
          << "boundary = " << detail::format_list(cfg.chain.boundary) << "\n"
          << "gaps = " << detail::format_list(cfg.chain.gaps) << "\n";
      break;
    case ModelSource::files: {
      auto abs = [](const std::filesystem::path& p) { return std::filesystem::absolute(p).string(); };
      out << "mass = " << abs(cfg.files.mass) << "\n"
          << "stiffness = " << abs(cfg.files.stiffness) << "\n"
          << "contact_matrix = " << abs(cfg.files.contact_matrix) << "\n"
          << "gap_offsets = " << abs(cfg.files.gap_offsets) << "\n"
          << "partition = " << abs(cfg.files.partition) << "\n";
      break;
    }
  }
  for (const auto& [name, load] : {std::pair{"training", &cfg.training}, std::pair{"test", &cfg.test}})
    out << "\n[" << name << "]\n"
        << "amplitude = " << format_double(load->amplitude) << "\n"
        << "frequency = " << format_double(load->frequency) << "\n"
        << "loaded_dofs = " << load->loaded_dofs << "\n"
        << "steps = " << load->steps << "\n";
  out << "\n[time]\nh = " << format_double(cfg.h) << "\n";
  out << "# initial data: q0 = 0, v0 = 0 (rest start)\n";
  out << "\n[reduction]\n";
  if (cfg.pod_tolerance)
    out << "pod_tolerance = " << format_double(*cfg.pod_tolerance) << "\n";
  else
    out << "r = " << cfg.rank.value_or(2) << "\n";
  out << "r2 = " << cfg.r2 << "\n"
      << "coupling = " << to_string(cfg.coupling) << "\n"
      << "epsilon = " << (cfg.epsilon ? format_double(*cfg.epsilon) : std::string("auto")) << "\n";
  out << "\n[output]\ndirectory = " << std::filesystem::absolute(cfg.output).string() << "\n"
      << "seed = " << cfg.seed << "\n";
  return out.str();
}

/// Builds the configured full-order system. File errors are tagged with the
/// "load_system" stage.
inline std::pair<PartitionedSystem, ContactConstraints> build_system(const ExperimentConfig& cfg) {
  try {
    switch (cfg.source) {
      case ModelSource::beam: return build_cantilever_beam(cfg.beam);
      case ModelSource::chain:
        return build_mass_spring_chain(cfg.chain.masses, cfg.chain.springs, cfg.chain.boundary,
                                       cfg.chain.gaps);
      case ModelSource::files: return load_system(cfg.files);
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("load_system", e.kind(), e.what());
  }
  throw ConfigError("unknown model source");
}

/// Natural (pre-partition) index of a DOF: beam DOFs count 2 per free node,
/// other sources use the original row index.
inline Index natural_index(const PartitionedSystem& system, Index position, ModelSource source) {
  const DofLabel& label = system.dof_labels.at(std::size_t(position));
  return source == ModelSource::beam ? 2 * Index(label.node - 1) + label.direction : Index(label.node);
}

/// Positions (in boundary-first order) loaded by a LoadSpec.
inline std::vector<Index> resolve_loaded_dofs(const PartitionedSystem& system, const LoadSpec& load,
                                              ModelSource source) {
  std::vector<Index> out;
  const Index n = system.size();
  if (load.loaded_dofs == "all") {
    for (Index i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (load.loaded_dofs == "deflection") {
    for (Index i = 0; i < n; ++i)
      if (system.dof_labels.empty() || system.dof_labels[std::size_t(i)].direction == 0)
        out.push_back(i);
    return out;
  }
  std::map<Index, Index> position_of;
  for (Index i = 0; i < n; ++i) position_of[natural_index(system, i, source)] = i;
  for (const auto& token : detail::split_list(load.loaded_dofs)) {
    const Index natural = Index(detail::to_integer("loaded_dofs", token));
    const auto it = position_of.find(natural);
    if (it == position_of.end())
      throw ConfigError("loaded DOF " + token + " does not exist in the model");
    out.push_back(it->second);
  }
  detail::require(!out.empty(), "loaded_dofs selects no DOF");
  return out;
}

inline ForceSignal make_force(const PartitionedSystem& system, const LoadSpec& load,
                              ModelSource source) {
  return harmonic_force(load.amplitude, load.frequency, resolve_loaded_dofs(system, load, source),
                        system.size());
}

}  // namespace contactrom
