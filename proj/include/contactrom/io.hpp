#pragma once

#include "contactrom/common.hpp"
#include "contactrom/metrics.hpp"
#include "contactrom/timestep.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace contactrom::io {

namespace fs = std::filesystem;

namespace detail {

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_double(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed number '" + token + "' in '" + path.string() + "'");
  }
}

}  // namespace detail

/// Reads a real Matrix Market file (array or coordinate; general or
/// symmetric).
inline Matrix read_matrix_market(const fs::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty Matrix Market file '" + path.string() + "'");
  std::istringstream banner(detail::lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix")
    throw IoError("'" + path.string() + "' is not a Matrix Market matrix file");
  if (format != "array" && format != "coordinate")
    throw IoError("unsupported Matrix Market format '" + format + "' in '" + path.string() + "'");
  if (field != "real" && field != "integer" && field != "double")
    throw IoError("unsupported Matrix Market field '" + field + "' in '" + path.string() + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError("unsupported Matrix Market symmetry '" + symmetry + "' in '" + path.string() + "'");
  const bool symmetric = symmetry == "symmetric";

  do {
    if (!std::getline(in, line)) throw IoError("missing size line in '" + path.string() + "'");
  } while (line.empty() || line[0] == '%');

  std::istringstream size_line(line);
  long rows = -1, cols = -1, nnz = -1;
  size_line >> rows >> cols;
  if (format == "coordinate") size_line >> nnz;
  if (rows < 0 || cols < 0 || (format == "coordinate" && nnz < 0))
    throw IoError("malformed size line in '" + path.string() + "'");

  std::vector<std::string> tokens;
  std::string token;
  while (in >> token) {
    if (token[0] == '%') {
      std::getline(in, line);
      continue;
    }
    tokens.push_back(token);
  }

  Matrix a = Matrix::Zero(rows, cols);
  if (format == "array") {
    std::size_t pos = 0;
    for (long j = 0; j < cols; ++j)
      for (long i = symmetric ? j : 0; i < rows; ++i) {
        if (pos >= tokens.size()) throw IoError("too few entries in '" + path.string() + "'");
        const double v = detail::parse_double(tokens[pos++], path);
        a(i, j) = v;
        if (symmetric) a(j, i) = v;
      }
    if (pos != tokens.size()) throw IoError("too many entries in '" + path.string() + "'");
  } else {
    if (tokens.size() != std::size_t(3 * nnz))
      throw IoError("entry count does not match header in '" + path.string() + "'");
    for (long e = 0; e < nnz; ++e) {
      const long i = long(detail::parse_double(tokens[3 * e], path)) - 1;
      const long j = long(detail::parse_double(tokens[3 * e + 1], path)) - 1;
      const double v = detail::parse_double(tokens[3 * e + 2], path);
      if (i < 0 || i >= rows || j < 0 || j >= cols)
        throw IoError("entry index out of range in '" + path.string() + "'");
      a(i, j) += v;
      if (symmetric && i != j) a(j, i) += v;
    }
  }
  return a;
}

/// Writes a dense `array real general` Matrix Market file, 17 significant digits.
inline void write_matrix_market(const fs::path& path, const Matrix& a) {
  auto out = detail::open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out << a(i, j) << "\n";
}

/// One value per line; blank lines and '#' comments are ignored.
inline Vector read_vector(const fs::path& path) {
  auto in = detail::open_in(path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    values.push_back(detail::parse_double(line.substr(first, last - first + 1), path));
  }
  return Eigen::Map<Vector>(values.data(), Index(values.size()));
}

inline void write_vector(const fs::path& path, const Vector& v) {
  auto out = detail::open_out(path);
  for (Index i = 0; i < v.size(); ++i) out << v(i) << "\n";
}

/// Trajectory CSV: `t,q_0..q_{n-1}[,lambda_0..]`. Forces are not part of the
/// format; pass a companion force matrix to write them separately.
inline void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  auto out = detail::open_out(path);
  out << "t";
  for (Index i = 0; i < trajectory.dimension(); ++i) out << ",q_" << i;
  const bool with_lambda = trajectory.multipliers && trajectory.multipliers->rows() > 0;
  if (with_lambda)
    for (Index i = 0; i < trajectory.multipliers->rows(); ++i) out << ",lambda_" << i;
  out << "\n";
  for (Index j = 0; j < trajectory.steps(); ++j) {
    out << trajectory.time(j);
    for (Index i = 0; i < trajectory.dimension(); ++i) out << "," << trajectory.states(i, j);
    if (with_lambda)
      for (Index i = 0; i < trajectory.multipliers->rows(); ++i)
        out << "," << (*trajectory.multipliers)(i, j);
    out << "\n";
  }
}

/// Reads a trajectory CSV. The step h and t0 are recovered from the time
/// column; forces are left empty.
inline Trajectory read_trajectory_csv(const fs::path& path) {
  auto in = detail::open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty trajectory file '" + path.string() + "'");
  std::vector<std::string> names;
  {
    std::istringstream hs(header);
    std::string name;
    while (std::getline(hs, name, ',')) names.push_back(name);
  }
  if (names.empty() || names[0] != "t") throw IoError("trajectory header must start with 't'");
  Index n = 0, m = 0;
  for (std::size_t c = 1; c < names.size(); ++c) {
    if (names[c].rfind("q_", 0) == 0) {
      if (m) throw IoError("state columns after multiplier columns in '" + path.string() + "'");
      ++n;
    } else if (names[c].rfind("lambda_", 0) == 0) {
      ++m;
    } else {
      throw IoError("unexpected column '" + names[c] + "' in '" + path.string() + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(detail::parse_double(cell, path));
    if (row.size() != names.size()) throw IoError("ragged row in '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IoError("trajectory '" + path.string() + "' has fewer than two rows");
  Trajectory t;
  t.t0 = rows[0][0];
  t.h = rows[1][0] - rows[0][0];
  const Index k = Index(rows.size());
  t.states.resize(n, k);
  if (m) t.multipliers = Matrix(m, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) t.states(i, j) = rows[j][1 + i];
    for (Index i = 0; i < m; ++i) (*t.multipliers)(i, j) = rows[j][1 + n + i];
  }
  // Recover h at full precision from the endpoints of the grid.
  t.h = (rows.back()[0] - rows.front()[0]) / double(k - 1);
  return t;
}

/// Matrix CSV with a one-line JSON header comment: `# {"h":..,"k":..,...}`.
inline void write_snapshot_csv(const fs::path& path, const Matrix& data, const nlohmann::json& header) {
  auto out = detail::open_out(path);
  out << "# " << header.dump() << "\n";
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << data(i, j);
    out << "\n";
  }
}

inline Matrix read_snapshot_csv(const fs::path& path, nlohmann::json* header = nullptr) {
  auto in = detail::open_in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) {
        try {
          *header = nlohmann::json::parse(line.substr(1));
        } catch (const std::exception&) {
          throw IoError("malformed snapshot header in '" + path.string() + "'");
        }
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(detail::parse_double(cell, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged row in '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  Matrix a(Index(rows.size()), rows.empty() ? 0 : Index(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
  return a;
}

inline void write_error_curve_csv(const fs::path& path, const ErrorCurve& curve) {
  auto out = detail::open_out(path);
  out << "t,eps\n";
  for (std::size_t j = 0; j < curve.values.size(); ++j)
    out << curve.times[j] << "," << curve.values[j] << "\n";
}

inline ErrorCurve read_error_curve_csv(const fs::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "t,eps") throw IoError("error curve '" + path.string() + "' lacks the 't,eps' header");
  ErrorCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("malformed row in '" + path.string() + "'");
    curve.times.push_back(detail::parse_double(line.substr(0, comma), path));
    curve.values.push_back(detail::parse_double(line.substr(comma + 1), path));
  }
  return curve;
}

using KeyValues = std::map<std::string, std::string>;

inline void write_key_values(const fs::path& path, const std::string& text) {
  auto out = detail::open_out(path);
  out << text;
}

inline KeyValues read_key_values(const fs::path& path) {
  auto in = detail::open_in(path);
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line[0] == '#') continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace contactrom::io
