#pragma once

#include "contactrom/io.hpp"
#include "contactrom/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace contactrom {

/// Files describing an externally assembled system. Matrices are in the
/// exporter's DOF order; the partition file selects the boundary DOFs.
struct SystemFiles {
  std::filesystem::path mass;
  std::filesystem::path stiffness;
  std::filesystem::path contact_matrix;  // C_B, m x n_B, Matrix Market
  std::filesystem::path gap_offsets;     // b, one value per line
  std::filesystem::path partition;       // "n_B <int>" then boundary indices
};

/// Relative asymmetry accepted (and removed by averaging) on load.
inline constexpr double kLoadSymmetryTolerance = 1e-10;

inline std::vector<Index> read_partition(const std::filesystem::path& path) {
  auto in = io::detail::open_in(path);
  std::string key;
  long count = -1;
  if (!(in >> key >> count) || key != "n_B" || count < 0)
    throw IoError("partition file '" + path.string() + "' must start with 'n_B <int>'");
  std::vector<Index> indices;
  long index = 0;
  while (in >> index) indices.push_back(Index(index));
  if (!in.eof()) throw IoError("malformed boundary index in '" + path.string() + "'");
  if (long(indices.size()) != count)
    throw IoError("partition file '" + path.string() + "' declares n_B = " + std::to_string(count) +
                  " but lists " + std::to_string(indices.size()) + " indices");
  return indices;
}

namespace detail {

inline Matrix checked_symmetric(const Matrix& a, const std::string& name) {
  if (a.rows() != a.cols())
    throw ConfigError(name + " matrix is not square (" + dims(a) + ")");
  const double asym = relative_asymmetry(a);
  if (asym > kLoadSymmetryTolerance)
    throw ConfigError(name + " matrix is not symmetric: ||A - A^T||_F / ||A||_F = " +
                      std::to_string(asym) + " exceeds " + std::to_string(kLoadSymmetryTolerance));
  return symmetrize(a);
}

}  // namespace detail

inline std::pair<PartitionedSystem, ContactConstraints> load_system(const SystemFiles& files) {
  const Matrix mass = detail::checked_symmetric(io::read_matrix_market(files.mass), "mass");
  const Matrix stiffness =
      detail::checked_symmetric(io::read_matrix_market(files.stiffness), "stiffness");
  if (mass.rows() != stiffness.rows())
    throw ConfigError("mass (" + detail::dims(mass) + ") and stiffness (" + detail::dims(stiffness) +
                      ") dimensions differ");
  const auto boundary = read_partition(files.partition);
  const Index n = mass.rows();
  const auto order = detail::boundary_first_order(n, boundary);

  PartitionedSystem system;
  system.mass = detail::permute_symmetric(mass, order);
  system.stiffness = detail::permute_symmetric(stiffness, order);
  system.n_boundary = Index(boundary.size());
  system.n_interior = n - system.n_boundary;
  for (Index old : order) system.dof_labels.push_back({int(old), 0});
  validate(system);

  ContactConstraints constraints;
  constraints.c_matrix = io::read_matrix_market(files.contact_matrix);
  constraints.offsets = io::read_vector(files.gap_offsets);
  validate(constraints, system.n_boundary);
  return {std::move(system), std::move(constraints)};
}

/// Writes a system in its boundary-first order (partition 0..n_B-1).
inline void write_system(const SystemFiles& files, const PartitionedSystem& system,
                         const ContactConstraints& constraints) {
  io::write_matrix_market(files.mass, system.mass);
  io::write_matrix_market(files.stiffness, system.stiffness);
  io::write_matrix_market(files.contact_matrix, constraints.c_matrix);
  io::write_vector(files.gap_offsets, constraints.offsets);
  auto out = io::detail::open_out(files.partition);
  out << "n_B " << system.n_boundary << "\n";
  for (Index i = 0; i < system.n_boundary; ++i) out << i << "\n";
}

}  // namespace contactrom
