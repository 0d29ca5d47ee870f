#pragma once

#include "clse/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clse {

/// True parameters attached to simulated paths: (theta_0, nu_0) in the
/// full parameter order of the generating model.
struct TruthRecord {
  std::vector<std::string> names;
  std::vector<double> values;

  ParamVec params() const;
};

/// An observed path Z_0..Z_n.
///
/// Branching paths also keep the exact population counts; `values` is then
/// the double image of `counts` and is what the conditional models read.
struct Trajectory {
  std::string model_id;
  std::vector<double> values;
  std::vector<std::uint64_t> counts;
  std::uint64_t seed = 0;
  std::optional<TruthRecord> truth;

  bool is_count() const { return !counts.empty(); }
  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  /// First k with N_k = 0, or nullopt for a surviving (or real-valued) path.
  std::optional<std::size_t> extinction_step() const;
  bool extinct() const { return extinction_step().has_value(); }

  /// Throws on an empty path, negative/non-integer branching values or
  /// a revival after extinction.
  void validate() const;
};

Trajectory make_count_trajectory(std::string model_id, std::vector<std::uint64_t> counts, std::uint64_t seed = 0);
Trajectory make_real_trajectory(std::string model_id, std::vector<double> values, std::uint64_t seed = 0);

/// CSV with header `step,value`; leading `#` comment lines carry
/// `model`, `kind`, `seed` and `truth` (name=value pairs).
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
Trajectory read_trajectory_csv(std::istream& in);

void save_trajectory(const std::string& path, const Trajectory& t);
Trajectory load_trajectory(const std::string& path);

/// Writes `contents` to `path` through a temporary file and a rename, so a
/// failed run never leaves a partial artifact behind.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace clse
