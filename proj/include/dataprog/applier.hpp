#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"
#include "dataprog/lfkit.hpp"
#include "dataprog/parallel.hpp"

namespace dprog {

/// Row-aligned LF outputs over one dataset.
struct LabeledMatrices {
  VoteMatrix votes;
  ScoreMatrix scores;
};

/// Evaluates every rule on every instance. Row i of the result is instance
/// i of `data`, column j is `rules[j]`. Throws ConfigError (before any
/// evaluation) when a rule target is not in `space`; evaluation failures
/// such as missing features surface as DataError.
LabeledMatrices apply(std::span<const LfPtr> rules, const DataSplit& data, const LabelSpace& space,
                      Exec exec = Exec::parallel);

inline constexpr int kMatrixFormatVersion = 1;

/// Axis order of `votes`/`scores` in a matrix file. `instances` is n rows of
/// m entries; `lfs` is m rows of n entries.
enum class Orientation { instances, lfs };

std::string_view to_string(Orientation o);
Orientation parse_orientation(std::string_view text);

/// Contents of a matrix file.
struct MatrixFile {
  VoteMatrix votes;
  ScoreMatrix scores;
  /// Per-row gold, kAbstain where unknown. Empty when the file has none.
  std::vector<LabelId> gold;
  /// Per-row instance ids. Empty when the file has none.
  std::vector<std::string> ids;
  Orientation orientation = Orientation::instances;

  bool has_gold() const noexcept { return !gold.empty(); }
};

json matrix_to_json(const MatrixFile& file);
/// Throws DataError naming the offending field on any version, shape,
/// range, or continuity violation.
MatrixFile matrix_from_json(const json& doc);

void export_matrix(const MatrixFile& file, const std::filesystem::path& path);
MatrixFile import_matrix(const std::filesystem::path& path);

}  // namespace dprog
