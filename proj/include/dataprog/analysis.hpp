#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"

namespace dprog {

/// Diagnostics for one LF column.
struct LfSummary {
  std::string name;
  std::vector<LabelId> polarity;  // distinct labels emitted, ascending
  double coverage = 0.0;
  double overlap = 0.0;
  double conflict = 0.0;
  /// Fraction of fired, gold-bearing rows where the vote equals gold. Unset
  /// without gold or when the LF never fires on a gold-bearing row.
  std::optional<double> empirical_accuracy;
  std::size_t fired = 0;
};

/// Per-LF coverage/overlap/conflict and, with `gold` (length n, kAbstain for
/// unknown rows), empirical accuracy. Throws DataError on a gold length
/// mismatch. Pass an empty span for no gold.
std::vector<LfSummary> lf_summary(const VoteMatrix& votes, std::span<const LabelId> gold = {});

/// Same metrics over a raw n x m instance-major vote grid with no polarity
/// constraint, e.g. votes gathered from multi-class sources.
std::vector<LfSummary> lf_summary(std::span<const std::string> names, std::size_t n,
                                  std::span<const LabelId> grid, std::span<const LabelId> gold = {});

struct Report {
  std::string table;
  json record;
};

/// Text table (one row per LF, fixed column order) plus the same numbers as
/// a JSON record. Accuracy is reported under both `precision` and
/// `emp_accuracy` and rendered as "—" when undefined.
Report render_report(std::span<const LfSummary> summaries);

}  // namespace dprog
