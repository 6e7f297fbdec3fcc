#include "dataprog/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "dataprog/errors.hpp"

namespace dprog {

std::vector<LfSummary> lf_summary(std::span<const std::string> names, std::size_t n,
                                  std::span<const LabelId> grid, std::span<const LabelId> gold) {
  const std::size_t m = names.size();
  if (grid.size() != n * m)
    throw DataError("vote grid has " + std::to_string(grid.size()) + " entries, expected " +
                    std::to_string(n * m));
  if (!gold.empty() && gold.size() != n)
    throw DataError("gold length " + std::to_string(gold.size()) + " does not match " +
                    std::to_string(n) + " matrix rows");

  std::vector<LfSummary> out(m);
  std::vector<std::size_t> overlap(m, 0), conflict(m, 0), correct(m, 0), judged(m, 0);
  std::vector<std::set<LabelId>> polarity(m);

  for (std::size_t i = 0; i < n; ++i) {
    auto row = grid.subspan(i * m, m);
    std::size_t fired_in_row = 0;
    for (LabelId v : row) fired_in_row += v != kAbstain;
    for (std::size_t j = 0; j < m; ++j) {
      LabelId v = row[j];
      if (v == kAbstain) continue;
      ++out[j].fired;
      polarity[j].insert(v);
      if (fired_in_row > 1) ++overlap[j];
      for (std::size_t k = 0; k < m; ++k) {
        if (k != j && row[k] != kAbstain && row[k] != v) {
          ++conflict[j];
          break;
        }
      }
      if (!gold.empty() && gold[i] != kAbstain) {
        ++judged[j];
        correct[j] += v == gold[i];
      }
    }
  }

  for (std::size_t j = 0; j < m; ++j) {
    auto& s = out[j];
    s.name = names[j];
    s.polarity.assign(polarity[j].begin(), polarity[j].end());
    if (n > 0) {
      const double nn = static_cast<double>(n);
      s.coverage = static_cast<double>(s.fired) / nn;
      s.overlap = static_cast<double>(overlap[j]) / nn;
      s.conflict = static_cast<double>(conflict[j]) / nn;
    }
    if (judged[j] > 0)
      s.empirical_accuracy = static_cast<double>(correct[j]) / static_cast<double>(judged[j]);
  }
  return out;
}

std::vector<LfSummary> lf_summary(const VoteMatrix& votes, std::span<const LabelId> gold) {
  std::vector<std::string> names;
  for (const auto& lf : votes.lfs()) names.push_back(lf.name);
  return lf_summary(names, votes.num_rows(), votes.values(), gold);
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Code points, so the "—" placeholder aligns with ASCII cells.
std::size_t display_len(const std::string& s) {
  std::size_t len = 0;
  for (unsigned char c : s) len += (c & 0xC0) != 0x80;
  return len;
}

std::string pad(const std::string& s, std::size_t width) {
  std::size_t len = display_len(s);
  return len >= width ? s : s + std::string(width - len, ' ');
}

}  // namespace

Report render_report(std::span<const LfSummary> summaries) {
  static const std::vector<std::string> headers = {"lf",       "polarity",  "coverage",
                                                   "overlap",  "conflict",  "precision",
                                                   "emp_accuracy"};
  std::vector<std::vector<std::string>> rows;
  json lfs = json::array();
  for (const auto& s : summaries) {
    std::string pol = "{";
    for (std::size_t k = 0; k < s.polarity.size(); ++k)
      pol += (k ? "," : "") + std::to_string(s.polarity[k]);
    pol += "}";
    std::string acc = s.empirical_accuracy ? fmt4(*s.empirical_accuracy) : "—";
    rows.push_back({s.name, pol, fmt4(s.coverage), fmt4(s.overlap), fmt4(s.conflict), acc, acc});

    json rec = {{"name", s.name},         {"polarity", s.polarity}, {"coverage", s.coverage},
                {"overlap", s.overlap},   {"conflict", s.conflict}, {"fired", s.fired}};
    if (s.empirical_accuracy) {
      rec["precision"] = *s.empirical_accuracy;
      rec["emp_accuracy"] = *s.empirical_accuracy;
    } else {
      rec["precision"] = nullptr;
      rec["emp_accuracy"] = nullptr;
    }
    lfs.push_back(std::move(rec));
  }

  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], display_len(r[c]));
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out += pad(cells[c], width[c]);
      out += c + 1 < cells.size() ? "  " : "\n";
    }
    return out;
  };
  Report report;
  report.table = line(headers);
  for (const auto& r : rows) report.table += line(r);
  report.record = {{"columns", headers}, {"lfs", lfs}};
  return report;
}

}  // namespace dprog
