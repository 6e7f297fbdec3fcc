#include "dataprog/core.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_set>

#include "dataprog/errors.hpp"

namespace dprog {

LabelSpace::LabelSpace(std::vector<ClassLabel> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw ConfigError("label space: at least 2 classes are required");
  std::sort(labels_.begin(), labels_.end(),
            [](const ClassLabel& a, const ClassLabel& b) { return a.id < b.id; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& label = labels_[i];
    if (label.id == kAbstain) throw ConfigError("label space: id 0 is reserved for abstain");
    if (label.id != static_cast<LabelId>(i + 1))
      throw ConfigError("label space: ids must be exactly 1..K (got id " +
                        std::to_string(label.id) + ")");
    if (label.name.empty()) throw ConfigError("label space: empty label name");
    if (!names.insert(label.name).second)
      throw ConfigError("label space: duplicate label name '" + label.name + "'");
  }
}

const std::string& LabelSpace::name(LabelId id) const {
  if (!contains(id)) throw DataError("label out of range: " + std::to_string(id));
  return labels_[static_cast<std::size_t>(id - 1)].name;
}

std::optional<LabelId> LabelSpace::find(std::string_view name) const {
  for (const auto& label : labels_)
    if (label.name == name) return label.id;
  return std::nullopt;
}

std::string_view to_string(SplitRole role) {
  switch (role) {
    case SplitRole::labeled: return "L";
    case SplitRole::unlabeled: return "U";
    case SplitRole::validation: return "V";
    case SplitRole::test: return "T";
  }
  return "U";
}

SplitRole parse_split_role(std::string_view text) {
  if (text == "L" || text == "labeled") return SplitRole::labeled;
  if (text == "U" || text == "unlabeled") return SplitRole::unlabeled;
  if (text == "V" || text == "validation") return SplitRole::validation;
  if (text == "T" || text == "test") return SplitRole::test;
  throw ConfigError("unknown split role '" + std::string(text) + "'");
}

ValidationReport validate_dataset(const DataSplit& split, const LabelSpace& space) {
  ValidationReport report;
  const bool needs_gold = split.role != SplitRole::unlabeled;
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> dim;
  for (const auto& inst : split.instances) {
    auto flag = [&](std::string reason) {
      report.violations.push_back({inst.id, std::move(reason)});
    };
    if (inst.id.empty()) flag("empty id");
    if (!seen.insert(inst.id).second) flag("duplicate id");
    if (inst.gold) {
      if (!space.contains(*inst.gold)) flag("label out of range");
    } else if (needs_gold) {
      flag("missing gold");
    }
    if (inst.features) {
      if (!dim) dim = inst.features->size();
      if (inst.features->size() != *dim) flag("feature dimension mismatch");
      if (std::any_of(inst.features->begin(), inst.features->end(),
                      [](double v) { return !std::isfinite(v); }))
        flag("non-finite feature");
    }
  }
  return report;
}

std::vector<LabelId> gold_labels(const DataSplit& split) {
  std::vector<LabelId> gold;
  gold.reserve(split.size());
  for (const auto& inst : split.instances) gold.push_back(inst.gold.value_or(kAbstain));
  return gold;
}

Matrix feature_matrix(const DataSplit& split) {
  if (split.instances.empty()) return {};
  std::size_t d = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& inst = split.instances[i];
    if (!inst.features) throw DataError("instance '" + inst.id + "' has no features");
    if (i == 0) d = inst.features->size();
    if (inst.features->size() != d)
      throw DataError("instance '" + inst.id + "': feature dimension mismatch");
  }
  Matrix x(split.size(), d);
  for (std::size_t i = 0; i < split.size(); ++i)
    std::copy(split.instances[i].features->begin(), split.instances[i].features->end(),
              x.row(i).begin());
  return x;
}

VoteMatrix::VoteMatrix(LabelSpace space, std::vector<LfInfo> lfs, std::size_t n,
                       std::vector<LabelId> votes)
    : space_(std::move(space)), lfs_(std::move(lfs)), n_(n), votes_(std::move(votes)) {
  if (votes_.size() != n_ * lfs_.size())
    throw DataError("vote matrix: expected " + std::to_string(n_ * lfs_.size()) +
                    " votes, got " + std::to_string(votes_.size()));
  for (const auto& lf : lfs_)
    if (!space_.contains(lf.target))
      throw DataError("vote matrix: LF '" + lf.name + "' target label out of range");
  const std::size_t m = lfs_.size();
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      LabelId v = votes_[i * m + j];
      if (v == kAbstain || v == lfs_[j].target) continue;
      if (!space_.contains(v))
        throw DataError("vote matrix: label out of range (" + std::to_string(v) + ") at row " +
                        std::to_string(i) + ", LF '" + lfs_[j].name + "'");
      throw DataError("vote matrix: vote " + std::to_string(v) + " at row " + std::to_string(i) +
                      " differs from target of LF '" + lfs_[j].name + "'");
    }
  }
}

VoteMatrix VoteMatrix::select_rows(std::span<const std::size_t> indices) const {
  const std::size_t m = lfs_.size();
  std::vector<LabelId> out;
  out.reserve(indices.size() * m);
  for (std::size_t i : indices) {
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return VoteMatrix(space_, lfs_, indices.size(), std::move(out));
}

ScoreMatrix::ScoreMatrix(std::size_t n, std::size_t m)
    : n_(n), m_(m), values_(n * m, std::numeric_limits<double>::quiet_NaN()) {}

ScoreMatrix::ScoreMatrix(std::size_t n, std::size_t m, std::vector<double> values)
    : n_(n), m_(m), values_(std::move(values)) {
  if (values_.size() != n_ * m_) throw DataError("score matrix: shape mismatch");
  for (double v : values_)
    if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0))
      throw DataError("score matrix: score outside [0,1]");
}

void ScoreMatrix::set(std::size_t i, std::size_t j, std::optional<double> v) {
  if (v && !(*v >= 0.0 && *v <= 1.0)) throw DataError("score matrix: score outside [0,1]");
  values_[i * m_ + j] = v.value_or(std::numeric_limits<double>::quiet_NaN());
}

ScoreMatrix ScoreMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * m_);
  for (std::size_t i : indices) {
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return ScoreMatrix(indices.size(), m_, std::move(out));
}

bool operator==(const ScoreMatrix& a, const ScoreMatrix& b) {
  if (a.n_ != b.n_ || a.m_ != b.m_) return false;
  for (std::size_t k = 0; k < a.values_.size(); ++k) {
    double x = a.values_[k], y = b.values_[k];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

void check_aligned(const VoteMatrix& votes, const ScoreMatrix& scores) {
  if (votes.num_rows() != scores.num_rows() || votes.num_lfs() != scores.num_lfs())
    throw DataError("score matrix shape (" + std::to_string(scores.num_rows()) + "x" +
                    std::to_string(scores.num_lfs()) + ") does not match vote matrix (" +
                    std::to_string(votes.num_rows()) + "x" + std::to_string(votes.num_lfs()) +
                    ")");
  for (std::size_t j = 0; j < votes.num_lfs(); ++j) {
    if (votes.lf(j).continuous) continue;
    for (std::size_t i = 0; i < votes.num_rows(); ++i)
      if (scores.has(i, j))
        throw DataError("score on discrete LF '" + votes.lf(j).name + "' at row " +
                        std::to_string(i));
  }
}

LabelId argmax_label(std::span<const double> proba) {
  std::size_t best = 0;
  for (std::size_t y = 1; y < proba.size(); ++y)
    if (proba[y] > proba[best]) best = y;
  return static_cast<LabelId>(best + 1);
}

}  // namespace dprog
