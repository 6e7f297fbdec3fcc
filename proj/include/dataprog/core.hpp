#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataprog/matrix.hpp"

namespace dprog {

/// Class label id. Declared classes are 1..K; 0 is the abstain sentinel.
using LabelId = int;
inline constexpr LabelId kAbstain = 0;

struct ClassLabel {
  std::string name;
  LabelId id = kAbstain;

  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

/// The declared set of K >= 2 classes with dense ids 1..K.
class LabelSpace {
 public:
  LabelSpace() = default;
  /// Throws ConfigError unless ids are exactly {1..K}, K >= 2, and names are
  /// unique and non-empty. Labels are stored sorted by id.
  explicit LabelSpace(std::vector<ClassLabel> labels);

  int num_classes() const noexcept { return static_cast<int>(labels_.size()); }
  const std::vector<ClassLabel>& labels() const noexcept { return labels_; }
  bool contains(LabelId id) const noexcept { return id >= 1 && id <= num_classes(); }
  const std::string& name(LabelId id) const;
  std::optional<LabelId> find(std::string_view name) const;

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<ClassLabel> labels_;
};

struct Instance {
  std::string id;
  std::string text;
  std::optional<std::vector<double>> features;
  std::optional<LabelId> gold;
};

enum class SplitRole { labeled, unlabeled, validation, test };

std::string_view to_string(SplitRole role);
/// Accepts "L", "U", "V", "T" (or the spelled-out names).
SplitRole parse_split_role(std::string_view text);

struct DataSplit {
  SplitRole role = SplitRole::unlabeled;
  std::vector<Instance> instances;

  std::size_t size() const noexcept { return instances.size(); }
};

struct Violation {
  std::string instance_id;
  std::string reason;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Checks every Instance and DataSplit invariant. Violations are returned as
/// data, one entry per offending instance and reason.
ValidationReport validate_dataset(const DataSplit& split, const LabelSpace& space);

/// Gold labels per row, kAbstain where unknown.
std::vector<LabelId> gold_labels(const DataSplit& split);

/// n x d feature matrix. Throws DataError if any instance lacks features or
/// dimensions disagree.
Matrix feature_matrix(const DataSplit& split);

/// Static description of one labeling function column.
struct LfInfo {
  std::string name;
  LabelId target = kAbstain;
  bool continuous = false;

  friend bool operator==(const LfInfo&, const LfInfo&) = default;
};

/// n x m table of LF votes, stored instance-major. Every vote is either
/// kAbstain or the target of its column.
class VoteMatrix {
 public:
  VoteMatrix() = default;
  /// Throws DataError when `votes.size() != n * lfs.size()`, a target is not
  /// in `space`, or a vote is neither abstain nor its column's target.
  VoteMatrix(LabelSpace space, std::vector<LfInfo> lfs, std::size_t n, std::vector<LabelId> votes);

  std::size_t num_rows() const noexcept { return n_; }
  std::size_t num_lfs() const noexcept { return lfs_.size(); }
  int num_classes() const noexcept { return space_.num_classes(); }
  const LabelSpace& label_space() const noexcept { return space_; }
  const std::vector<LfInfo>& lfs() const noexcept { return lfs_; }
  const LfInfo& lf(std::size_t j) const { return lfs_[j]; }

  LabelId operator()(std::size_t i, std::size_t j) const { return votes_[i * lfs_.size() + j]; }
  bool fired(std::size_t i, std::size_t j) const { return (*this)(i, j) != kAbstain; }
  std::span<const LabelId> row(std::size_t i) const {
    return {votes_.data() + i * lfs_.size(), lfs_.size()};
  }
  const std::vector<LabelId>& values() const noexcept { return votes_; }

  /// Rows `indices` of this matrix, in the given order.
  VoteMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const VoteMatrix&, const VoteMatrix&) = default;

 private:
  LabelSpace space_;
  std::vector<LfInfo> lfs_;
  std::size_t n_ = 0;
  std::vector<LabelId> votes_;
};

/// n x m continuous LF confidences. Missing entries are NaN internally.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  /// All entries missing.
  ScoreMatrix(std::size_t n, std::size_t m);
  /// Throws DataError on shape mismatch or a present score outside [0,1].
  ScoreMatrix(std::size_t n, std::size_t m, std::vector<double> values);

  std::size_t num_rows() const noexcept { return n_; }
  std::size_t num_lfs() const noexcept { return m_; }
  bool has(std::size_t i, std::size_t j) const { return !std::isnan(values_[i * m_ + j]); }
  std::optional<double> get(std::size_t i, std::size_t j) const {
    double v = values_[i * m_ + j];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
  /// Requires has(i, j).
  double operator()(std::size_t i, std::size_t j) const { return values_[i * m_ + j]; }
  void set(std::size_t i, std::size_t j, std::optional<double> v);
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * m_, m_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  ScoreMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const ScoreMatrix& a, const ScoreMatrix& b);

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> values_;
};

/// Throws DataError if the matrices disagree in shape or a score is present
/// in a discrete LF column.
void check_aligned(const VoteMatrix& votes, const ScoreMatrix& scores);

/// Index of the largest value; ties go to the smallest index. Returns the
/// class id (index + 1).
LabelId argmax_label(std::span<const double> proba);

}  // namespace dprog
