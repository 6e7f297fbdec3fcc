#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"

namespace dprog {

// ---------------------------------------------------------------------------
// Preprocessors

enum class Preprocessor { lowercase, strip_punct, tokenize_whitespace };
using PreprocessorChain = std::vector<Preprocessor>;

std::string_view to_string(Preprocessor p);
Preprocessor parse_preprocessor(std::string_view name);

/// lowercase, strip_punct, tokenize_whitespace: used when a rule does not
/// declare its own chain.
PreprocessorChain default_chain();

/// Applies `chain` left to right. `tokenize_whitespace` collapses whitespace
/// runs to single spaces and trims both ends.
std::string preprocess(std::span<const Preprocessor> chain, std::string_view payload);

/// Whitespace split.
std::vector<std::string> tokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Continuous scorers

/// |T ∩ W| / (sqrt|T| * sqrt|W|) over distinct tokens.
struct TfCosine {
  std::vector<std::string> keywords;
};

/// clamp(weights · features + bias, 0, 1).
struct FeatureDot {
  std::vector<double> weights;
  double bias = 0.0;
};

struct ContinuousScorer {
  std::variant<TfCosine, FeatureDot> kind;
};

/// Token-set cosine between `tokens` and `keywords` (both deduplicated).
double tf_cosine(std::span<const std::string> tokens, std::span<const std::string> keywords);

/// Score in [0,1]. Throws DataError("scorer requires features") for
/// feature_dot on an instance without features (or with a dimension that
/// does not match the weights).
double score(const ContinuousScorer& scorer, const Instance& inst,
             std::span<const Preprocessor> chain = default_chain());

// ---------------------------------------------------------------------------
// Rule specs

struct KeywordRule {
  std::vector<std::string> any_of;
};

/// POSIX extended regular expression, searched anywhere in the
/// preprocessed payload.
struct RegexRule {
  std::string pattern;
};

enum class Comparison { greater_equal, less_equal };

struct FeatureThresholdRule {
  std::size_t index = 0;
  Comparison op = Comparison::greater_equal;
  double value = 0.0;
};

struct ContinuousRule {
  ContinuousScorer scorer;
  double threshold = 0.5;
};

struct RuleSpec {
  std::string name;
  LabelId target = kAbstain;
  std::variant<KeywordRule, RegexRule, FeatureThresholdRule, ContinuousRule> kind;
  PreprocessorChain preprocessors = default_chain();
};

/// Output of one LF on one instance. Continuous LFs carry their score even
/// when they abstain.
struct Vote {
  LabelId label = kAbstain;
  std::optional<double> score;

  bool fired() const noexcept { return label != kAbstain; }
  friend bool operator==(const Vote&, const Vote&) = default;
};

// ---------------------------------------------------------------------------
// Labeling functions

/// A single-polarity labeling function: it emits its target or abstains.
class LabelingFunction {
 public:
  virtual ~LabelingFunction() = default;
  virtual const std::string& name() const = 0;
  virtual LabelId target() const = 0;
  virtual bool is_continuous() const = 0;
  /// Pure; safe to call concurrently.
  virtual Vote evaluate(const Instance& inst) const = 0;
};

using LfPtr = std::shared_ptr<const LabelingFunction>;

/// A RuleSpec validated against a label space, with its regex and keyword
/// set prepared once.
class CompiledRule final : public LabelingFunction {
 public:
  /// Throws ConfigError on an invalid target, malformed regex, threshold
  /// outside [0,1], or an empty keyword/scorer definition.
  CompiledRule(RuleSpec spec, const LabelSpace& space);

  const std::string& name() const override { return spec_.name; }
  LabelId target() const override { return spec_.target; }
  bool is_continuous() const override;
  Vote evaluate(const Instance& inst) const override;

  const RuleSpec& spec() const noexcept { return spec_; }

 private:
  RuleSpec spec_;
  std::vector<std::string> keywords_;  // preprocessed, sorted, unique
  std::optional<std::regex> regex_;
};

/// Code-defined LF. A discrete one fires when `predicate` holds; a
/// continuous one fires when `scorer(inst) >= threshold`.
class FunctionRule final : public LabelingFunction {
 public:
  FunctionRule(std::string name, LabelId target, std::function<bool(const Instance&)> predicate);
  FunctionRule(std::string name, LabelId target, std::function<double(const Instance&)> scorer,
               double threshold);

  const std::string& name() const override { return name_; }
  LabelId target() const override { return target_; }
  bool is_continuous() const override { return static_cast<bool>(scorer_); }
  Vote evaluate(const Instance& inst) const override;

 private:
  std::string name_;
  LabelId target_;
  std::function<bool(const Instance&)> predicate_;
  std::function<double(const Instance&)> scorer_;
  double threshold_ = 0.0;
};

/// Convenience: compiles `rule` against `space` and evaluates it once.
Vote evaluate_rule(const RuleSpec& rule, const Instance& inst, const LabelSpace& space);

// ---------------------------------------------------------------------------
// Rule files

struct RuleSet {
  LabelSpace space;
  std::vector<LfPtr> rules;
  std::vector<RuleSpec> specs;
};

/// `targets` may be integers or label names.
RuleSpec rule_spec_from_json(const json& doc, const LabelSpace& space);
json to_json(const RuleSpec& spec);

/// {"label_space": {...}, "rules": [RuleSpec...]}. Throws ConfigError
/// naming the offending rule and field.
RuleSet rule_set_from_json(const json& doc);
json to_json(const RuleSet& set);
RuleSet load_rules(const std::filesystem::path& path);

}  // namespace dprog
