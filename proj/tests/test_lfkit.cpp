#include <doctest.h>

#include <cmath>

#include "dataprog/errors.hpp"
#include "dataprog/lfkit.hpp"
#include "oracles.hpp"

using namespace dprog;

namespace {

const LabelSpace kSpace({{"spam", 1}, {"ham", 2}});

Instance text(std::string t) { return {"i", std::move(t), std::nullopt, std::nullopt}; }

RuleSpec cash_rule(double threshold) {
  return {"cash", 1, ContinuousRule{{TfCosine{{"free", "cash"}}}, threshold}, default_chain()};
}

}  // namespace

TEST_CASE("preprocess") {
  const PreprocessorChain lower = {Preprocessor::lowercase};
  const PreprocessorChain lower_strip = {Preprocessor::lowercase, Preprocessor::strip_punct};
  CHECK(preprocess(lower, "Free CASH") == "free cash");
  CHECK(preprocess({}, "abc") == "abc");
  CHECK(preprocess(lower_strip, "Win!!") == "win");
  CHECK(preprocess(default_chain(), "  Hello,\t WORLD!  ") == "hello world");
  CHECK(tokenize("a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("tf_cosine score") {
  ContinuousScorer fc{TfCosine{{"free", "cash"}}};
  CHECK(score(fc, text("win free cash now")) == doctest::Approx(2.0 / (2.0 * std::sqrt(2.0))));
  CHECK(score(fc, text("win free cash now")) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(score(ContinuousScorer{TfCosine{{"free"}}}, text("free free")) == 1.0);
  CHECK(score(ContinuousScorer{TfCosine{{"xyz"}}}, text("hello world")) == 0.0);
  CHECK(score(fc, text("")) == 0.0);
}

TEST_CASE("feature_dot score") {
  ContinuousScorer fd{FeatureDot{{0.5, 0.25}, 0.1}};
  Instance x{"x", "", std::vector<double>{1.0, 2.0}, std::nullopt};
  CHECK(score(fd, x) == doctest::Approx(1.0));  // 0.1 + 0.5 + 0.5 = 1.1, clamped
  x.features = std::vector<double>{-1.0, 0.0};
  CHECK(score(fd, x) == 0.0);
  x.features = std::vector<double>{0.4, 0.0};
  CHECK(score(fd, x) == doctest::Approx(0.3));
  CHECK_THROWS_WITH_AS(score(fd, text("no features")), doctest::Contains("scorer requires features"),
                       DataError);
}

TEST_CASE("evaluate_rule") {
  RuleSpec free_kw{"free", 1, KeywordRule{{"free"}}, default_chain()};
  CHECK(evaluate_rule(free_kw, text("a free prize"), kSpace) == Vote{1, {}});
  CHECK(evaluate_rule(free_kw, text("A FREE prize!"), kSpace) == Vote{1, {}});
  CHECK(evaluate_rule(free_kw, text("freedom"), kSpace) == Vote{});

  auto fired = evaluate_rule(cash_rule(0.5), text("win free cash now"), kSpace);
  CHECK(fired.label == 1);
  REQUIRE(fired.score);
  CHECK(*fired.score == doctest::Approx(0.7071).epsilon(1e-4));

  auto abstained = evaluate_rule(cash_rule(0.8), text("win free cash now"), kSpace);
  CHECK(abstained.label == kAbstain);
  REQUIRE(abstained.score);
  CHECK(*abstained.score == doctest::Approx(0.7071).epsilon(1e-4));

  RuleSpec rx{"rx", 2, RegexRule{"mee?ting"}, default_chain()};
  CHECK(evaluate_rule(rx, text("Meeting at noon"), kSpace).label == 2);
  CHECK(evaluate_rule(rx, text("greeting"), kSpace).label == kAbstain);

  RuleSpec ft{"ft", 2, FeatureThresholdRule{1, Comparison::less_equal, 0.0}, default_chain()};
  Instance x{"x", "", std::vector<double>{5.0, -1.0}, std::nullopt};
  CHECK(evaluate_rule(ft, x, kSpace).label == 2);
  x.features = std::vector<double>{5.0, 0.5};
  CHECK(evaluate_rule(ft, x, kSpace).label == kAbstain);
  CHECK_THROWS_AS(evaluate_rule(ft, text("none"), kSpace), DataError);
}

TEST_CASE("configuration errors surface at compile time") {
  RuleSpec bad_rx{"bad", 1, RegexRule{"(unclosed"}, default_chain()};
  CHECK_THROWS_AS(CompiledRule(bad_rx, kSpace), ConfigError);
  RuleSpec bad_target{"t", 3, KeywordRule{{"x"}}, default_chain()};
  CHECK_THROWS_AS(CompiledRule(bad_target, kSpace), ConfigError);
  CHECK_THROWS_AS(CompiledRule(cash_rule(1.5), kSpace), ConfigError);
  RuleSpec empty_kw{"e", 1, KeywordRule{{}}, default_chain()};
  CHECK_THROWS_AS(CompiledRule(empty_kw, kSpace), ConfigError);
}

TEST_CASE("programmatic rules") {
  FunctionRule longish("long", 2, [](const Instance& i) { return i.text.size() > 5; });
  CHECK(longish.evaluate(text("abcdefg")).label == 2);
  CHECK(longish.evaluate(text("abc")).label == kAbstain);
  FunctionRule len_score(
      "len", 1, [](const Instance& i) { return static_cast<double>(i.text.size()) / 10.0; }, 0.5);
  CHECK(len_score.is_continuous());
  CHECK(len_score.evaluate(text("abcdef")) == Vote{1, 0.6});
  CHECK(len_score.evaluate(text("ab")) == Vote{kAbstain, 0.2});
}

TEST_CASE("properties over random rules and texts") {
  oracle::Rng rng(11);
  const std::vector<std::string> vocab = {"free", "cash", "win", "meeting", "lunch", "Hello!", "x"};
  auto random_text = [&] {
    std::string t;
    for (std::size_t k = rng.index(0, 8); k > 0; --k) t += vocab[rng.index(0, vocab.size() - 1)] + " ";
    return t;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> kws;
    for (std::size_t k = rng.index(1, 3); k > 0; --k) kws.push_back(vocab[rng.index(0, vocab.size() - 1)]);
    const LabelId target = static_cast<LabelId>(rng.index(1, 2));
    RuleSpec kw{"kw", target, KeywordRule{kws}, default_chain()};
    double lo = rng.uniform(0.0, 1.0), hi = rng.uniform(lo, 1.0);
    RuleSpec ct_lo{"c", target, ContinuousRule{{TfCosine{kws}}, lo}, default_chain()};
    RuleSpec ct_hi{"c", target, ContinuousRule{{TfCosine{kws}}, hi}, default_chain()};
    auto x = text(random_text());

    for (const auto& r : {kw, ct_lo, ct_hi}) {
      auto v = evaluate_rule(r, x, kSpace);
      CHECK((v.label == kAbstain || v.label == target));   // single polarity
      CHECK(v == evaluate_rule(r, x, kSpace));              // deterministic
    }
    // Raising the threshold never turns an abstain into a fire.
    if (!evaluate_rule(ct_lo, x, kSpace).fired()) CHECK_FALSE(evaluate_rule(ct_hi, x, kSpace).fired());
  }
}

TEST_CASE("rule file parsing") {
  json doc = json::parse(R"({
    "label_space": {"labels": [{"name": "spam", "id": 1}, {"name": "ham", "id": 2}]},
    "rules": [
      {"name": "kw", "target": "spam", "kind": "keyword", "any_of": ["Free"]},
      {"name": "rx", "target": 2, "kind": "regex", "pattern": "^hi", "preprocessors": []},
      {"name": "ft", "target": 1, "kind": "feature_threshold", "index": 0, "op": ">=", "value": 1.5},
      {"name": "ct", "target": 2, "kind": "continuous",
       "scorer": {"kind": "feature_dot", "weights": [1, -1], "bias": 0.5}, "threshold": 0.2}
    ]})");
  auto set = rule_set_from_json(doc);
  REQUIRE(set.rules.size() == 4);
  CHECK(set.rules[0]->target() == 1);
  CHECK(set.rules[0]->evaluate(text("FREE stuff")).label == 1);
  CHECK(set.rules[1]->evaluate(text("Hi there")).label == kAbstain);  // empty chain keeps case
  CHECK(set.rules[3]->is_continuous());
  // Serialize and parse again: same specs.
  auto again = rule_set_from_json(to_json(set));
  CHECK(to_json(again) == to_json(set));

  auto broken = doc;
  broken["rules"][1]["pattern"] = "([";
  CHECK_THROWS_WITH_AS(rule_set_from_json(broken), doctest::Contains("pattern"), ConfigError);
  broken = doc;
  broken["rules"][2]["op"] = ">";
  CHECK_THROWS_WITH_AS(rule_set_from_json(broken), doctest::Contains("'op'"), ConfigError);
  broken = doc;
  broken["rules"][0]["target"] = "eggs";
  CHECK_THROWS_WITH_AS(rule_set_from_json(broken), doctest::Contains("'target'"), ConfigError);
  broken = doc;
  broken["rules"][1]["name"] = "kw";
  CHECK_THROWS_WITH_AS(rule_set_from_json(broken), doctest::Contains("duplicate"), ConfigError);
}
