#include "dataprog/lfkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dataprog/errors.hpp"

namespace dprog {
namespace {

std::vector<std::string> distinct(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

std::vector<std::string> prepare_keywords(std::span<const std::string> raw,
                                          std::span<const Preprocessor> chain) {
  std::vector<std::string> out;
  for (const auto& kw : raw)
    for (auto& tok : tokenize(preprocess(chain, kw))) out.push_back(std::move(tok));
  return distinct(std::move(out));
}

double tf_cosine_prepared(std::span<const std::string> sorted_tokens,
                          std::span<const std::string> sorted_keywords) {
  if (sorted_tokens.empty() || sorted_keywords.empty()) return 0.0;
  std::size_t common = 0;
  auto a = sorted_tokens.begin();
  auto b = sorted_keywords.begin();
  while (a != sorted_tokens.end() && b != sorted_keywords.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(common) /
         (std::sqrt(static_cast<double>(sorted_tokens.size())) *
          std::sqrt(static_cast<double>(sorted_keywords.size())));
}

double feature_dot(const FeatureDot& fd, const Instance& inst) {
  if (!inst.features) throw DataError("scorer requires features (instance '" + inst.id + "')");
  const auto& x = *inst.features;
  if (x.size() != fd.weights.size())
    throw DataError("scorer requires features of dimension " + std::to_string(fd.weights.size()) +
                    " (instance '" + inst.id + "' has " + std::to_string(x.size()) + ")");
  double s = fd.bias;
  for (std::size_t k = 0; k < x.size(); ++k) s += fd.weights[k] * x[k];
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

std::string_view to_string(Preprocessor p) {
  switch (p) {
    case Preprocessor::lowercase: return "lowercase";
    case Preprocessor::strip_punct: return "strip_punct";
    case Preprocessor::tokenize_whitespace: return "tokenize_whitespace";
  }
  return "lowercase";
}

Preprocessor parse_preprocessor(std::string_view name) {
  if (name == "lowercase") return Preprocessor::lowercase;
  if (name == "strip_punct") return Preprocessor::strip_punct;
  if (name == "tokenize_whitespace") return Preprocessor::tokenize_whitespace;
  throw ConfigError("unknown preprocessor '" + std::string(name) + "'");
}

PreprocessorChain default_chain() {
  return {Preprocessor::lowercase, Preprocessor::strip_punct, Preprocessor::tokenize_whitespace};
}

std::string preprocess(std::span<const Preprocessor> chain, std::string_view payload) {
  std::string text(payload);
  for (Preprocessor p : chain) {
    switch (p) {
      case Preprocessor::lowercase:
        for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        break;
      case Preprocessor::strip_punct:
        std::erase_if(text, [](char c) { return std::ispunct(static_cast<unsigned char>(c)); });
        break;
      case Preprocessor::tokenize_whitespace: {
        std::string joined;
        for (const auto& tok : tokenize(text)) {
          if (!joined.empty()) joined += ' ';
          joined += tok;
        }
        text = std::move(joined);
        break;
      }
    }
  }
  return text;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

double tf_cosine(std::span<const std::string> tokens, std::span<const std::string> keywords) {
  auto t = distinct({tokens.begin(), tokens.end()});
  auto w = distinct({keywords.begin(), keywords.end()});
  return tf_cosine_prepared(t, w);
}

double score(const ContinuousScorer& scorer, const Instance& inst,
             std::span<const Preprocessor> chain) {
  if (const auto* tc = std::get_if<TfCosine>(&scorer.kind)) {
    auto tokens = distinct(tokenize(preprocess(chain, inst.text)));
    return tf_cosine_prepared(tokens, prepare_keywords(tc->keywords, chain));
  }
  return feature_dot(std::get<FeatureDot>(scorer.kind), inst);
}

// ---------------------------------------------------------------------------

CompiledRule::CompiledRule(RuleSpec spec, const LabelSpace& space) : spec_(std::move(spec)) {
  const std::string where = "rule '" + spec_.name + "'";
  if (spec_.name.empty()) throw ConfigError("rule with empty name");
  if (!space.contains(spec_.target))
    throw ConfigError(where + ": field 'target' is not a label id of the label space");
  if (auto* kw = std::get_if<KeywordRule>(&spec_.kind)) {
    keywords_ = prepare_keywords(kw->any_of, spec_.preprocessors);
    if (keywords_.empty()) throw ConfigError(where + ": field 'any_of' is empty");
  } else if (auto* rx = std::get_if<RegexRule>(&spec_.kind)) {
    try {
      regex_.emplace(rx->pattern, std::regex::extended);
    } catch (const std::regex_error& e) {
      throw ConfigError(where + ": field 'pattern' is not a valid regex (" + e.what() + ")");
    }
  } else if (auto* ct = std::get_if<ContinuousRule>(&spec_.kind)) {
    if (!(ct->threshold >= 0.0 && ct->threshold <= 1.0))
      throw ConfigError(where + ": field 'threshold' must lie in [0,1]");
    if (auto* tc = std::get_if<TfCosine>(&ct->scorer.kind)) {
      keywords_ = prepare_keywords(tc->keywords, spec_.preprocessors);
      if (keywords_.empty()) throw ConfigError(where + ": field 'scorer.keywords' is empty");
    } else if (std::get<FeatureDot>(ct->scorer.kind).weights.empty()) {
      throw ConfigError(where + ": field 'scorer.weights' is empty");
    }
  }
}

bool CompiledRule::is_continuous() const {
  return std::holds_alternative<ContinuousRule>(spec_.kind);
}

Vote CompiledRule::evaluate(const Instance& inst) const {
  const LabelId hit = spec_.target;
  if (std::holds_alternative<KeywordRule>(spec_.kind)) {
    auto tokens = tokenize(preprocess(spec_.preprocessors, inst.text));
    for (const auto& tok : tokens)
      if (std::binary_search(keywords_.begin(), keywords_.end(), tok)) return {hit, {}};
    return {};
  }
  if (std::holds_alternative<RegexRule>(spec_.kind)) {
    auto text = preprocess(spec_.preprocessors, inst.text);
    return std::regex_search(text, *regex_) ? Vote{hit, {}} : Vote{};
  }
  if (const auto* ft = std::get_if<FeatureThresholdRule>(&spec_.kind)) {
    if (!inst.features) throw DataError("rule '" + spec_.name + "' requires features");
    if (ft->index >= inst.features->size())
      throw DataError("rule '" + spec_.name + "': feature index out of range");
    double v = (*inst.features)[ft->index];
    bool fires = ft->op == Comparison::greater_equal ? v >= ft->value : v <= ft->value;
    return fires ? Vote{hit, {}} : Vote{};
  }
  const auto& ct = std::get<ContinuousRule>(spec_.kind);
  double s;
  if (std::holds_alternative<TfCosine>(ct.scorer.kind)) {
    auto tokens = distinct(tokenize(preprocess(spec_.preprocessors, inst.text)));
    s = tf_cosine_prepared(tokens, keywords_);
  } else {
    s = feature_dot(std::get<FeatureDot>(ct.scorer.kind), inst);
  }
  return {s >= ct.threshold ? hit : kAbstain, s};
}

FunctionRule::FunctionRule(std::string name, LabelId target,
                           std::function<bool(const Instance&)> predicate)
    : name_(std::move(name)), target_(target), predicate_(std::move(predicate)) {}

FunctionRule::FunctionRule(std::string name, LabelId target,
                           std::function<double(const Instance&)> scorer, double threshold)
    : name_(std::move(name)), target_(target), scorer_(std::move(scorer)), threshold_(threshold) {}

Vote FunctionRule::evaluate(const Instance& inst) const {
  if (!scorer_) return predicate_(inst) ? Vote{target_, {}} : Vote{};
  double s = std::clamp(scorer_(inst), 0.0, 1.0);
  return {s >= threshold_ ? target_ : kAbstain, s};
}

Vote evaluate_rule(const RuleSpec& rule, const Instance& inst, const LabelSpace& space) {
  return CompiledRule(rule, space).evaluate(inst);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::vector<std::string> string_array(const json& doc, const char* field, const std::string& where) {
  if (!doc.contains(field) || !doc[field].is_array())
    throw ConfigError(where + ": field '" + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : doc[field]) {
    if (!v.is_string()) throw ConfigError(where + ": field '" + field + "' must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

double number(const json& doc, const char* field, const std::string& where) {
  if (!doc.contains(field) || !doc[field].is_number())
    throw ConfigError(where + ": field '" + field + "' must be a number");
  return doc[field].get<double>();
}

ContinuousScorer scorer_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw ConfigError(where + ": field 'scorer.kind' must be a string");
  auto kind = doc["kind"].get<std::string>();
  if (kind == "tf_cosine") return {TfCosine{string_array(doc, "keywords", where + " scorer")}};
  if (kind == "feature_dot") {
    if (!doc.contains("weights") || !doc["weights"].is_array())
      throw ConfigError(where + ": field 'scorer.weights' must be an array of numbers");
    FeatureDot fd;
    for (const auto& w : doc["weights"]) {
      if (!w.is_number()) throw ConfigError(where + ": field 'scorer.weights' must hold numbers");
      fd.weights.push_back(w.get<double>());
    }
    if (doc.contains("bias")) fd.bias = number(doc, "bias", where + " scorer");
    return {fd};
  }
  throw ConfigError(where + ": unknown scorer kind '" + kind + "'");
}

json to_json(const ContinuousScorer& s) {
  if (const auto* tc = std::get_if<TfCosine>(&s.kind))
    return {{"kind", "tf_cosine"}, {"keywords", tc->keywords}};
  const auto& fd = std::get<FeatureDot>(s.kind);
  return {{"kind", "feature_dot"}, {"weights", fd.weights}, {"bias", fd.bias}};
}

}  // namespace

RuleSpec rule_spec_from_json(const json& doc, const LabelSpace& space) {
  if (!doc.is_object()) throw ConfigError("rules: each rule must be an object");
  if (!doc.contains("name") || !doc["name"].is_string())
    throw ConfigError("rules: field 'name' must be a string");
  RuleSpec spec;
  spec.name = doc["name"].get<std::string>();
  const std::string where = "rule '" + spec.name + "'";

  if (!doc.contains("target")) throw ConfigError(where + ": missing field 'target'");
  const auto& target = doc["target"];
  if (target.is_number_integer()) {
    spec.target = target.get<LabelId>();
  } else if (target.is_string()) {
    auto id = space.find(target.get<std::string>());
    if (!id) throw ConfigError(where + ": field 'target' names an unknown label");
    spec.target = *id;
  } else {
    throw ConfigError(where + ": field 'target' must be a label id or name");
  }

  if (doc.contains("preprocessors")) {
    spec.preprocessors.clear();
    for (const auto& name : string_array(doc, "preprocessors", where))
      try {
        spec.preprocessors.push_back(parse_preprocessor(name));
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": field 'preprocessors': " + e.what());
      }
  }

  if (!doc.contains("kind") || !doc["kind"].is_string())
    throw ConfigError(where + ": field 'kind' must be a string");
  auto kind = doc["kind"].get<std::string>();
  if (kind == "keyword") {
    spec.kind = KeywordRule{string_array(doc, "any_of", where)};
  } else if (kind == "regex") {
    if (!doc.contains("pattern") || !doc["pattern"].is_string())
      throw ConfigError(where + ": field 'pattern' must be a string");
    spec.kind = RegexRule{doc["pattern"].get<std::string>()};
  } else if (kind == "feature_threshold") {
    FeatureThresholdRule ft;
    if (!doc.contains("index") || !doc["index"].is_number_unsigned())
      throw ConfigError(where + ": field 'index' must be a non-negative integer");
    ft.index = doc["index"].get<std::size_t>();
    if (!doc.contains("op") || !doc["op"].is_string())
      throw ConfigError(where + ": field 'op' must be \">=\" or \"<=\"");
    auto op = doc["op"].get<std::string>();
    if (op == ">=")
      ft.op = Comparison::greater_equal;
    else if (op == "<=")
      ft.op = Comparison::less_equal;
    else
      throw ConfigError(where + ": field 'op' must be \">=\" or \"<=\"");
    ft.value = number(doc, "value", where);
    spec.kind = ft;
  } else if (kind == "continuous") {
    if (!doc.contains("scorer")) throw ConfigError(where + ": missing field 'scorer'");
    ContinuousRule ct{scorer_from_json(doc["scorer"], where), number(doc, "threshold", where)};
    spec.kind = std::move(ct);
  } else {
    throw ConfigError(where + ": unknown rule kind '" + kind + "'");
  }
  return spec;
}

json to_json(const RuleSpec& spec) {
  json doc = {{"name", spec.name}, {"target", spec.target}};
  json chain = json::array();
  for (auto p : spec.preprocessors) chain.push_back(std::string(to_string(p)));
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, KeywordRule>) {
          doc["kind"] = "keyword";
          doc["any_of"] = k.any_of;
        } else if constexpr (std::is_same_v<K, RegexRule>) {
          doc["kind"] = "regex";
          doc["pattern"] = k.pattern;
        } else if constexpr (std::is_same_v<K, FeatureThresholdRule>) {
          doc["kind"] = "feature_threshold";
          doc["index"] = k.index;
          doc["op"] = k.op == Comparison::greater_equal ? ">=" : "<=";
          doc["value"] = k.value;
        } else {
          doc["kind"] = "continuous";
          doc["scorer"] = to_json(k.scorer);
          doc["threshold"] = k.threshold;
        }
      },
      spec.kind);
  doc["preprocessors"] = chain;
  return doc;
}

RuleSet rule_set_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("rule file must be an object");
  if (!doc.contains("label_space")) throw ConfigError("rule file: missing field 'label_space'");
  RuleSet set{label_space_from_json(doc["label_space"]), {}, {}};
  if (!doc.contains("rules") || !doc["rules"].is_array())
    throw ConfigError("rule file: field 'rules' must be an array");
  for (const auto& r : doc["rules"]) {
    auto spec = rule_spec_from_json(r, set.space);
    for (const auto& prev : set.specs)
      if (prev.name == spec.name) throw ConfigError("rule '" + spec.name + "': duplicate name");
    set.rules.push_back(std::make_shared<CompiledRule>(spec, set.space));
    set.specs.push_back(std::move(spec));
  }
  return set;
}

json to_json(const RuleSet& set) {
  json rules = json::array();
  for (const auto& s : set.specs) rules.push_back(to_json(s));
  return {{"label_space", to_json(set.space)}, {"rules", rules}};
}

RuleSet load_rules(const std::filesystem::path& path) {
  auto doc = read_json_file(path, FileKind::config);
  try {
    return rule_set_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace dprog
