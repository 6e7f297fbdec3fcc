#include "dataprog/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "dataprog/errors.hpp"

namespace dprog {
namespace {

constexpr LabelId kSpam = 1;
constexpr LabelId kHam = 2;

struct PlantedLf {
  LabelId target;
  std::vector<std::string> primary;    // one of these is always inserted
  std::vector<std::string> secondary;  // continuous LFs: second keyword, informative
};

const std::vector<PlantedLf>& planted() {
  static const std::vector<PlantedLf> lfs = {
      {kSpam, {"free"}, {}},
      {kHam, {"meeting"}, {}},
      {kSpam, {"win", "winner"}, {}},
      {kHam, {"lunch", "dinner"}, {}},
      {kSpam, {"cash"}, {"prize"}},
      {kHam, {"call"}, {"tonight"}},
  };
  return lfs;
}

const std::vector<std::string>& filler() {
  static const std::vector<std::string> words = {
      "hey",   "ok",    "the",   "you",  "are",   "we",     "see",   "it",    "now",  "later",
      "thanks", "just", "got",   "your", "message", "text", "reply", "today", "week", "home",
      "phone", "send",  "back",  "soon", "new",   "offer",  "good",  "time",  "u",    "r",
      "pls",   "yes",   "no",    "here", "there", "this",   "that",  "what",  "when", "where",
      "number", "code", "stop",  "info", "claim", "mobile", "hope",  "sure",  "going", "done"};
  return words;
}

}  // namespace

RuleSet synthetic_rules() {
  json doc = {
      {"label_space", {{"labels", {{{"name", "spam"}, {"id", 1}}, {{"name", "ham"}, {"id", 2}}}}}},
      {"rules",
       {
           {{"name", "kw_free"}, {"target", "spam"}, {"kind", "keyword"}, {"any_of", {"free"}}},
           {{"name", "kw_meeting"}, {"target", "ham"}, {"kind", "keyword"}, {"any_of", {"meeting"}}},
           {{"name", "rx_winner"},
            {"target", "spam"},
            {"kind", "regex"},
            {"pattern", "(^| )win(ner)?( |$)"}},
           {{"name", "kw_meal"},
            {"target", "ham"},
            {"kind", "keyword"},
            {"any_of", {"lunch", "dinner"}}},
           {{"name", "ct_cash_prize"},
            {"target", "spam"},
            {"kind", "continuous"},
            {"scorer", {{"kind", "tf_cosine"}, {"keywords", {"cash", "prize"}}}},
            {"threshold", 0.05}},
           {{"name", "ct_call_tonight"},
            {"target", "ham"},
            {"kind", "continuous"},
            {"scorer", {{"kind", "tf_cosine"}, {"keywords", {"call", "tonight"}}}},
            {"threshold", 0.05}},
       }}};
  return rule_set_from_json(doc);
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  const auto& lfs = planted();
  if (cfg.lf_accuracies.size() != lfs.size())
    throw ConfigError("synthetic generator: expected " + std::to_string(lfs.size()) +
                      " LF accuracies");
  if (!(cfg.spam_fraction > 0.0 && cfg.spam_fraction < 1.0))
    throw ConfigError("synthetic generator: spam_fraction must lie in (0,1)");
  if (cfg.dim == 0) throw ConfigError("synthetic generator: dim must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> filler_count(4, 12);
  std::uniform_int_distribution<std::size_t> filler_pick(0, filler().size() - 1);

  // Class-conditional firing probabilities.
  std::vector<double> on_target(lfs.size()), off_target(lfs.size());
  for (std::size_t j = 0; j < lfs.size(); ++j) {
    double acc = cfg.lf_accuracies[j];
    if (!(acc > 0.0 && acc < 1.0)) throw ConfigError("synthetic generator: accuracy outside (0,1)");
    double prior = lfs[j].target == kSpam ? cfg.spam_fraction : 1.0 - cfg.spam_fraction;
    on_target[j] = cfg.lf_propensity;
    off_target[j] = prior * cfg.lf_propensity * (1.0 - acc) / ((1.0 - prior) * acc);
    if (off_target[j] > 1.0) throw ConfigError("synthetic generator: accuracy not attainable");
  }

  // Class means at +/- separation along a fixed unit direction spanning the
  // first min(4, dim) coordinates.
  const std::size_t span_dims = std::min<std::size_t>(4, cfg.dim);
  std::vector<double> direction(cfg.dim, 0.0);
  for (std::size_t k = 0; k < span_dims; ++k)
    direction[k] = 1.0 / std::sqrt(static_cast<double>(span_dims));

  auto make_split = [&](SplitRole role, std::size_t count, const char* prefix) {
    DataSplit split{role, {}};
    split.instances.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Instance inst;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05zu", prefix, i);
      inst.id = id;
      const LabelId y = unif(rng) < cfg.spam_fraction ? kSpam : kHam;
      inst.gold = y;

      std::vector<std::string> tokens;
      const std::size_t nf = filler_count(rng);
      for (std::size_t t = 0; t < nf; ++t) tokens.push_back(filler()[filler_pick(rng)]);
      for (std::size_t j = 0; j < lfs.size(); ++j) {
        const bool on = y == lfs[j].target;
        if (unif(rng) >= (on ? on_target[j] : off_target[j])) continue;
        const auto& prim = lfs[j].primary;
        tokens.push_back(prim[static_cast<std::size_t>(unif(rng) * prim.size()) % prim.size()]);
        if (!lfs[j].secondary.empty() && unif(rng) < (on ? 0.6 : 0.3))
          tokens.push_back(lfs[j].secondary.front());
      }
      std::shuffle(tokens.begin(), tokens.end(), rng);
      // Light surface noise for the preprocessors to undo.
      if (unif(rng) < 0.5) tokens.front()[0] = static_cast<char>(std::toupper(tokens.front()[0]));
      if (unif(rng) < 0.3) tokens[static_cast<std::size_t>(unif(rng) * tokens.size())] += "!";
      std::string text;
      for (const auto& t : tokens) {
        if (!text.empty()) text += ' ';
        text += t;
      }
      if (unif(rng) < 0.5) text += '.';
      inst.text = std::move(text);

      const double sign = y == kSpam ? 1.0 : -1.0;
      std::vector<double> x(cfg.dim);
      for (std::size_t k = 0; k < cfg.dim; ++k)
        x[k] = sign * cfg.feature_separation * direction[k] + noise(rng);
      inst.features = std::move(x);
      split.instances.push_back(std::move(inst));
    }
    return split;
  };

  SyntheticData data;
  data.rules = synthetic_rules();
  data.labeled = make_split(SplitRole::labeled, cfg.n_labeled, "L");
  data.unlabeled = make_split(SplitRole::unlabeled, cfg.n_unlabeled, "U");
  data.validation = make_split(SplitRole::validation, cfg.n_validation, "V");
  data.test = make_split(SplitRole::test, cfg.n_test, "T");
  return data;
}

}  // namespace dprog
