#include "dataprog/config.hpp"

#include <initializer_list>

#include "dataprog/errors.hpp"

namespace dprog {
namespace {

void only_keys(const json& obj, const std::string& section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError("config: unknown field '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& section, T& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj[key];
  const std::string where = "config: field '" + section + "." + key + "'";
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(where + " must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
    if (std::is_unsigned_v<T> && v.get<long long>() < 0)
      throw ConfigError(where + " must be non-negative");
  } else {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
  }
  out = v.get<T>();
}

}  // namespace

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  cage.seed = s;
  jl.seed = s;
}

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig cfg;
  only_keys(doc, "", {"seed", "cage", "jl", "subset"});
  std::uint64_t seed = 0;
  read(doc, "seed", "", seed);
  cfg.set_seed(seed);

  if (doc.contains("cage")) {
    const auto& c = doc["cage"];
    only_keys(c, "cage", {"epochs", "learning_rate", "qg_weight", "score_clamp", "concentration"});
    read(c, "epochs", "cage", cfg.cage.epochs);
    read(c, "learning_rate", "cage", cfg.cage.learning_rate);
    read(c, "qg_weight", "cage", cfg.cage.qg_weight);
    read(c, "score_clamp", "cage", cfg.cage.score_clamp);
    read(c, "concentration", "cage", cfg.cage.concentration);
  }
  if (doc.contains("jl")) {
    const auto& j = doc["jl"];
    only_keys(j, "jl", {"arch", "hidden", "epochs", "learning_rate", "head", "kl", "score_clamp",
                        "concentration", "weights"});
    std::string text;
    if (j.contains("arch")) {
      read(j, "arch", "jl", text);
      cfg.jl.arch = parse_arch(text);
    }
    read(j, "hidden", "jl", cfg.jl.hidden);
    read(j, "epochs", "jl", cfg.jl.epochs);
    read(j, "learning_rate", "jl", cfg.jl.learning_rate);
    if (j.contains("head")) {
      read(j, "head", "jl", text);
      cfg.jl.head = parse_head(text);
    }
    if (j.contains("kl")) {
      read(j, "kl", "jl", text);
      cfg.jl.kl = parse_kl_direction(text);
    }
    read(j, "score_clamp", "jl", cfg.jl.score_clamp);
    read(j, "concentration", "jl", cfg.jl.concentration);
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      only_keys(w, "jl.weights", {"fm_sup", "gm_sup", "gm_unsup", "agree", "lambda"});
      read(w, "fm_sup", "jl.weights", cfg.jl.weights.fm_sup);
      read(w, "gm_sup", "jl.weights", cfg.jl.weights.gm_sup);
      read(w, "gm_unsup", "jl.weights", cfg.jl.weights.gm_unsup);
      read(w, "agree", "jl.weights", cfg.jl.weights.agree);
      read(w, "lambda", "jl.weights", cfg.jl.weights.lambda);
    }
  }
  if (doc.contains("subset")) {
    const auto& s = doc["subset"];
    only_keys(s, "subset", {"method", "k", "similarity", "sigma"});
    read(s, "method", "subset", cfg.subset.method);
    read(s, "k", "subset", cfg.subset.k);
    if (s.contains("similarity")) {
      std::string text;
      read(s, "similarity", "subset", text);
      cfg.subset.similarity.kind = parse_similarity(text);
    }
    read(s, "sigma", "subset", cfg.subset.similarity.sigma);
  }
  cfg.cage.validate();
  cfg.jl.validate();
  const auto& m = cfg.subset.method;
  if (m != "rand" && m != "fl" && m != "maxcover" && m != "sup")
    throw ConfigError("config: field 'subset.method' must be one of rand, fl, maxcover, sup");
  if (cfg.subset.k == 0) throw ConfigError("config: field 'subset.k' must be >= 1");
  if (!(cfg.subset.similarity.sigma > 0.0))
    throw ConfigError("config: field 'subset.sigma' must be > 0");
  return cfg;
}

json to_json(const PipelineConfig& cfg) {
  const auto& w = cfg.jl.weights;
  return {{"seed", cfg.seed},
          {"cage",
           {{"epochs", cfg.cage.epochs},
            {"learning_rate", cfg.cage.learning_rate},
            {"qg_weight", cfg.cage.qg_weight},
            {"score_clamp", cfg.cage.score_clamp},
            {"concentration", cfg.cage.concentration}}},
          {"jl",
           {{"arch", std::string(to_string(cfg.jl.arch))},
            {"hidden", cfg.jl.hidden},
            {"epochs", cfg.jl.epochs},
            {"learning_rate", cfg.jl.learning_rate},
            {"head", std::string(to_string(cfg.jl.head))},
            {"kl", std::string(to_string(cfg.jl.kl))},
            {"score_clamp", cfg.jl.score_clamp},
            {"concentration", cfg.jl.concentration},
            {"weights",
             {{"fm_sup", w.fm_sup},
              {"gm_sup", w.gm_sup},
              {"gm_unsup", w.gm_unsup},
              {"agree", w.agree},
              {"lambda", w.lambda}}}}},
          {"subset",
           {{"method", cfg.subset.method},
            {"k", cfg.subset.k},
            {"similarity", std::string(to_string(cfg.subset.similarity.kind))},
            {"sigma", cfg.subset.similarity.sigma}}}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  auto doc = read_json_file(path, FileKind::config);
  try {
    return config_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace dprog
