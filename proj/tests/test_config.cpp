#include <doctest.h>

#include "dataprog/config.hpp"
#include "dataprog/errors.hpp"

using namespace dprog;

TEST_CASE("defaults") {
  auto cfg = config_from_json(json::object());
  CHECK(cfg.cage.epochs == 100);
  CHECK(cfg.cage.learning_rate == 0.01);
  CHECK(cfg.cage.qg_weight == 1.0);
  CHECK(cfg.jl.head == InferenceHead::mean);
  CHECK(cfg.jl.arch == FmArch::linear);
  CHECK(cfg.subset.method == "fl");
}

TEST_CASE("full document round trip") {
  auto doc = json::parse(R"({
    "seed": 7,
    "cage": {"epochs": 20, "learning_rate": 0.05, "qg_weight": 0.5, "score_clamp": 0.01,
             "concentration": 4},
    "jl": {"arch": "mlp", "hidden": 8, "epochs": 30, "learning_rate": 0.02, "head": "gm",
           "kl": "fm_gm", "weights": {"fm_sup": 1, "gm_sup": 0.5, "gm_unsup": 0.25,
                                      "agree": 2, "lambda": 0.1}},
    "subset": {"method": "sup", "k": 12, "similarity": "rbf", "sigma": 0.3}})");
  auto cfg = config_from_json(doc);
  CHECK(cfg.seed == 7);
  CHECK(cfg.cage.seed == 7);
  CHECK(cfg.jl.seed == 7);
  CHECK(cfg.cage.epochs == 20);
  CHECK(cfg.cage.concentration == 4.0);
  CHECK(cfg.jl.arch == FmArch::mlp);
  CHECK(cfg.jl.hidden == 8);
  CHECK(cfg.jl.head == InferenceHead::gm);
  CHECK(cfg.jl.kl == KlDirection::fm_to_gm);
  CHECK(cfg.jl.weights == JlWeights{1, 0.5, 0.25, 2, 0.1});
  CHECK(cfg.subset.k == 12);
  CHECK(cfg.subset.similarity.kind == Similarity::rbf);
  CHECK(cfg.subset.similarity.sigma == 0.3);
  CHECK(to_json(config_from_json(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("strictness") {
  CHECK_THROWS_WITH_AS(config_from_json(json{{"sede", 1}}), doctest::Contains("sede"), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"cage", {{"epoch", 3}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"cage", {{"epochs", "many"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"cage", {{"epochs", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"jl", {{"arch", "cnn"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"jl", {{"head", "both"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"subset", {{"method", "magic"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
