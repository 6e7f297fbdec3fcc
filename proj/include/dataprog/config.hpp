#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dataprog/io.hpp"
#include "dataprog/jointlearn.hpp"
#include "dataprog/labelmodels.hpp"
#include "dataprog/subset.hpp"

namespace dprog {

struct SubsetConfig {
  std::string method = "fl";  // rand | fl | maxcover | sup
  std::size_t k = 100;
  SimilarityConfig similarity;
};

/// Settings shared by every CLI command. One JSON document:
///
///   {"seed": 7,
///    "cage":   {"epochs", "learning_rate", "qg_weight", "score_clamp", "concentration"},
///    "jl":     {"arch", "hidden", "epochs", "learning_rate", "head", "kl",
///               "score_clamp", "concentration",
///               "weights": {"fm_sup", "gm_sup", "gm_unsup", "agree", "lambda"}},
///    "subset": {"method", "k", "similarity", "sigma"}}
///
/// Every section and key is optional; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 0;
  TrainConfig cage;
  JlConfig jl;
  SubsetConfig subset;

  /// Propagates `seed` into the model sections.
  void set_seed(std::uint64_t s);
};

PipelineConfig config_from_json(const json& doc);
json to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace dprog
