#pragma once

#include <cstdint>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/lfkit.hpp"

namespace dprog {

/// Seeded SMS-style spam/ham corpus with six planted labeling functions.
///
/// Each instance draws its class first (spam = 1, ham = 2). LF j, with
/// target t_j and planted accuracy a_j, inserts its trigger tokens with
/// probability `lf_propensity` when the class is t_j and with probability
/// p_t * propensity * (1 - a_j) / ((1 - p_t) * a_j) otherwise, so that
/// P(class = t_j | LF fires) = a_j. Features are a Gaussian mixture whose
/// class means sit at +/- `feature_separation` along a fixed unit direction.
struct SyntheticConfig {
  std::size_t n_labeled = 100;
  std::size_t n_unlabeled = 2000;
  std::size_t n_validation = 100;
  std::size_t n_test = 1000;
  std::size_t dim = 10;
  double spam_fraction = 0.5;
  std::vector<double> lf_accuracies = {0.85, 0.80, 0.75, 0.75, 0.70, 0.65};
  double lf_propensity = 0.35;
  double feature_separation = 1.0;
  std::uint64_t seed = 20211;
};

struct SyntheticData {
  RuleSet rules;
  DataSplit labeled;
  DataSplit unlabeled;
  DataSplit validation;
  DataSplit test;
};

/// The fixed six-rule set matching the planted triggers.
RuleSet synthetic_rules();

/// Deterministic for a given config (and standard library).
SyntheticData generate_synthetic(const SyntheticConfig& cfg = {});

}  // namespace dprog
