#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"
#include "dataprog/matrix.hpp"
#include "dataprog/parallel.hpp"

namespace dprog {

/// Majority vote per row. Ties go to the smallest label id; rows where every
/// LF abstains get kAbstain.
std::vector<LabelId> mv_predict(const VoteMatrix& votes);

// ---------------------------------------------------------------------------
// Generative label model
//
//   P(l, s, y) = (1/Z) prod_j psi_j(l_j, y) * phi_j(s_j | y)^[l_j fired, j continuous]
//   psi_j(l, y) = exp(theta_jy) if l fired else 1
//   phi_j(s | y) = Beta(s; c q_jy, c (1 - q_jy)),  q_jy = clamp(logistic(pi_jy), eps, 1 - eps)
//   Z = sum_y prod_j (1 + exp(theta_jy))
//
// Each phi integrates to one over s, so Z does not depend on pi.

inline constexpr double kDefaultGuide = 0.9;
inline constexpr double kGuideMin = 0.05;
inline constexpr double kGuideMax = 0.95;

struct CageParams {
  int num_classes = 0;
  std::vector<LabelId> lf_targets;
  std::vector<bool> lf_is_continuous;
  Matrix theta;  // m x K, column y-1 is class y
  Matrix pi;     // m x K
  std::vector<double> quality_guides;
  double concentration = 10.0;
  double score_clamp = 1e-3;

  std::size_t num_lfs() const noexcept { return lf_targets.size(); }

  /// Zero-initialized parameters shaped for `votes`. Guides default to
  /// kDefaultGuide and are clamped to [kGuideMin, kGuideMax].
  static CageParams zeros(const VoteMatrix& votes, std::optional<std::vector<double>> guides = {},
                          double concentration = 10.0, double score_clamp = 1e-3);

  friend bool operator==(const CageParams&, const CageParams&) = default;
};

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 0.01;
  double qg_weight = 1.0;  // lambda
  std::uint64_t seed = 0;
  double score_clamp = 1e-3;
  double concentration = 10.0;

  /// Throws ConfigError on epochs < 1, negative learning_rate, negative
  /// qg_weight, score_clamp outside (0, 0.5), or concentration <= 0.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double objective = 0.0;
  std::optional<double> eval_accuracy;
};

/// Gold-labeled matrices used only for per-epoch telemetry.
struct EvalSet {
  VoteMatrix votes;
  ScoreMatrix scores;
  std::vector<LabelId> gold;
};

struct CageFit {
  CageParams params;
  std::vector<EpochLog> log;  // epochs + 1 entries; entry 0 is the initial point
};

/// Throws DataError unless `params` was built for the columns of `votes`
/// ("LF count mismatch", "class count mismatch", "LF target mismatch").
void check_compatible(const CageParams& params, const VoteMatrix& votes);

/// Each LF's accuracy on fired, gold-bearing rows, clamped to
/// [kGuideMin, kGuideMax]; LFs with no such rows get `fallback`.
std::vector<double> estimate_guides(const VoteMatrix& votes, std::span<const LabelId> gold,
                                    double fallback = kDefaultGuide);

/// Gradient of the objective, shaped like the parameters.
struct CageGradient {
  Matrix theta;
  Matrix pi;
};

/// log Z in closed form.
double log_partition(const Matrix& theta);

/// R(theta) = sum_j q_j log p_j + (1 - q_j) log(1 - p_j), with p_j the
/// softmax weight of theta_j on the LF's target class.
double quality_regularizer(const CageParams& params, CageGradient* grad = nullptr,
                           double scale = 1.0);

/// Mean log marginal likelihood over rows plus qg_weight * R(theta). When
/// `grad` is given it receives the full gradient.
double cage_objective(const CageParams& params, const VoteMatrix& votes, const ScoreMatrix& scores,
                      double qg_weight, CageGradient* grad = nullptr);

/// Full-batch gradient ascent from zero. Throws NumericError("divergence;
/// reduce learning_rate") when the objective stops being finite or runs away
/// from its starting value.
CageFit cage_fit(const VoteMatrix& votes, const ScoreMatrix& scores,
                 std::optional<std::vector<double>> guides, const TrainConfig& cfg,
                 const EvalSet* eval = nullptr);

/// P(y | l, s) for one row. `scores` holds NaN where missing; scores of
/// discrete LFs are ignored. Throws DataError on a dimension mismatch or a
/// fired continuous LF without a score.
std::vector<double> cage_posterior(const CageParams& params, std::span<const LabelId> votes,
                                   std::span<const double> scores);

/// n x K posteriors.
Matrix cage_posterior_batch(const CageParams& params, const VoteMatrix& votes,
                            const ScoreMatrix& scores, Exec exec = Exec::parallel);

std::vector<LabelId> cage_predict(const CageParams& params, const VoteMatrix& votes,
                                  const ScoreMatrix& scores, Exec exec = Exec::parallel);

inline constexpr int kParamsFormatVersion = 1;

json to_json(const CageParams& params);
/// Throws DataError("corrupt params file: ...") on malformed content.
CageParams cage_params_from_json(const json& doc);
void save_params(const CageParams& params, const std::filesystem::path& path);
CageParams load_params(const std::filesystem::path& path);

/// Raw JSON of a params file; truncated or unparsable content raises
/// DataError("corrupt params file"), an unknown version "unsupported params
/// version".
json read_params_json(const std::filesystem::path& path);

namespace detail {

/// Per-parameter Beta quantities that do not depend on the score.
struct BetaTable {
  Matrix alpha, beta, log_norm, digamma_diff, dq_dpi;
  explicit BetaTable(const CageParams& params);
};

/// out[y] = sum_{j fired} theta_jy + [j continuous] log phi_j(s_j | y).
void row_log_potentials(const CageParams& params, const BetaTable& table,
                        std::span<const LabelId> votes, std::span<const double> scores,
                        std::span<double> out);

/// grad += sum_y coef[y] * d(out[y]) / d(theta, pi).
void accumulate_row_gradient(const CageParams& params, const BetaTable& table,
                             std::span<const LabelId> votes, std::span<const double> scores,
                             std::span<const double> coef, CageGradient& grad);

/// grad.theta += scale * d log Z / d theta.
void accumulate_log_partition_gradient(const Matrix& theta, double scale, CageGradient& grad);

double log_sum_exp(std::span<const double> v);
/// In-place softmax; returns log-sum-exp of the input.
double softmax_inplace(std::span<double> v);

}  // namespace detail

}  // namespace dprog
