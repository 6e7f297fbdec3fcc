#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"
#include "dataprog/labelmodels.hpp"
#include "dataprog/matrix.hpp"
#include "dataprog/parallel.hpp"

namespace dprog {

// ---------------------------------------------------------------------------
// Feature model: multinomial logistic regression or a one-hidden-layer ReLU
// network, both ending in a softmax over K classes.

enum class FmArch { linear, mlp };

struct FeatureModelParams {
  FmArch arch = FmArch::linear;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;  // mlp only
  int num_classes = 0;
  // linear: K x d weights, K bias.
  Matrix weights;
  std::vector<double> bias;
  // mlp: d x h hidden layer, h x K output layer.
  Matrix hidden_weights;
  std::vector<double> hidden_bias;
  Matrix out_weights;
  std::vector<double> out_bias;

  /// Zero weights, except the mlp hidden layer which is drawn from
  /// uniform(-0.1, 0.1) with `seed`.
  static FeatureModelParams init(FmArch arch, std::size_t input_dim, int num_classes,
                                 std::size_t hidden, std::uint64_t seed);

  friend bool operator==(const FeatureModelParams&, const FeatureModelParams&) = default;
};

/// Logits for one input row.
void fm_logits(const FeatureModelParams& fm, std::span<const double> x, std::span<double> out);

/// n x K class probabilities. Throws DataError on a feature dimension
/// mismatch.
Matrix predict_fm_proba(const FeatureModelParams& fm, const Matrix& features,
                        Exec exec = Exec::parallel);
std::vector<LabelId> predict_fm(const FeatureModelParams& fm, const Matrix& features,
                                Exec exec = Exec::parallel);

/// Same as cage_posterior_batch / cage_predict.
Matrix predict_gm_proba(const CageParams& gm, const VoteMatrix& votes, const ScoreMatrix& scores,
                        Exec exec = Exec::parallel);
std::vector<LabelId> predict_gm(const CageParams& gm, const VoteMatrix& votes,
                                const ScoreMatrix& scores, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Joint model

/// Weights of the five objective terms:
///   w_fm_sup   * mean_L CE(fm(x), y)
/// + w_gm_sup   * mean_L -log P_gm(l, s, y)
/// + w_gm_unsup * mean_U -log sum_y P_gm(l, s, y)
/// + w_agree    * mean_U KL(gm posterior || fm)   (direction configurable)
/// - lambda     * R(theta)
struct JlWeights {
  double fm_sup = 1.0;
  double gm_sup = 1.0;
  double gm_unsup = 1.0;
  double agree = 1.0;
  double lambda = 1.0;

  friend bool operator==(const JlWeights&, const JlWeights&) = default;
};

enum class InferenceHead { fm, gm, mean };
enum class KlDirection { gm_to_fm, fm_to_gm };  // KL(gm||fm) / KL(fm||gm)

std::string_view to_string(InferenceHead h);
InferenceHead parse_head(std::string_view text);
std::string_view to_string(FmArch a);
FmArch parse_arch(std::string_view text);
std::string_view to_string(KlDirection d);
KlDirection parse_kl_direction(std::string_view text);

struct JlConfig {
  FmArch arch = FmArch::linear;
  std::size_t hidden = 16;
  JlWeights weights;
  InferenceHead head = InferenceHead::mean;
  KlDirection kl = KlDirection::gm_to_fm;
  int epochs = 100;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double score_clamp = 1e-3;
  double concentration = 10.0;

  /// Feature model trained on L alone: every gm-related weight zero, fm head.
  static JlConfig only_l();
  void validate() const;
};

struct JlParams {
  FeatureModelParams fm;
  CageParams gm;
  JlWeights weights;
  InferenceHead head = InferenceHead::mean;

  friend bool operator==(const JlParams&, const JlParams&) = default;
};

/// Features, LF outputs and (for labeled splits) gold for one split.
struct JlSplit {
  Matrix features;
  VoteMatrix votes;
  ScoreMatrix scores;
  std::vector<LabelId> gold;  // empty for U

  std::size_t size() const noexcept { return features.rows(); }
};

struct JlEpochLog {
  int epoch = 0;
  double objective = 0.0;
  std::optional<double> val_macro_f1;
  std::optional<double> test_accuracy;
};

struct JlFit {
  JlParams params;
  Matrix proba;  // over U, from the configured head
  std::vector<JlEpochLog> log;
  int selected_epoch = 0;
};

struct JlGradient {
  FeatureModelParams fm;  // same shapes as the parameters, holding gradients
  CageGradient gm;
};

/// Value of the minimized objective at `params`, with the gradient in
/// `grad` when given.
double jl_objective(const JlParams& params, const JlSplit& labeled, const JlSplit& unlabeled,
                    KlDirection kl, JlGradient* grad = nullptr);

/// Probabilities from the head in `params`.
Matrix jl_predict_proba(const JlParams& params, const Matrix& features, const VoteMatrix& votes,
                        const ScoreMatrix& scores, Exec exec = Exec::parallel);
std::vector<LabelId> jl_predict(const JlParams& params, const Matrix& features,
                                const VoteMatrix& votes, const ScoreMatrix& scores,
                                Exec exec = Exec::parallel);

/// Full-batch gradient descent. With `validation`, the returned parameters
/// are those of the epoch with the best macro-F1 on it (earliest on ties).
/// `test` only adds accuracy telemetry to the log. Throws DataError on
/// missing features or gold, NumericError on divergence.
JlFit fit_and_predict_proba(const JlSplit& labeled, const JlSplit& unlabeled, const JlConfig& cfg,
                            const JlSplit* validation = nullptr, const JlSplit* test = nullptr);

struct JlLabelFit {
  JlParams params;
  std::vector<LabelId> labels;
  std::vector<JlEpochLog> log;
};

JlLabelFit fit_and_predict(const JlSplit& labeled, const JlSplit& unlabeled, const JlConfig& cfg,
                           const JlSplit* validation = nullptr, const JlSplit* test = nullptr);

/// Plain supervised training of the feature model on L (cross-entropy
/// only) with the same initialization, step rule and validation-based epoch
/// selection as the joint model. LF outputs in the splits are ignored.
FeatureModelParams fit_only_l(const JlSplit& labeled, const JlConfig& cfg,
                              const JlSplit* validation = nullptr);

/// Macro-averaged F1 over classes that occur in gold or predictions.
double macro_f1(std::span<const LabelId> pred, std::span<const LabelId> gold, int num_classes);

json to_json(const JlParams& params);
/// Throws DataError on malformed content, unknown arch, or version mismatch.
JlParams jl_params_from_json(const json& doc);
void save_params(const JlParams& params, const std::filesystem::path& path);
JlParams load_jl_params(const std::filesystem::path& path);

}  // namespace dprog
