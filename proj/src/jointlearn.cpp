#include "dataprog/jointlearn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dataprog/errors.hpp"

namespace dprog {

// ---------------------------------------------------------------------------
// Feature model

FeatureModelParams FeatureModelParams::init(FmArch arch, std::size_t input_dim, int num_classes,
                                            std::size_t hidden, std::uint64_t seed) {
  const auto K = static_cast<std::size_t>(num_classes);
  FeatureModelParams fm;
  fm.arch = arch;
  fm.input_dim = input_dim;
  fm.num_classes = num_classes;
  if (arch == FmArch::linear) {
    fm.weights = Matrix(K, input_dim);
    fm.bias.assign(K, 0.0);
    return fm;
  }
  fm.hidden = hidden;
  fm.hidden_weights = Matrix(input_dim, hidden);
  fm.hidden_bias.assign(hidden, 0.0);
  fm.out_weights = Matrix(hidden, K);
  fm.out_bias.assign(K, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.1, 0.1);
  for (double& w : fm.hidden_weights.values()) w = unif(rng);
  return fm;
}

namespace {

FeatureModelParams zeros_like(const FeatureModelParams& fm) {
  FeatureModelParams g = fm;
  g.weights.fill(0.0);
  std::fill(g.bias.begin(), g.bias.end(), 0.0);
  g.hidden_weights.fill(0.0);
  std::fill(g.hidden_bias.begin(), g.hidden_bias.end(), 0.0);
  g.out_weights.fill(0.0);
  std::fill(g.out_bias.begin(), g.out_bias.end(), 0.0);
  return g;
}

/// Calls f(param&, grad&) on every scalar of the feature model.
template <typename F>
void for_each_fm_value(FeatureModelParams& p, const FeatureModelParams& g, F&& f) {
  auto zip = [&](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) f(a[k], b[k]);
  };
  zip(p.weights.values(), g.weights.values());
  zip(p.bias, g.bias);
  zip(p.hidden_weights.values(), g.hidden_weights.values());
  zip(p.hidden_bias, g.hidden_bias);
  zip(p.out_weights.values(), g.out_weights.values());
  zip(p.out_bias, g.out_bias);
}

void hidden_activations(const FeatureModelParams& fm, std::span<const double> x,
                        std::span<double> pre) {
  for (std::size_t k = 0; k < fm.hidden; ++k) pre[k] = fm.hidden_bias[k];
  for (std::size_t i = 0; i < fm.input_dim; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = 0; k < fm.hidden; ++k) pre[k] += xi * fm.hidden_weights(i, k);
  }
}

/// grad += scale * d(logits)/d(params)^T dz for one input row.
void fm_backward(const FeatureModelParams& fm, std::span<const double> x,
                 std::span<const double> dz, double scale, FeatureModelParams& grad,
                 std::vector<double>& scratch) {
  const auto K = static_cast<std::size_t>(fm.num_classes);
  if (fm.arch == FmArch::linear) {
    for (std::size_t y = 0; y < K; ++y) {
      double g = scale * dz[y];
      grad.bias[y] += g;
      auto row = grad.weights.row(y);
      for (std::size_t i = 0; i < fm.input_dim; ++i) row[i] += g * x[i];
    }
    return;
  }
  const std::size_t h = fm.hidden;
  scratch.resize(2 * h);
  std::span<double> pre(scratch.data(), h), dpre(scratch.data() + h, h);
  hidden_activations(fm, x, pre);
  for (std::size_t y = 0; y < K; ++y) grad.out_bias[y] += scale * dz[y];
  for (std::size_t k = 0; k < h; ++k) {
    double act = pre[k] > 0.0 ? pre[k] : 0.0;
    double back = 0.0;
    for (std::size_t y = 0; y < K; ++y) {
      grad.out_weights(k, y) += scale * act * dz[y];
      back += fm.out_weights(k, y) * dz[y];
    }
    dpre[k] = pre[k] > 0.0 ? scale * back : 0.0;
  }
  for (std::size_t k = 0; k < h; ++k) grad.hidden_bias[k] += dpre[k];
  for (std::size_t i = 0; i < fm.input_dim; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = 0; k < h; ++k) grad.hidden_weights(i, k) += xi * dpre[k];
  }
}

void check_features(const FeatureModelParams& fm, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != fm.input_dim)
    throw DataError("feature dimension mismatch: model expects " + std::to_string(fm.input_dim) +
                    ", data has " + std::to_string(x.cols()));
}

}  // namespace

void fm_logits(const FeatureModelParams& fm, std::span<const double> x, std::span<double> out) {
  const auto K = static_cast<std::size_t>(fm.num_classes);
  if (fm.arch == FmArch::linear) {
    for (std::size_t y = 0; y < K; ++y) {
      double z = fm.bias[y];
      auto w = fm.weights.row(y);
      for (std::size_t i = 0; i < fm.input_dim; ++i) z += w[i] * x[i];
      out[y] = z;
    }
    return;
  }
  std::vector<double> pre(fm.hidden);
  hidden_activations(fm, x, pre);
  for (std::size_t y = 0; y < K; ++y) out[y] = fm.out_bias[y];
  for (std::size_t k = 0; k < fm.hidden; ++k) {
    if (pre[k] <= 0.0) continue;
    for (std::size_t y = 0; y < K; ++y) out[y] += pre[k] * fm.out_weights(k, y);
  }
}

Matrix predict_fm_proba(const FeatureModelParams& fm, const Matrix& features, Exec exec) {
  check_features(fm, features);
  const std::size_t n = features.rows();
  Matrix out(n, static_cast<std::size_t>(fm.num_classes));
  auto one = [&](std::size_t i) {
    auto dst = out.row(i);
    fm_logits(fm, features.row(i), dst);
    detail::softmax_inplace(dst);
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) one(static_cast<std::size_t>(i));
  }
  return out;
}

namespace {

std::vector<LabelId> argmax_rows(const Matrix& proba) {
  std::vector<LabelId> out(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) out[i] = argmax_label(proba.row(i));
  return out;
}

}  // namespace

std::vector<LabelId> predict_fm(const FeatureModelParams& fm, const Matrix& features, Exec exec) {
  return argmax_rows(predict_fm_proba(fm, features, exec));
}

Matrix predict_gm_proba(const CageParams& gm, const VoteMatrix& votes, const ScoreMatrix& scores,
                        Exec exec) {
  return cage_posterior_batch(gm, votes, scores, exec);
}

std::vector<LabelId> predict_gm(const CageParams& gm, const VoteMatrix& votes,
                                const ScoreMatrix& scores, Exec exec) {
  return cage_predict(gm, votes, scores, exec);
}

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(InferenceHead h) {
  switch (h) {
    case InferenceHead::fm: return "fm";
    case InferenceHead::gm: return "gm";
    case InferenceHead::mean: return "mean";
  }
  return "mean";
}

InferenceHead parse_head(std::string_view text) {
  if (text == "fm") return InferenceHead::fm;
  if (text == "gm") return InferenceHead::gm;
  if (text == "mean") return InferenceHead::mean;
  throw ConfigError("inference head must be fm, gm or mean (got '" + std::string(text) + "')");
}

std::string_view to_string(FmArch a) { return a == FmArch::linear ? "linear" : "mlp"; }

FmArch parse_arch(std::string_view text) {
  if (text == "linear") return FmArch::linear;
  if (text == "mlp") return FmArch::mlp;
  throw ConfigError("feature model arch must be linear or mlp (got '" + std::string(text) + "')");
}

std::string_view to_string(KlDirection d) {
  return d == KlDirection::gm_to_fm ? "gm_fm" : "fm_gm";
}

KlDirection parse_kl_direction(std::string_view text) {
  if (text == "gm_fm") return KlDirection::gm_to_fm;
  if (text == "fm_gm") return KlDirection::fm_to_gm;
  throw ConfigError("kl direction must be gm_fm or fm_gm (got '" + std::string(text) + "')");
}

JlConfig JlConfig::only_l() {
  JlConfig cfg;
  cfg.weights = {1.0, 0.0, 0.0, 0.0, 0.0};
  cfg.head = InferenceHead::fm;
  return cfg;
}

void JlConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be >= 0");
  if (arch == FmArch::mlp && hidden == 0) throw ConfigError("mlp hidden size must be >= 1");
  for (double w : {weights.fm_sup, weights.gm_sup, weights.gm_unsup, weights.agree, weights.lambda})
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ConfigError("objective weights must be finite and >= 0");
  if (!(score_clamp > 0.0 && score_clamp < 0.5)) throw ConfigError("score_clamp must lie in (0, 0.5)");
  if (!(concentration > 0.0)) throw ConfigError("concentration must be > 0");
}

// ---------------------------------------------------------------------------
// Objective

double jl_objective(const JlParams& params, const JlSplit& labeled, const JlSplit& unlabeled,
                    KlDirection kl, JlGradient* grad) {
  const auto& fm = params.fm;
  const auto& gm = params.gm;
  const auto& w = params.weights;
  const auto K = static_cast<std::size_t>(gm.num_classes);
  if (grad) {
    grad->fm = zeros_like(fm);
    grad->gm.theta = Matrix(gm.theta.rows(), gm.theta.cols());
    grad->gm.pi = Matrix(gm.pi.rows(), gm.pi.cols());
  }
  const bool use_gm = w.gm_sup > 0.0 || w.gm_unsup > 0.0 || w.agree > 0.0;
  std::optional<detail::BetaTable> table;
  double log_z = 0.0;
  if (use_gm) {
    table.emplace(gm);
    log_z = log_partition(gm.theta);
  }

  std::vector<double> z(K), a(K), coef(K), scratch;
  double value = 0.0;

  const std::size_t nl = labeled.size();
  if (nl > 0 && (w.fm_sup > 0.0 || w.gm_sup > 0.0)) {
    const double inv = 1.0 / static_cast<double>(nl);
    const double fm_scale = w.fm_sup * inv;
    const double gm_scale = w.gm_sup * inv;
    double ce = 0.0, nll = 0.0;
    for (std::size_t i = 0; i < nl; ++i) {
      const auto y = static_cast<std::size_t>(labeled.gold[i] - 1);
      if (w.fm_sup > 0.0) {
        fm_logits(fm, labeled.features.row(i), z);
        double zy = z[y];
        ce += detail::softmax_inplace(z) - zy;
        if (grad) {
          z[y] -= 1.0;
          fm_backward(fm, labeled.features.row(i), z, fm_scale, grad->fm, scratch);
        }
      }
      if (w.gm_sup > 0.0) {
        detail::row_log_potentials(gm, *table, labeled.votes.row(i), labeled.scores.row(i), a);
        nll += log_z - a[y];
        if (grad) {
          std::fill(coef.begin(), coef.end(), 0.0);
          coef[y] = -gm_scale;
          detail::accumulate_row_gradient(gm, *table, labeled.votes.row(i), labeled.scores.row(i),
                                          coef, grad->gm);
        }
      }
    }
    value += w.fm_sup * ce * inv + w.gm_sup * nll * inv;
    if (grad && w.gm_sup > 0.0)
      detail::accumulate_log_partition_gradient(gm.theta, w.gm_sup, grad->gm);
  }

  const std::size_t nu = unlabeled.size();
  if (nu > 0 && (w.gm_unsup > 0.0 || w.agree > 0.0)) {
    const double inv = 1.0 / static_cast<double>(nu);
    double nll = 0.0, kl_sum = 0.0;
    std::vector<double> logr(K), logf(K), dz(K);
    for (std::size_t i = 0; i < nu; ++i) {
      auto votes = unlabeled.votes.row(i);
      auto scores = unlabeled.scores.row(i);
      detail::row_log_potentials(gm, *table, votes, scores, a);
      double lse_a = detail::log_sum_exp(a);
      for (std::size_t y = 0; y < K; ++y) logr[y] = a[y] - lse_a;
      std::fill(coef.begin(), coef.end(), 0.0);
      if (w.gm_unsup > 0.0) {
        nll += log_z - lse_a;
        for (std::size_t y = 0; y < K; ++y) coef[y] -= w.gm_unsup * inv * std::exp(logr[y]);
      }
      if (w.agree > 0.0) {
        fm_logits(fm, unlabeled.features.row(i), z);
        double lse_z = detail::log_sum_exp(z);
        for (std::size_t y = 0; y < K; ++y) logf[y] = z[y] - lse_z;
        const double scale = w.agree * inv;
        if (kl == KlDirection::gm_to_fm) {
          // KL(r || f): d/dz = f - r; d/da_y = r_y (g_y - E_r[g]), g = log r - log f.
          double mean_g = 0.0;
          for (std::size_t y = 0; y < K; ++y) {
            double r = std::exp(logr[y]);
            kl_sum += r * (logr[y] - logf[y]);
            mean_g += r * (logr[y] - logf[y]);
          }
          if (grad) {
            for (std::size_t y = 0; y < K; ++y) {
              double r = std::exp(logr[y]);
              dz[y] = std::exp(logf[y]) - r;
              coef[y] += scale * r * ((logr[y] - logf[y]) - mean_g);
            }
            fm_backward(fm, unlabeled.features.row(i), dz, scale, grad->fm, scratch);
          }
        } else {
          // KL(f || r): d/da = r - f; d/dz_y = f_y (h_y - E_f[h]), h = log f - log r.
          double mean_h = 0.0;
          for (std::size_t y = 0; y < K; ++y) {
            double f = std::exp(logf[y]);
            kl_sum += f * (logf[y] - logr[y]);
            mean_h += f * (logf[y] - logr[y]);
          }
          if (grad) {
            for (std::size_t y = 0; y < K; ++y) {
              double f = std::exp(logf[y]);
              dz[y] = f * ((logf[y] - logr[y]) - mean_h);
              coef[y] += scale * (std::exp(logr[y]) - f);
            }
            fm_backward(fm, unlabeled.features.row(i), dz, scale, grad->fm, scratch);
          }
        }
      }
      if (grad) detail::accumulate_row_gradient(gm, *table, votes, scores, coef, grad->gm);
    }
    value += w.gm_unsup * nll * inv + w.agree * kl_sum * inv;
    if (grad && w.gm_unsup > 0.0)
      detail::accumulate_log_partition_gradient(gm.theta, w.gm_unsup, grad->gm);
  }

  if (w.lambda > 0.0) value -= w.lambda * quality_regularizer(gm, grad ? &grad->gm : nullptr, -w.lambda);
  return value;
}

// ---------------------------------------------------------------------------
// Prediction

Matrix jl_predict_proba(const JlParams& params, const Matrix& features, const VoteMatrix& votes,
                        const ScoreMatrix& scores, Exec exec) {
  switch (params.head) {
    case InferenceHead::fm:
      return predict_fm_proba(params.fm, features, exec);
    case InferenceHead::gm:
      return predict_gm_proba(params.gm, votes, scores, exec);
    case InferenceHead::mean: {
      if (features.rows() != votes.num_rows())
        throw DataError("features and vote matrix disagree on row count");
      Matrix f = predict_fm_proba(params.fm, features, exec);
      Matrix g = predict_gm_proba(params.gm, votes, scores, exec);
      for (std::size_t k = 0; k < f.size(); ++k)
        f.values()[k] = 0.5 * (f.values()[k] + g.values()[k]);
      return f;
    }
  }
  return {};
}

std::vector<LabelId> jl_predict(const JlParams& params, const Matrix& features,
                                const VoteMatrix& votes, const ScoreMatrix& scores, Exec exec) {
  return argmax_rows(jl_predict_proba(params, features, votes, scores, exec));
}

double macro_f1(std::span<const LabelId> pred, std::span<const LabelId> gold, int num_classes) {
  const auto K = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(K + 1, 0.0), fp(K + 1, 0.0), fn(K + 1, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == kAbstain) continue;
    auto g = static_cast<std::size_t>(gold[i]);
    auto p = static_cast<std::size_t>(pred[i]);
    if (p == g) {
      tp[g] += 1.0;
    } else {
      fn[g] += 1.0;
      if (p != 0) fp[p] += 1.0;
    }
  }
  double sum = 0.0;
  int classes = 0;
  for (std::size_t c = 1; c <= K; ++c) {
    double denom = 2.0 * tp[c] + fp[c] + fn[c];
    if (denom == 0.0) continue;
    sum += 2.0 * tp[c] / denom;
    ++classes;
  }
  return classes ? sum / classes : 0.0;
}

// ---------------------------------------------------------------------------
// Training

namespace {

void check_split(const JlSplit& s, const char* role, bool needs_gold, std::size_t dim,
                 const VoteMatrix& reference) {
  const std::string where = std::string(role) + " split";
  if (s.features.rows() != s.votes.num_rows())
    throw DataError(where + ": features and vote matrix disagree on row count");
  check_aligned(s.votes, s.scores);
  if (s.size() > 0 && s.features.cols() != dim)
    throw DataError(where + ": feature dimension mismatch");
  if (s.votes.lfs() != reference.lfs() || s.votes.num_classes() != reference.num_classes())
    throw DataError(where + ": LF columns differ from the labeled split");
  if (needs_gold) {
    if (s.gold.size() != s.size()) throw DataError(where + ": gold labels are required");
    for (LabelId g : s.gold)
      if (!s.votes.label_space().contains(g))
        throw DataError(where + ": every instance needs a gold label in 1..K");
  }
}

double accuracy(std::span<const LabelId> pred, std::span<const LabelId> gold) {
  std::size_t judged = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == kAbstain) continue;
    ++judged;
    correct += pred[i] == gold[i];
  }
  return judged ? static_cast<double>(correct) / static_cast<double>(judged) : 0.0;
}

bool finite_params(const JlParams& p) {
  bool ok = true;
  auto check = [&](const std::vector<double>& v) {
    for (double x : v) ok = ok && std::isfinite(x);
  };
  check(p.fm.weights.values());
  check(p.fm.bias);
  check(p.fm.hidden_weights.values());
  check(p.fm.hidden_bias);
  check(p.fm.out_weights.values());
  check(p.fm.out_bias);
  check(p.gm.theta.values());
  check(p.gm.pi.values());
  return ok;
}

}  // namespace

JlFit fit_and_predict_proba(const JlSplit& labeled, const JlSplit& unlabeled, const JlConfig& cfg,
                            const JlSplit* validation, const JlSplit* test) {
  cfg.validate();
  const std::size_t dim = labeled.size() > 0 ? labeled.features.cols() : unlabeled.features.cols();
  check_split(labeled, "L", true, dim, labeled.votes);
  check_split(unlabeled, "U", false, dim, labeled.votes);
  if (validation) check_split(*validation, "V", true, dim, labeled.votes);
  if (test) check_split(*test, "T", true, dim, labeled.votes);

  std::optional<std::vector<double>> guides;
  if (labeled.size() > 0) guides = estimate_guides(labeled.votes, labeled.gold);

  JlFit fit;
  JlParams& p = fit.params;
  p.fm = FeatureModelParams::init(cfg.arch, dim, labeled.votes.num_classes(), cfg.hidden, cfg.seed);
  p.gm = CageParams::zeros(labeled.votes, guides, cfg.concentration, cfg.score_clamp);
  p.weights = cfg.weights;
  p.head = cfg.head;

  JlGradient grad;
  double initial = jl_objective(p, labeled, unlabeled, cfg.kl, &grad);
  if (!std::isfinite(initial)) throw NumericError("divergence; reduce learning_rate");
  fit.log.push_back({0, initial, {}, {}});
  const double ceiling = initial + 10.0 * (1.0 + std::abs(initial));

  JlParams best = p;
  double best_f1 = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for_each_fm_value(p.fm, grad.fm, [&](double& v, double g) { v -= cfg.learning_rate * g; });
    for (std::size_t k = 0; k < p.gm.theta.size(); ++k)
      p.gm.theta.values()[k] -= cfg.learning_rate * grad.gm.theta.values()[k];
    for (std::size_t k = 0; k < p.gm.pi.size(); ++k)
      p.gm.pi.values()[k] -= cfg.learning_rate * grad.gm.pi.values()[k];

    double obj = jl_objective(p, labeled, unlabeled, cfg.kl, &grad);
    if (!std::isfinite(obj) || obj > ceiling || !finite_params(p))
      throw NumericError("divergence; reduce learning_rate");
    JlEpochLog entry{epoch, obj, {}, {}};
    if (validation) {
      auto pred = jl_predict(p, validation->features, validation->votes, validation->scores,
                             Exec::serial);
      entry.val_macro_f1 = macro_f1(pred, validation->gold, p.gm.num_classes);
      if (*entry.val_macro_f1 > best_f1) {
        best_f1 = *entry.val_macro_f1;
        best = p;
        fit.selected_epoch = epoch;
      }
    }
    if (test) {
      auto pred = jl_predict(p, test->features, test->votes, test->scores, Exec::serial);
      entry.test_accuracy = accuracy(pred, test->gold);
    }
    fit.log.push_back(entry);
  }
  if (validation)
    p = std::move(best);
  else
    fit.selected_epoch = cfg.epochs;

  fit.proba = jl_predict_proba(p, unlabeled.features, unlabeled.votes, unlabeled.scores,
                               Exec::serial);
  return fit;
}

JlLabelFit fit_and_predict(const JlSplit& labeled, const JlSplit& unlabeled, const JlConfig& cfg,
                           const JlSplit* validation, const JlSplit* test) {
  JlFit fit = fit_and_predict_proba(labeled, unlabeled, cfg, validation, test);
  return {std::move(fit.params), argmax_rows(fit.proba), std::move(fit.log)};
}

FeatureModelParams fit_only_l(const JlSplit& labeled, const JlConfig& cfg,
                              const JlSplit* validation) {
  cfg.validate();
  const std::size_t n = labeled.size();
  const std::size_t dim = labeled.features.cols();
  const int K = labeled.votes.num_classes();
  if (labeled.gold.size() != n) throw DataError("L split: gold labels are required");
  if (validation && validation->size() > 0 && validation->features.cols() != dim)
    throw DataError("V split: feature dimension mismatch");

  FeatureModelParams fm = FeatureModelParams::init(cfg.arch, dim, K, cfg.hidden, cfg.seed);
  FeatureModelParams best = fm;
  double best_f1 = -1.0;
  std::vector<double> z(static_cast<std::size_t>(K)), scratch;
  const double scale = n > 0 ? cfg.weights.fm_sup * (1.0 / static_cast<double>(n)) : 0.0;

  auto gradient = [&](FeatureModelParams& g) {
    g = zeros_like(fm);
    for (std::size_t i = 0; i < n; ++i) {
      fm_logits(fm, labeled.features.row(i), z);
      detail::softmax_inplace(z);
      z[static_cast<std::size_t>(labeled.gold[i] - 1)] -= 1.0;
      fm_backward(fm, labeled.features.row(i), z, scale, g, scratch);
    }
  };

  FeatureModelParams g;
  gradient(g);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for_each_fm_value(fm, g, [&](double& v, double d) { v -= cfg.learning_rate * d; });
    gradient(g);
    if (validation) {
      auto pred = predict_fm(fm, validation->features, Exec::serial);
      double f1 = macro_f1(pred, validation->gold, K);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = fm;
      }
    }
  }
  return validation ? best : fm;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from(const json& doc, const char* name, std::size_t rows, std::size_t cols) {
  if (!doc.contains(name) || !doc[name].is_array() || doc[name].size() != rows)
    throw DataError(std::string("shape mismatch: fm field '") + name + "'");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = doc[name][r];
    if (!row.is_array() || row.size() != cols)
      throw DataError(std::string("shape mismatch: fm field '") + name + "'");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw DataError(std::string("corrupt params file: fm field '") + name + "'");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

std::vector<double> vector_from(const json& doc, const char* name, std::size_t len) {
  if (!doc.contains(name) || !doc[name].is_array() || doc[name].size() != len)
    throw DataError(std::string("shape mismatch: fm field '") + name + "'");
  std::vector<double> v;
  for (const auto& x : doc[name]) {
    if (!x.is_number()) throw DataError(std::string("corrupt params file: fm field '") + name + "'");
    v.push_back(x.get<double>());
  }
  return v;
}

json fm_json(const FeatureModelParams& fm) {
  json doc = {{"arch", std::string(to_string(fm.arch))},
              {"input_dim", fm.input_dim},
              {"K", fm.num_classes}};
  if (fm.arch == FmArch::linear) {
    doc["weights"] = matrix_json(fm.weights);
    doc["bias"] = fm.bias;
  } else {
    doc["hidden"] = fm.hidden;
    doc["hidden_weights"] = matrix_json(fm.hidden_weights);
    doc["hidden_bias"] = fm.hidden_bias;
    doc["out_weights"] = matrix_json(fm.out_weights);
    doc["out_bias"] = fm.out_bias;
  }
  return doc;
}

FeatureModelParams fm_from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("corrupt params file: field 'fm'");
  if (!doc.contains("arch") || !doc["arch"].is_string())
    throw DataError("corrupt params file: missing fm field 'arch'");
  FeatureModelParams fm;
  try {
    fm.arch = parse_arch(doc["arch"].get<std::string>());
  } catch (const ConfigError& e) {
    throw DataError(std::string("arch mismatch: ") + e.what());
  }
  if (!doc.contains("input_dim") || !doc["input_dim"].is_number_unsigned() || !doc.contains("K") ||
      !doc["K"].is_number_integer())
    throw DataError("corrupt params file: fm fields 'input_dim'/'K'");
  fm.input_dim = doc["input_dim"].get<std::size_t>();
  fm.num_classes = doc["K"].get<int>();
  const auto K = static_cast<std::size_t>(fm.num_classes);
  if (fm.arch == FmArch::linear) {
    if (doc.contains("hidden_weights") || !doc.contains("weights"))
      throw DataError("arch mismatch: fm declares 'linear' but holds mlp layers");
    fm.weights = matrix_from(doc, "weights", K, fm.input_dim);
    fm.bias = vector_from(doc, "bias", K);
  } else {
    if (doc.contains("weights") || !doc.contains("hidden_weights"))
      throw DataError("arch mismatch: fm declares 'mlp' but holds linear weights");
    if (!doc.contains("hidden") || !doc["hidden"].is_number_unsigned())
      throw DataError("corrupt params file: fm field 'hidden'");
    fm.hidden = doc["hidden"].get<std::size_t>();
    fm.hidden_weights = matrix_from(doc, "hidden_weights", fm.input_dim, fm.hidden);
    fm.hidden_bias = vector_from(doc, "hidden_bias", fm.hidden);
    fm.out_weights = matrix_from(doc, "out_weights", fm.hidden, K);
    fm.out_bias = vector_from(doc, "out_bias", K);
  }
  return fm;
}

}  // namespace

json to_json(const JlParams& p) {
  json gm = to_json(p.gm);
  gm.erase("version");
  gm.erase("model");
  return {{"version", kParamsFormatVersion},
          {"model", "jl"},
          {"fm", fm_json(p.fm)},
          {"gm", gm},
          {"weights",
           {{"fm_sup", p.weights.fm_sup},
            {"gm_sup", p.weights.gm_sup},
            {"gm_unsup", p.weights.gm_unsup},
            {"agree", p.weights.agree},
            {"lambda", p.weights.lambda}}},
          {"head", std::string(to_string(p.head))}};
}

JlParams jl_params_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("version") || !doc["version"].is_number_integer())
    throw DataError("corrupt params file: missing field 'version'");
  if (doc["version"].get<int>() != kParamsFormatVersion)
    throw DataError("unsupported params version " + doc["version"].dump());
  if (!doc.contains("model") || doc["model"] != "jl")
    throw DataError("params file does not hold a \"jl\" model");
  for (const char* f : {"fm", "gm", "weights"})
    if (!doc.contains(f) || !doc[f].is_object())
      throw DataError(std::string("corrupt params file: missing field '") + f + "'");
  JlParams p;
  p.fm = fm_from_json(doc["fm"]);
  json gm = doc["gm"];
  gm["version"] = kParamsFormatVersion;
  gm["model"] = "cage";
  p.gm = cage_params_from_json(gm);
  if (p.fm.num_classes != p.gm.num_classes)
    throw DataError("shape mismatch: fm and gm disagree on K");
  const auto& w = doc["weights"];
  auto weight = [&](const char* name) {
    if (!w.contains(name) || !w[name].is_number())
      throw DataError(std::string("corrupt params file: weights field '") + name + "'");
    return w[name].get<double>();
  };
  p.weights = {weight("fm_sup"), weight("gm_sup"), weight("gm_unsup"), weight("agree"),
               weight("lambda")};
  if (doc.contains("head")) {
    if (!doc["head"].is_string()) throw DataError("corrupt params file: field 'head'");
    try {
      p.head = parse_head(doc["head"].get<std::string>());
    } catch (const ConfigError& e) {
      throw DataError(std::string("corrupt params file: ") + e.what());
    }
  }
  return p;
}

void save_params(const JlParams& params, const std::filesystem::path& path) {
  write_json_file(path, to_json(params));
}

JlParams load_jl_params(const std::filesystem::path& path) {
  auto doc = read_params_json(path);
  try {
    return jl_params_from_json(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dprog
