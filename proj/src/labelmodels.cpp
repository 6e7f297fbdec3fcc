#include "dataprog/labelmodels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dataprog/errors.hpp"

namespace dprog {

std::vector<LabelId> mv_predict(const VoteMatrix& votes) {
  const int K = votes.num_classes();
  std::vector<LabelId> out(votes.num_rows(), kAbstain);
  std::vector<int> counts(static_cast<std::size_t>(K) + 1);
  for (std::size_t i = 0; i < votes.num_rows(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (LabelId v : votes.row(i)) ++counts[static_cast<std::size_t>(v)];
    int best = 0;
    for (int y = 1; y <= K; ++y)
      if (counts[static_cast<std::size_t>(y)] > best) {
        best = counts[static_cast<std::size_t>(y)];
        out[i] = y;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------

CageParams CageParams::zeros(const VoteMatrix& votes, std::optional<std::vector<double>> guides,
                             double concentration, double score_clamp) {
  const std::size_t m = votes.num_lfs();
  const auto K = static_cast<std::size_t>(votes.num_classes());
  CageParams p;
  p.num_classes = votes.num_classes();
  for (const auto& lf : votes.lfs()) {
    p.lf_targets.push_back(lf.target);
    p.lf_is_continuous.push_back(lf.continuous);
  }
  p.theta = Matrix(m, K);
  p.pi = Matrix(m, K);
  if (guides) {
    if (guides->size() != m) throw DataError("quality guides: expected one per LF");
    for (double g : *guides)
      if (!(g > 0.0 && g < 1.0)) throw DataError("quality guides must lie in (0,1)");
    p.quality_guides = std::move(*guides);
  } else {
    p.quality_guides.assign(m, kDefaultGuide);
  }
  for (double& g : p.quality_guides) g = std::clamp(g, kGuideMin, kGuideMax);
  p.concentration = concentration;
  p.score_clamp = score_clamp;
  return p;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be >= 0");
  if (!(qg_weight >= 0.0) || !std::isfinite(qg_weight)) throw ConfigError("qg_weight must be >= 0");
  if (!(score_clamp > 0.0 && score_clamp < 0.5)) throw ConfigError("score_clamp must lie in (0, 0.5)");
  if (!(concentration > 0.0) || !std::isfinite(concentration))
    throw ConfigError("concentration must be > 0");
}

void check_compatible(const CageParams& params, const VoteMatrix& votes) {
  if (params.num_lfs() != votes.num_lfs())
    throw DataError("LF count mismatch: params have " + std::to_string(params.num_lfs()) +
                    ", matrix has " + std::to_string(votes.num_lfs()));
  if (params.num_classes != votes.num_classes())
    throw DataError("class count mismatch: params have " + std::to_string(params.num_classes) +
                    ", matrix has " + std::to_string(votes.num_classes()));
  for (std::size_t j = 0; j < votes.num_lfs(); ++j)
    if (params.lf_targets[j] != votes.lf(j).target ||
        params.lf_is_continuous[j] != votes.lf(j).continuous)
      throw DataError("LF target mismatch at column " + std::to_string(j));
}

std::vector<double> estimate_guides(const VoteMatrix& votes, std::span<const LabelId> gold,
                                    double fallback) {
  if (gold.size() != votes.num_rows()) throw DataError("gold length does not match matrix rows");
  const std::size_t m = votes.num_lfs();
  std::vector<double> correct(m, 0.0), judged(m, 0.0);
  for (std::size_t i = 0; i < votes.num_rows(); ++i) {
    if (gold[i] == kAbstain) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (!votes.fired(i, j)) continue;
      judged[j] += 1.0;
      correct[j] += votes(i, j) == gold[i] ? 1.0 : 0.0;
    }
  }
  std::vector<double> out(m, fallback);
  for (std::size_t j = 0; j < m; ++j) {
    if (judged[j] > 0.0) out[j] = correct[j] / judged[j];
    out[j] = std::clamp(out[j], kGuideMin, kGuideMax);
  }
  return out;
}

// ---------------------------------------------------------------------------
// detail

namespace detail {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double softmax_inplace(std::span<double> v) {
  double lse = log_sum_exp(v);
  for (double& x : v) x = std::exp(x - lse);
  return lse;
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

BetaTable::BetaTable(const CageParams& params) {
  const std::size_t m = params.num_lfs();
  const auto K = static_cast<std::size_t>(params.num_classes);
  alpha = beta = log_norm = digamma_diff = dq_dpi = Matrix(m, K);
  const double c = params.concentration;
  const double eps = params.score_clamp;
  for (std::size_t j = 0; j < m; ++j) {
    if (!params.lf_is_continuous[j]) continue;
    for (std::size_t y = 0; y < K; ++y) {
      double raw = logistic(params.pi(j, y));
      double q = std::clamp(raw, eps, 1.0 - eps);
      double a = c * q, b = c * (1.0 - q);
      alpha(j, y) = a;
      beta(j, y) = b;
      log_norm(j, y) = boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
      digamma_diff(j, y) = boost::math::digamma(b) - boost::math::digamma(a);
      dq_dpi(j, y) = (raw > eps && raw < 1.0 - eps) ? raw * (1.0 - raw) : 0.0;
    }
  }
}

namespace {

double clamped_score(const CageParams& params, std::span<const double> scores, std::size_t j) {
  double s = scores[j];
  if (std::isnan(s))
    throw DataError("continuous LF at column " + std::to_string(j) + " fired without a score");
  return std::clamp(s, params.score_clamp, 1.0 - params.score_clamp);
}

}  // namespace

void row_log_potentials(const CageParams& params, const BetaTable& table,
                        std::span<const LabelId> votes, std::span<const double> scores,
                        std::span<double> out) {
  const std::size_t m = params.num_lfs();
  const auto K = static_cast<std::size_t>(params.num_classes);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (votes[j] == kAbstain) continue;
    for (std::size_t y = 0; y < K; ++y) out[y] += params.theta(j, y);
    if (!params.lf_is_continuous[j]) continue;
    double s = clamped_score(params, scores, j);
    double ls = std::log(s), l1s = std::log1p(-s);
    for (std::size_t y = 0; y < K; ++y)
      out[y] += (table.alpha(j, y) - 1.0) * ls + (table.beta(j, y) - 1.0) * l1s - table.log_norm(j, y);
  }
}

void accumulate_row_gradient(const CageParams& params, const BetaTable& table,
                             std::span<const LabelId> votes, std::span<const double> scores,
                             std::span<const double> coef, CageGradient& grad) {
  const std::size_t m = params.num_lfs();
  const auto K = static_cast<std::size_t>(params.num_classes);
  const double c = params.concentration;
  for (std::size_t j = 0; j < m; ++j) {
    if (votes[j] == kAbstain) continue;
    for (std::size_t y = 0; y < K; ++y) grad.theta(j, y) += coef[y];
    if (!params.lf_is_continuous[j]) continue;
    double s = clamped_score(params, scores, j);
    double logit_s = std::log(s) - std::log1p(-s);
    for (std::size_t y = 0; y < K; ++y) {
      double d_logphi_dq = c * (logit_s + table.digamma_diff(j, y));
      grad.pi(j, y) += coef[y] * d_logphi_dq * table.dq_dpi(j, y);
    }
  }
}

void accumulate_log_partition_gradient(const Matrix& theta, double scale, CageGradient& grad) {
  const std::size_t m = theta.rows(), K = theta.cols();
  std::vector<double> w(K, 0.0);
  for (std::size_t y = 0; y < K; ++y)
    for (std::size_t j = 0; j < m; ++j) w[y] += softplus(theta(j, y));
  softmax_inplace(w);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t y = 0; y < K; ++y) grad.theta(j, y) += scale * w[y] * logistic(theta(j, y));
}

}  // namespace detail

double log_partition(const Matrix& theta) {
  const std::size_t m = theta.rows(), K = theta.cols();
  std::vector<double> per_class(K, 0.0);
  for (std::size_t y = 0; y < K; ++y)
    for (std::size_t j = 0; j < m; ++j) per_class[y] += detail::softplus(theta(j, y));
  return detail::log_sum_exp(per_class);
}

double quality_regularizer(const CageParams& params, CageGradient* grad, double scale) {
  const std::size_t m = params.num_lfs();
  const auto K = static_cast<std::size_t>(params.num_classes);
  double total = 0.0;
  std::vector<double> row(K), others;
  for (std::size_t j = 0; j < m; ++j) {
    const auto k = static_cast<std::size_t>(params.lf_targets[j] - 1);
    for (std::size_t y = 0; y < K; ++y) row[y] = params.theta(j, y);
    double lse = detail::log_sum_exp(row);
    others.clear();
    for (std::size_t y = 0; y < K; ++y)
      if (y != k) others.push_back(row[y]);
    double lse_others = detail::log_sum_exp(others);
    double log_p = row[k] - lse;
    double log_1mp = lse_others - lse;
    double q = params.quality_guides[j];
    total += q * log_p + (1.0 - q) * log_1mp;
    if (!grad) continue;
    // dR/dtheta_jk = q - p;  dR/dtheta_jy = -(q - p) * softmax_{y' != k}(theta_j)_y.
    double p = std::exp(log_p);
    for (std::size_t y = 0; y < K; ++y) {
      double g = y == k ? q - p : -(q - p) * std::exp(row[y] - lse_others);
      grad->theta(j, y) += scale * g;
    }
  }
  return total;
}

double cage_objective(const CageParams& params, const VoteMatrix& votes, const ScoreMatrix& scores,
                      double qg_weight, CageGradient* grad) {
  check_compatible(params, votes);
  check_aligned(votes, scores);
  const std::size_t n = votes.num_rows();
  const auto K = static_cast<std::size_t>(params.num_classes);
  if (grad) {
    grad->theta = Matrix(params.theta.rows(), params.theta.cols());
    grad->pi = Matrix(params.pi.rows(), params.pi.cols());
  }
  detail::BetaTable table(params);
  std::vector<double> a(K);
  double loglik = 0.0;
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = votes.row(i);
    auto s = scores.row(i);
    detail::row_log_potentials(params, table, v, s, a);
    loglik += detail::softmax_inplace(a);
    if (grad) {
      for (double& r : a) r *= inv_n;
      detail::accumulate_row_gradient(params, table, v, s, a, *grad);
    }
  }
  double value = 0.0;
  if (n > 0) {
    value = loglik * inv_n - log_partition(params.theta);
    if (grad) detail::accumulate_log_partition_gradient(params.theta, -1.0, *grad);
  }
  value += qg_weight * quality_regularizer(params, grad, qg_weight);
  return value;
}

namespace {

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(), [](double x) { return std::isfinite(x); });
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

}  // namespace

CageFit cage_fit(const VoteMatrix& votes, const ScoreMatrix& scores,
                 std::optional<std::vector<double>> guides, const TrainConfig& cfg,
                 const EvalSet* eval) {
  cfg.validate();
  check_aligned(votes, scores);
  CageFit fit{CageParams::zeros(votes, std::move(guides), cfg.concentration, cfg.score_clamp), {}};
  if (eval) {
    check_compatible(fit.params, eval->votes);
    check_aligned(eval->votes, eval->scores);
    if (eval->gold.size() != eval->votes.num_rows())
      throw DataError("eval set: gold length does not match matrix rows");
  }
  auto& p = fit.params;
  CageGradient grad;

  auto record = [&](int epoch, double objective) {
    EpochLog entry{epoch, objective, {}};
    if (eval)
      entry.eval_accuracy =
          accuracy(cage_predict(p, eval->votes, eval->scores, Exec::serial), eval->gold);
    fit.log.push_back(entry);
  };

  double initial = cage_objective(p, votes, scores, cfg.qg_weight, &grad);
  if (!std::isfinite(initial)) throw NumericError("divergence; reduce learning_rate");
  record(0, initial);
  // Gradient ascent never legitimately falls this far below its start.
  const double floor = initial - 10.0 * (1.0 + std::abs(initial));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < p.theta.size(); ++k)
      p.theta.values()[k] += cfg.learning_rate * grad.theta.values()[k];
    for (std::size_t k = 0; k < p.pi.size(); ++k)
      p.pi.values()[k] += cfg.learning_rate * grad.pi.values()[k];
    double obj = cage_objective(p, votes, scores, cfg.qg_weight, &grad);
    if (!std::isfinite(obj) || obj < floor || !all_finite(p.theta) || !all_finite(p.pi))
      throw NumericError("divergence; reduce learning_rate");
    record(epoch, obj);
  }
  return fit;
}

std::vector<double> cage_posterior(const CageParams& params, std::span<const LabelId> votes,
                                   std::span<const double> scores) {
  if (votes.size() != params.num_lfs() || scores.size() != params.num_lfs())
    throw DataError("LF count mismatch: params have " + std::to_string(params.num_lfs()) +
                    ", row has " + std::to_string(votes.size()));
  detail::BetaTable table(params);
  std::vector<double> a(static_cast<std::size_t>(params.num_classes));
  detail::row_log_potentials(params, table, votes, scores, a);
  detail::softmax_inplace(a);
  return a;
}

Matrix cage_posterior_batch(const CageParams& params, const VoteMatrix& votes,
                            const ScoreMatrix& scores, Exec exec) {
  check_compatible(params, votes);
  check_aligned(votes, scores);
  const std::size_t n = votes.num_rows();
  const auto K = static_cast<std::size_t>(params.num_classes);
  detail::BetaTable table(params);
  Matrix out(n, K);
  auto one = [&](std::size_t i) {
    auto dst = out.row(i);
    detail::row_log_potentials(params, table, votes.row(i), scores.row(i), dst);
    detail::softmax_inplace(dst);
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    // Scores of fired continuous LFs are checked up front so no exception
    // escapes the parallel region.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < votes.num_lfs(); ++j)
        if (params.lf_is_continuous[j] && votes.fired(i, j) && !scores.has(i, j))
          throw DataError("continuous LF at column " + std::to_string(j) +
                          " fired without a score");
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) one(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<LabelId> cage_predict(const CageParams& params, const VoteMatrix& votes,
                                  const ScoreMatrix& scores, Exec exec) {
  Matrix post = cage_posterior_batch(params, votes, scores, exec);
  std::vector<LabelId> out(post.rows());
  for (std::size_t i = 0; i < post.rows(); ++i) out[i] = argmax_label(post.row(i));
  return out;
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

[[noreturn]] void corrupt(const std::string& what) {
  throw DataError("corrupt params file: " + what);
}

Matrix matrix_from(const json& doc, const char* name, std::size_t rows, std::size_t cols) {
  if (!doc.contains(name) || !doc[name].is_array() || doc[name].size() != rows)
    throw DataError(std::string("shape mismatch: field '") + name + "' must have " +
                    std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = doc[name][r];
    if (!row.is_array() || row.size() != cols)
      throw DataError(std::string("shape mismatch: field '") + name + "' rows must have " +
                      std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) corrupt(std::string("field '") + name + "' holds a non-number");
      m(r, c) = row[c].get<double>();
      if (!std::isfinite(m(r, c))) corrupt(std::string("field '") + name + "' is not finite");
    }
  }
  return m;
}

}  // namespace

json to_json(const CageParams& p) {
  std::vector<bool> cont(p.lf_is_continuous.begin(), p.lf_is_continuous.end());
  return {{"version", kParamsFormatVersion},
          {"model", "cage"},
          {"K", p.num_classes},
          {"m", p.num_lfs()},
          {"lf_targets", p.lf_targets},
          {"lf_is_continuous", cont},
          {"theta", matrix_json(p.theta)},
          {"pi", matrix_json(p.pi)},
          {"quality_guides", p.quality_guides},
          {"concentration", p.concentration},
          {"score_clamp", p.score_clamp}};
}

CageParams cage_params_from_json(const json& doc) {
  if (!doc.is_object()) corrupt("not an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    corrupt("missing field 'version'");
  if (doc["version"].get<int>() != kParamsFormatVersion)
    throw DataError("unsupported params version " + doc["version"].dump());
  if (doc.contains("model") && doc["model"] != "cage")
    throw DataError("params file holds model " + doc["model"].dump() + ", expected \"cage\"");
  for (const char* f : {"K", "m"})
    if (!doc.contains(f) || !doc[f].is_number_unsigned())
      corrupt(std::string("field '") + f + "' must be a non-negative integer");
  CageParams p;
  p.num_classes = doc["K"].get<int>();
  const auto m = doc["m"].get<std::size_t>();
  const auto K = static_cast<std::size_t>(p.num_classes);
  if (p.num_classes < 2) corrupt("field 'K' must be >= 2");

  auto arr = [&](const char* f) -> const json& {
    if (!doc.contains(f) || !doc[f].is_array() || doc[f].size() != m)
      throw DataError(std::string("shape mismatch: field '") + f + "' must have m entries");
    return doc[f];
  };
  for (const auto& t : arr("lf_targets")) {
    if (!t.is_number_integer() || t.get<int>() < 1 || t.get<int>() > p.num_classes)
      corrupt("field 'lf_targets' holds a label out of range");
    p.lf_targets.push_back(t.get<LabelId>());
  }
  for (const auto& c : arr("lf_is_continuous")) {
    if (!c.is_boolean()) corrupt("field 'lf_is_continuous' must hold booleans");
    p.lf_is_continuous.push_back(c.get<bool>());
  }
  for (const auto& g : arr("quality_guides")) {
    if (!g.is_number()) corrupt("field 'quality_guides' must hold numbers");
    p.quality_guides.push_back(g.get<double>());
  }
  p.theta = matrix_from(doc, "theta", m, K);
  p.pi = matrix_from(doc, "pi", m, K);
  if (!doc.contains("concentration") || !doc["concentration"].is_number())
    corrupt("missing field 'concentration'");
  p.concentration = doc["concentration"].get<double>();
  if (!(p.concentration > 0.0)) corrupt("field 'concentration' must be > 0");
  if (doc.contains("score_clamp")) {
    if (!doc["score_clamp"].is_number()) corrupt("field 'score_clamp' must be a number");
    p.score_clamp = doc["score_clamp"].get<double>();
  }
  return p;
}

json read_params_json(const std::filesystem::path& path) {
  std::string text = read_text_file(path, FileKind::data);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw DataError(path.string() + ": corrupt params file");
  }
  if (!doc.is_object()) throw DataError(path.string() + ": corrupt params file");
  return doc;
}

void save_params(const CageParams& params, const std::filesystem::path& path) {
  write_json_file(path, to_json(params));
}

CageParams load_params(const std::filesystem::path& path) {
  auto doc = read_params_json(path);
  try {
    return cage_params_from_json(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dprog
