#include "dataprog/subset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include "dataprog/errors.hpp"

namespace dprog {

std::string_view to_string(Similarity s) {
  switch (s) {
    case Similarity::cosine: return "cosine";
    case Similarity::dot: return "dot";
    case Similarity::rbf: return "rbf";
  }
  return "cosine";
}

Similarity parse_similarity(std::string_view text) {
  if (text == "cosine") return Similarity::cosine;
  if (text == "dot") return Similarity::dot;
  if (text == "rbf") return Similarity::rbf;
  throw ConfigError("similarity must be cosine, dot or rbf (got '" + std::string(text) + "')");
}

Matrix similarity_matrix(const Matrix& features, const SimilarityConfig& cfg, Exec exec) {
  if (cfg.kind == Similarity::rbf && !(cfg.sigma > 0.0)) throw ConfigError("rbf sigma must be > 0");
  const std::size_t n = features.rows(), d = features.cols();
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : features.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  Matrix sim(n, n);
  auto fill_row = [&](std::size_t i) {
    auto xi = features.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      auto xj = features.row(j);
      double v = 0.0;
      if (cfg.kind == Similarity::rbf) {
        for (std::size_t k = 0; k < d; ++k) v += (xi[k] - xj[k]) * (xi[k] - xj[k]);
        v = std::exp(-v / (2.0 * cfg.sigma * cfg.sigma));
      } else {
        for (std::size_t k = 0; k < d; ++k) v += xi[k] * xj[k];
        if (cfg.kind == Similarity::cosine)
          v = (norms[i] == 0.0 || norms[j] == 0.0) ? 0.0 : v / (norms[i] * norms[j]);
      }
      sim(i, j) = v;
    }
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fill_row(i);
  } else {
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < rows; ++i) fill_row(static_cast<std::size_t>(i));
  }
  return sim;
}

std::vector<std::size_t> rand_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("rand_subset: k must be >= 1");
  if (k > n) throw ConfigError("rand_subset: k exceeds n");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates over the first k slots.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

// ---------------------------------------------------------------------------
// Facility location

namespace {

void check_k(std::size_t k, std::size_t n) {
  if (k > n)
    throw ConfigError("k (" + std::to_string(k) + ") exceeds the number of instances (" +
                      std::to_string(n) + ")");
}

/// sum_i max(0, sim(j, i) - cover_i); identical arithmetic in every variant.
double fl_gain(const Matrix& sim, std::span<const double> cover, std::size_t j) {
  auto row = sim.row(j);
  double g = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    double d = row[i] - cover[i];
    if (d > 0.0) g += d;
  }
  return g;
}

void fl_take(const Matrix& sim, std::vector<double>& cover, std::size_t j) {
  auto row = sim.row(j);
  for (std::size_t i = 0; i < row.size(); ++i) cover[i] = std::max(cover[i], row[i]);
}

double total(std::span<const double> cover) {
  double s = 0.0;
  for (double c : cover) s += c;
  return s;
}

}  // namespace

double facility_location_value(const Matrix& sim, std::span<const std::size_t> selected) {
  std::vector<double> cover(sim.rows(), 0.0);
  for (std::size_t j : selected) fl_take(sim, cover, j);
  return total(cover);
}

Selection facility_location_greedy(const Matrix& sim, std::size_t k, Exec exec) {
  const std::size_t n = sim.rows();
  check_k(k, n);
  Selection sel;
  std::vector<double> cover(n, 0.0), gains(n);
  std::vector<char> taken(n, 0);
  for (std::size_t step = 0; step < k; ++step) {
    if (exec == Exec::serial) {
      for (std::size_t j = 0; j < n; ++j) gains[j] = taken[j] ? -1.0 : fl_gain(sim, cover, j);
    } else {
      const auto cands = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t j = 0; j < cands; ++j) {
        auto c = static_cast<std::size_t>(j);
        gains[c] = taken[c] ? -1.0 : fl_gain(sim, cover, c);
      }
    }
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!taken[j] && (best == n || gains[j] > gains[best])) best = j;
    taken[best] = 1;
    fl_take(sim, cover, best);
    sel.indices.push_back(best);
    sel.trace.push_back(total(cover));
  }
  sel.objective = total(cover);
  return sel;
}

Selection facility_location_lazy(const Matrix& sim, std::size_t k) {
  const std::size_t n = sim.rows();
  check_k(k, n);
  struct Entry {
    double gain;
    std::size_t index;
    std::size_t stamp;  // selection count when `gain` was computed
  };
  // Max-heap on gain, smaller index first among equal gains.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.index > b.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  std::vector<double> cover(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) heap.push({fl_gain(sim, cover, j), j, 0});

  Selection sel;
  while (sel.indices.size() < k) {
    Entry top = heap.top();
    heap.pop();
    if (top.stamp == sel.indices.size()) {
      fl_take(sim, cover, top.index);
      sel.indices.push_back(top.index);
      sel.trace.push_back(total(cover));
    } else {
      heap.push({fl_gain(sim, cover, top.index), top.index, sel.indices.size()});
    }
  }
  sel.objective = total(cover);
  return sel;
}

Selection unsup_subset(const Matrix& features, std::size_t k, const SimilarityConfig& cfg) {
  check_k(k, features.rows());
  if (features.rows() > 0 && features.cols() == 0)
    throw DataError("unsup_subset: features must have dimension >= 1");
  return facility_location_lazy(similarity_matrix(features, cfg), k);
}

// ---------------------------------------------------------------------------
// Max cover

std::size_t max_cover_value(const VoteMatrix& votes, std::span<const std::size_t> selected) {
  std::vector<char> covered(votes.num_lfs(), 0);
  for (std::size_t i : selected)
    for (std::size_t j = 0; j < votes.num_lfs(); ++j) covered[j] |= votes.fired(i, j);
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
}

Selection max_cover_subset(const VoteMatrix& votes, std::size_t k) {
  const std::size_t n = votes.num_rows(), m = votes.num_lfs();
  check_k(k, n);
  std::vector<char> covered(m, 0), taken(n, 0);
  std::size_t value = 0;
  Selection sel;
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n, best_gain = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      std::size_t g = 0;
      for (std::size_t j = 0; j < m; ++j) g += votes.fired(i, j) && !covered[j];
      if (best == n || g > best_gain) {
        best = i;
        best_gain = g;
      }
    }
    taken[best] = 1;
    for (std::size_t j = 0; j < m; ++j) covered[j] |= votes.fired(best, j);
    value += best_gain;
    sel.indices.push_back(best);
    sel.trace.push_back(static_cast<double>(value));
  }
  sel.objective = static_cast<double>(value);
  return sel;
}

// ---------------------------------------------------------------------------
// Supervised (class-stratified)

std::vector<std::size_t> class_budgets(std::span<const std::size_t> counts, std::size_t k) {
  const std::size_t total_count = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> budget(counts.size(), 0);
  if (total_count == 0) return budget;
  // Exact integer arithmetic: quota_c = k * count_c / total.
  std::vector<std::size_t> remainder(counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    budget[c] = k * counts[c] / total_count;
    remainder[c] = k * counts[c] % total_count;
    assigned += budget[c];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < k && r < order.size(); ++r, ++assigned) ++budget[order[r]];
  return budget;
}

Selection sup_subset(const Matrix& features, std::span<const LabelId> gold, std::size_t k,
                     int num_classes, const SimilarityConfig& cfg) {
  const std::size_t n = features.rows();
  if (gold.size() != n) throw DataError("sup_subset: gold length does not match features");
  check_k(k, n);
  const auto K = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<std::size_t>> members(K);
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i] < 1 || gold[i] > num_classes)
      throw DataError("sup_subset: every candidate needs a gold label in 1..K");
    members[static_cast<std::size_t>(gold[i] - 1)].push_back(i);
  }
  std::vector<std::size_t> counts(K);
  std::size_t present = 0;
  for (std::size_t c = 0; c < K; ++c) {
    counts[c] = members[c].size();
    present += counts[c] > 0;
  }
  if (k < present) throw ConfigError("budget below class count");
  auto budget = class_budgets(counts, k);

  Selection sel;
  for (std::size_t c = 0; c < K; ++c) {
    if (budget[c] == 0) continue;
    Matrix sub(members[c].size(), features.cols());
    for (std::size_t r = 0; r < members[c].size(); ++r) {
      auto src = features.row(members[c][r]);
      std::copy(src.begin(), src.end(), sub.row(r).begin());
    }
    Selection part = facility_location_lazy(similarity_matrix(sub, cfg), budget[c]);
    for (std::size_t local : part.indices) {
      sel.indices.push_back(members[c][local]);
    }
    for (double t : part.trace) sel.trace.push_back(sel.objective + t);
    sel.objective += part.objective;
  }
  return sel;
}

void save_subset_files(const DataSplit& data, std::span<const std::size_t> selected,
                       const std::string& prefix) {
  std::vector<char> chosen(data.size(), 0);
  for (std::size_t i : selected) {
    if (i >= data.size()) throw DataError("subset index out of range");
    chosen[i] = 1;
  }
  DataSplit l{SplitRole::labeled, {}}, u{SplitRole::unlabeled, {}};
  for (std::size_t i = 0; i < data.size(); ++i)
    (chosen[i] ? l : u).instances.push_back(data.instances[i]);
  write_dataset(prefix + ".L", l);
  write_dataset(prefix + ".U", u);
}

Selection sup_subset_save_files(const DataSplit& data, std::size_t k, int num_classes,
                                const std::string& prefix, const SimilarityConfig& cfg) {
  Selection sel = sup_subset(feature_matrix(data), gold_labels(data), k, num_classes, cfg);
  save_subset_files(data, sel.indices, prefix);
  return sel;
}

json indices_json(std::string_view method, std::size_t k, std::optional<std::uint64_t> seed,
                  std::span<const std::size_t> indices, std::optional<double> objective) {
  json doc = {{"method", std::string(method)},
              {"k", k},
              {"indices", std::vector<std::size_t>(indices.begin(), indices.end())}};
  if (seed) doc["seed"] = *seed;
  doc["objective_value"] = objective ? json(*objective) : json(nullptr);
  return doc;
}

}  // namespace dprog
