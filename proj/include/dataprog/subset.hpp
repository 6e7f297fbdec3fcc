#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataprog/core.hpp"
#include "dataprog/io.hpp"
#include "dataprog/matrix.hpp"
#include "dataprog/parallel.hpp"

namespace dprog {

enum class Similarity { cosine, dot, rbf };

struct SimilarityConfig {
  Similarity kind = Similarity::cosine;
  double sigma = 1.0;  // rbf width
};

std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view text);

/// Symmetric n x n similarity. Cosine against a zero vector is 0.
Matrix similarity_matrix(const Matrix& features, const SimilarityConfig& cfg = {},
                         Exec exec = Exec::parallel);

struct Selection {
  std::vector<std::size_t> indices;  // in selection order
  double objective = 0.0;
  std::vector<double> trace;  // objective after each pick
};

/// k distinct indices drawn uniformly from [0, n), ascending. Throws
/// ConfigError unless 1 <= k <= n.
std::vector<std::size_t> rand_subset(std::size_t n, std::size_t k, std::uint64_t seed);

/// f(S) = sum_i max(0, max_{j in S} sim(i, j)) for a symmetric `sim`.
double facility_location_value(const Matrix& sim, std::span<const std::size_t> selected);

/// Naive greedy: every remaining candidate's marginal gain is recomputed at
/// every step (in parallel across candidates with Exec::parallel). Ties go
/// to the smaller index.
Selection facility_location_greedy(const Matrix& sim, std::size_t k, Exec exec = Exec::serial);

/// Lazy greedy with stale-gain upper bounds in a priority queue. Selects
/// exactly what facility_location_greedy selects.
Selection facility_location_lazy(const Matrix& sim, std::size_t k);

/// Facility location over cosine (or configured) similarity of the rows of
/// `features`, via lazy greedy. Throws ConfigError when k > n.
Selection unsup_subset(const Matrix& features, std::size_t k, const SimilarityConfig& cfg = {});

/// |union of LFs fired on the selected rows|.
std::size_t max_cover_value(const VoteMatrix& votes, std::span<const std::size_t> selected);

/// Greedy max cover; ties go to the smaller index.
Selection max_cover_subset(const VoteMatrix& votes, std::size_t k);

/// Largest-remainder apportionment of k seats over `counts` (remainder ties
/// go to the smaller position).
std::vector<std::size_t> class_budgets(std::span<const std::size_t> counts, std::size_t k);

/// Class-stratified facility location: budgets proportional to class
/// frequency among `gold`, lazy greedy inside each class, results
/// concatenated by class id. Throws ConfigError("budget below class count")
/// when k is smaller than the number of classes present.
Selection sup_subset(const Matrix& features, std::span<const LabelId> gold, std::size_t k,
                     int num_classes, const SimilarityConfig& cfg = {});

/// Writes `<prefix>.L` with the selected instances and `<prefix>.U` with the
/// rest, both in input order.
void save_subset_files(const DataSplit& data, std::span<const std::size_t> selected,
                       const std::string& prefix);

/// sup_subset followed by save_subset_files.
Selection sup_subset_save_files(const DataSplit& data, std::size_t k, int num_classes,
                                const std::string& prefix, const SimilarityConfig& cfg = {});

/// {method, k, seed?, indices, objective_value}
json indices_json(std::string_view method, std::size_t k, std::optional<std::uint64_t> seed,
                  std::span<const std::size_t> indices, std::optional<double> objective);

}  // namespace dprog
