#pragma once
// Test-only reference computations. Nothing here calls into the
// implementation paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/beta.hpp>

#include "dataprog/core.hpp"
#include "dataprog/matrix.hpp"

namespace oracle {

/// Z by enumerating every class and every firing pattern of m discrete LFs.
inline double brute_force_partition(const dprog::Matrix& theta) {
  const std::size_t m = theta.rows(), K = theta.cols();
  double z = 0.0;
  for (std::size_t y = 0; y < K; ++y) {
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << m); ++pattern) {
      double prod = 1.0;
      for (std::size_t j = 0; j < m; ++j)
        if (pattern >> j & 1) prod *= std::exp(theta(j, y));
      z += prod;
    }
  }
  return z;
}

/// Posterior by direct product of potentials using boost's Beta pdf.
inline std::vector<double> direct_posterior(const dprog::Matrix& theta, const dprog::Matrix& pi,
                                            std::span<const bool> continuous, double concentration,
                                            double eps, std::span<const int> votes,
                                            std::span<const double> scores) {
  const std::size_t m = theta.rows(), K = theta.cols();
  std::vector<double> p(K, 1.0);
  for (std::size_t y = 0; y < K; ++y) {
    for (std::size_t j = 0; j < m; ++j) {
      if (votes[j] == 0) continue;
      p[y] *= std::exp(theta(j, y));
      if (!continuous[j]) continue;
      double q = 1.0 / (1.0 + std::exp(-pi(j, y)));
      q = std::min(std::max(q, eps), 1.0 - eps);
      double s = std::min(std::max(scores[j], eps), 1.0 - eps);
      boost::math::beta_distribution<double> dist(concentration * q, concentration * (1.0 - q));
      p[y] *= boost::math::pdf(dist, s);
    }
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

/// Central differences of f over every coordinate of `x`.
inline std::vector<double> central_differences(std::vector<double> x,
                                               const std::function<double(const std::vector<double>&)>& f,
                                               double step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double orig = x[k];
    x[k] = orig + step;
    double up = f(x);
    x[k] = orig - step;
    double down = f(x);
    x[k] = orig;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Relative error with an absolute floor so near-zero components compare
/// on absolute scale.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::max(std::abs(analytic), std::abs(numeric)));
}

/// Best value of `f` over every subset of {0..n-1} of size exactly k.
inline double exhaustive_best(std::size_t n, std::size_t k,
                              const std::function<double(std::span<const std::size_t>)>& f) {
  double best = -1.0;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (pick.size() == k) {
      best = std::max(best, f(pick));
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      pick.push_back(i);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

/// Facility location written from the definition.
inline double fl_value(const dprog::Matrix& sim, std::span<const std::size_t> s) {
  double total = 0.0;
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    double best = 0.0;
    for (std::size_t j : s) best = std::max(best, sim(i, j));
    total += best;
  }
  return total;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
};

}  // namespace oracle
