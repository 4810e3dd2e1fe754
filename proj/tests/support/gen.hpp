#pragma once

// Seeded generators and brute-force reference implementations for tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "semhash/numerics.hpp"
#include "semhash/retrieval.hpp"

namespace semhash::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  // no entry closer to zero than `gap`, so sign-based tests stay stable
  std::vector<double> vec_away_from_zero(std::size_t n, double gap = 1e-3) {
    std::vector<double> v(n);
    for (auto& x : v) {
      const double m = uniform(gap, 1.0);
      x = coin() ? m : -m;
    }
    return v;
  }
  std::vector<int> bits(std::size_t n, double p = 0.5) {
    std::vector<int> v(n);
    for (auto& b : v) b = coin(p) ? 1 : 0;
    return v;
  }
  Matrix matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (auto& x : m.values()) x = uniform(-scale, scale);
    return m;
  }
  std::vector<double> pm_one(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = coin() ? 1.0 : -1.0;
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// AP@p written straight from the definition: sum of P(k) * rel(k) over the
// first p ranks, divided by the number of relevant ranks among them.
inline double naive_ap(const std::vector<int>& rel, std::size_t p) {
  const std::size_t depth = std::min(p, rel.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 1; k <= depth; ++k) {
    if (!rel[k - 1]) continue;
    double hits = 0.0;
    for (std::size_t n = 1; n <= k; ++n) hits += rel[n - 1];
    num += hits / static_cast<double>(k);
    den += 1.0;
  }
  return den == 0.0 ? 0.0 : num / den;
}

inline double naive_map(const std::vector<std::vector<int>>& qs, std::size_t p) {
  double s = 0.0;
  for (const auto& q : qs) s += naive_ap(q, p);
  return s / static_cast<double>(qs.size());
}

inline double naive_top_p(const std::vector<std::vector<int>>& qs, std::size_t p, std::size_t h) {
  double ok = 0.0;
  for (const auto& q : qs) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < p && k < q.size(); ++k) hits += q[k] ? 1 : 0;
    if (hits >= h) ok += 1.0;
  }
  return ok / static_cast<double>(qs.size());
}

// unpacked bit compare + stable sort
inline std::vector<QueryHit> naive_rank(const std::vector<std::vector<int>>& gallery,
                                        const std::vector<int>& probe, std::size_t p) {
  std::vector<QueryHit> all;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    std::size_t d = 0;
    for (std::size_t k = 0; k < probe.size(); ++k) d += gallery[i][k] != probe[k];
    all.push_back({i, d});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const QueryHit& a, const QueryHit& b) { return a.distance < b.distance; });
  all.resize(std::min(p, all.size()));
  return all;
}

// |a - n| / max(|a|, |n|, floor)
inline double rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace semhash::testing
