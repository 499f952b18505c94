#pragma once

// Brute-force references for the ranking metrics.

#include <cstdint>
#include <functional>
#include <random>
#include <set>

#include "edl/eval.hpp"

namespace ranking {

using edl::ScoredBinary;

// Pairwise count: P(pos > neg) + P(pos = neg) / 2.
inline double brute_auroc(const ScoredBinary& s) {
  std::uint64_t twice = 0;
  for (double p : s.pos_scores)
    for (double n : s.neg_scores) twice += p > n ? 2 : p == n ? 1 : 0;
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(s.pos_scores.size()) * static_cast<double>(s.neg_scores.size()));
}

// Average precision by enumerating every distinct threshold from the top:
// sum over thresholds of (recall gain) x (precision at that threshold).
inline double brute_aupr(const ScoredBinary& s) {
  std::set<double, std::greater<>> thresholds(s.pos_scores.begin(), s.pos_scores.end());
  thresholds.insert(s.neg_scores.begin(), s.neg_scores.end());
  const double total = static_cast<double>(s.pos_scores.size());
  std::size_t prev_tp = 0;
  double ap = 0.0;
  for (double t : thresholds) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (double p : s.pos_scores) tp += p >= t;
    for (double n : s.neg_scores) fp += n >= t;
    if (tp == prev_tp) continue;
    ap += static_cast<double>(tp - prev_tp) / total *
          (static_cast<double>(tp) / static_cast<double>(tp + fp));
    prev_tp = tp;
  }
  return ap;
}

inline ScoredBinary random_instance(std::mt19937_64& rng) {
  ScoredBinary s;
  const std::size_t n = 2 + rng() % 7;  // total size 2..8
  const std::size_t pos = 1 + rng() % (n - 1);
  // A small score alphabet forces frequent ties.
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(rng() % 4) * 0.25;
    (i < pos ? s.pos_scores : s.neg_scores).push_back(v);
  }
  return s;
}

}  // namespace ranking
