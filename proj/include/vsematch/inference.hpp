#pragma once

#include <utility>
#include <vector>

#include "vsematch/embedding.hpp"

namespace vsematch {

enum class Strategy { naive, inverted_softmax, csls, hungarian };

const char* strategy_name(Strategy s);

struct InferenceConfig {
  Strategy strategy = Strategy::naive;
  double beta = 30.0;  // inverted softmax temperature
  int csls_k = 10;     // CSLS neighborhood size
};

// Per-query item permutations plus the adjusted scores that were ranked.
struct RankingResult {
  std::vector<std::vector<int>> ranked_items;  // one permutation per query
  SimilarityMatrix adjusted;
};

// A bipartite matching: no query and no item appears twice.
struct Matching {
  std::vector<std::pair<int, int>> edges;  // (query, item), ascending by query
  double total_weight = 0.0;               // sum of raw similarities over edges
};

// Sort each query's items by raw score, descending, ties by lower index.
RankingResult rank_naive(const SimilarityMatrix& sim);

// Rescales each score by the item's exponentiated similarity to the other
// queries, then ranks. Exponentials are shifted by the per-column max so any
// temperature is safe; the ratio is invariant to the shift.
RankingResult rank_inverted_softmax(const SimilarityMatrix& sim, const InferenceConfig& cfg);

// Subtracts each side's mean similarity to its k nearest cross-modal
// neighbors from twice the raw score, then ranks.
RankingResult rank_csls(const SimilarityMatrix& sim, const InferenceConfig& cfg);

// Dispatch over the three ranking strategies (not hungarian).
RankingResult rank_with(const SimilarityMatrix& sim, const InferenceConfig& cfg);

// Maximum-weight bipartite matching over raw similarities. Rectangular
// inputs are padded internally; dummy edges never appear in the output.
// Among equal-weight optima the lexicographically smallest edge list by
// query index is returned.
Matching match_hungarian(const SimilarityMatrix& sim);

}  // namespace vsematch
