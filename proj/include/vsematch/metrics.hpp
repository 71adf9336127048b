#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vsematch/inference.hpp"

namespace vsematch {

enum class Direction { image_to_text, text_to_image };

const char* direction_name(Direction d);

// Bidirectional retrieval metrics: R@K as percentages, median and mean of
// the 1-based ground-truth ranks.
struct RetrievalReport {
  Direction direction = Direction::image_to_text;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double med_r = 0.0;
  double mean_r = 0.0;
  long n_queries = 0;

  double r_sum() const { return r_at_1 + r_at_5 + r_at_10; }
};

// counts[k] = number of items that are the nearest neighbor of exactly k
// queries.
struct HubHistogram {
  std::map<long, long> counts;
  long n_items = 0;
  long n_queries = 0;
};

struct HubBucket {
  std::string label;  // "k=0", "k=1", "k>=5", ...
  long count = 0;
  double percentage = 0.0;  // of n_items
};

// 1-based rank of the best ground-truth item in each query's ranked list.
std::vector<long> ground_truth_ranks(const RankingResult& ranking, const PairIndex& pairs);

RetrievalReport compute_report(const RankingResult& ranking, const PairIndex& pairs,
                               Direction direction);

// Splits the queries into n_folds contiguous folds, computes one report per
// fold and averages them (the MS-COCO 1k protocol at desk scale).
RetrievalReport compute_report_folds(const RankingResult& ranking, const PairIndex& pairs,
                                     Direction direction, int n_folds);

RetrievalReport average_reports(std::span<const RetrievalReport> reports);

// Per-query nearest neighbors under the deterministic tie rule, bucketed by
// how many queries each item serves.
HubHistogram hub_histogram(const SimilarityMatrix& sim);

// Exact k=0 and k=1 buckets plus one cumulative bucket per threshold.
std::vector<HubBucket> hub_summary(const HubHistogram& h, std::span<const long> thresholds);

// Fraction (in percent) of queries whose matched item is a ground-truth
// positive; unmatched queries count as misses.
double matching_recall_at_1(const Matching& m, const PairIndex& pairs);

}  // namespace vsematch
