#include "vsematch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vsematch {

const char* direction_name(Direction d) {
  return d == Direction::image_to_text ? "image_to_text" : "text_to_image";
}

std::vector<long> ground_truth_ranks(const RankingResult& ranking, const PairIndex& pairs) {
  const Index nq = static_cast<Index>(ranking.ranked_items.size());
  if (pairs.n_queries() != nq)
    throw std::invalid_argument("ground_truth_ranks: pair index does not cover every query");
  if (nq > 0 && pairs.n_items() != static_cast<Index>(ranking.ranked_items.front().size()))
    throw std::invalid_argument("ground_truth_ranks: pair index item count does not match ranking width");
  std::vector<long> ranks(static_cast<std::size_t>(nq), 0);
  std::vector<char> positive(static_cast<std::size_t>(pairs.n_items()), 0);
  for (Index q = 0; q < nq; ++q) {
    if (!pairs.has_positives(q)) throw MissingGroundTruthError(q);
    for (int i : pairs.positives(q)) positive[static_cast<std::size_t>(i)] = 1;
    long rank = 0;
    const auto& ranked = ranking.ranked_items[static_cast<std::size_t>(q)];
    for (std::size_t pos = 0; pos < ranked.size(); ++pos) {
      if (positive[static_cast<std::size_t>(ranked[pos])]) {
        rank = static_cast<long>(pos) + 1;
        break;
      }
    }
    for (int i : pairs.positives(q)) positive[static_cast<std::size_t>(i)] = 0;
    if (rank == 0)
      throw std::invalid_argument("ground_truth_ranks: ranked list misses the positives of query " +
                                  std::to_string(q));
    ranks[static_cast<std::size_t>(q)] = rank;
  }
  return ranks;
}

namespace {

RetrievalReport report_from_ranks(std::span<const long> ranks, Direction direction) {
  RetrievalReport rep;
  rep.direction = direction;
  rep.n_queries = static_cast<long>(ranks.size());
  if (ranks.empty()) throw std::invalid_argument("retrieval report over zero queries");
  long hit1 = 0, hit5 = 0, hit10 = 0;
  double sum = 0.0;
  for (long r : ranks) {
    hit1 += r <= 1;
    hit5 += r <= 5;
    hit10 += r <= 10;
    sum += static_cast<double>(r);
  }
  const double n = static_cast<double>(ranks.size());
  rep.r_at_1 = 100.0 * static_cast<double>(hit1) / n;
  rep.r_at_5 = 100.0 * static_cast<double>(hit5) / n;
  rep.r_at_10 = 100.0 * static_cast<double>(hit10) / n;
  rep.mean_r = sum / n;
  std::vector<long> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  rep.med_r = (sorted.size() % 2 == 1)
                  ? static_cast<double>(sorted[mid])
                  : (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
  return rep;
}

}  // namespace

RetrievalReport compute_report(const RankingResult& ranking, const PairIndex& pairs,
                               Direction direction) {
  const std::vector<long> ranks = ground_truth_ranks(ranking, pairs);
  return report_from_ranks(ranks, direction);
}

RetrievalReport compute_report_folds(const RankingResult& ranking, const PairIndex& pairs,
                                     Direction direction, int n_folds) {
  if (n_folds < 1) throw std::invalid_argument("n_folds must be at least 1");
  const std::vector<long> ranks = ground_truth_ranks(ranking, pairs);
  const std::size_t n = ranks.size();
  if (static_cast<std::size_t>(n_folds) > n)
    throw std::invalid_argument("more folds than queries");
  std::vector<RetrievalReport> reports;
  reports.reserve(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    const std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(n_folds);
    const std::size_t hi = n * (static_cast<std::size_t>(f) + 1) / static_cast<std::size_t>(n_folds);
    reports.push_back(report_from_ranks(std::span<const long>(ranks).subspan(lo, hi - lo), direction));
  }
  return average_reports(reports);
}

RetrievalReport average_reports(std::span<const RetrievalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("average_reports: empty input");
  RetrievalReport avg;
  avg.direction = reports.front().direction;
  for (const auto& r : reports) {
    avg.r_at_1 += r.r_at_1;
    avg.r_at_5 += r.r_at_5;
    avg.r_at_10 += r.r_at_10;
    avg.med_r += r.med_r;
    avg.mean_r += r.mean_r;
    avg.n_queries += r.n_queries;
  }
  const double n = static_cast<double>(reports.size());
  avg.r_at_1 /= n;
  avg.r_at_5 /= n;
  avg.r_at_10 /= n;
  avg.med_r /= n;
  avg.mean_r /= n;
  return avg;
}

HubHistogram hub_histogram(const SimilarityMatrix& sim) {
  const Index nq = sim.n_queries();
  const Index ni = sim.n_items();
  std::vector<long> nn_count(static_cast<std::size_t>(ni), 0);
  for (Index q = 0; q < nq; ++q) {
    Index best = 0;
    for (Index j = 1; j < ni; ++j)
      if (sim.scores(q, j) > sim.scores(q, best)) best = j;
    ++nn_count[static_cast<std::size_t>(best)];
  }
  HubHistogram h;
  h.n_items = static_cast<long>(ni);
  h.n_queries = static_cast<long>(nq);
  for (long c : nn_count) ++h.counts[c];
  return h;
}

std::vector<HubBucket> hub_summary(const HubHistogram& h, std::span<const long> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("hub_summary: thresholds must be nonempty");
  const auto exact = [&](long k) {
    const auto it = h.counts.find(k);
    return it == h.counts.end() ? 0L : it->second;
  };
  const auto at_least = [&](long k) {
    long total = 0;
    for (const auto& [count, items] : h.counts)
      if (count >= k) total += items;
    return total;
  };
  const double n = static_cast<double>(h.n_items);
  std::vector<HubBucket> out;
  out.push_back({"k=0", exact(0), 100.0 * static_cast<double>(exact(0)) / n});
  out.push_back({"k=1", exact(1), 100.0 * static_cast<double>(exact(1)) / n});
  for (long t : thresholds) {
    const long c = at_least(t);
    out.push_back({"k>=" + std::to_string(t), c, 100.0 * static_cast<double>(c) / n});
  }
  return out;
}

double matching_recall_at_1(const Matching& m, const PairIndex& pairs) {
  const long nq = static_cast<long>(pairs.n_queries());
  if (nq == 0) throw std::invalid_argument("matching_recall_at_1: no queries");
  long hits = 0;
  for (const auto& [q, item] : m.edges) {
    const auto& pos = pairs.positives(q);
    if (std::binary_search(pos.begin(), pos.end(), item)) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(nq);
}

}  // namespace vsematch
