#include "vsematch/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace vsematch;

namespace {

// A ranking whose query q places its positive (item q) at the given 1-based
// rank, over n_items items.
RankingResult ranking_with_ranks(const std::vector<long>& ranks, int n_items) {
  RankingResult r;
  r.adjusted.scores = Matrix::Zero(static_cast<Index>(ranks.size()), n_items);
  for (std::size_t q = 0; q < ranks.size(); ++q) {
    std::vector<int> row;
    for (int j = 0; j < n_items; ++j)
      if (j != static_cast<int>(q)) row.push_back(j);
    row.insert(row.begin() + (ranks[q] - 1), static_cast<int>(q));
    r.ranked_items.push_back(std::move(row));
  }
  return r;
}

RankingResult random_ranking(std::mt19937& rng, int nq, int ni) {
  RankingResult r;
  r.adjusted.scores = Matrix::Zero(nq, ni);
  for (int q = 0; q < nq; ++q) {
    std::vector<int> row(static_cast<std::size_t>(ni));
    std::iota(row.begin(), row.end(), 0);
    std::shuffle(row.begin(), row.end(), rng);
    r.ranked_items.push_back(std::move(row));
  }
  return r;
}

SimilarityMatrix raw_sim(Matrix scores) {
  SimilarityMatrix sim;
  sim.scores = std::move(scores);
  return sim;
}

}  // namespace

TEST(ComputeReport, RanksOneThreeTwelve) {
  const RankingResult r = ranking_with_ranks({1, 3, 12}, 15);
  const RetrievalReport rep = compute_report(r, PairIndex::diagonal(3), Direction::image_to_text);
  EXPECT_NEAR(rep.r_at_1, 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.r_at_5, 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.r_at_10, 200.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(rep.med_r, 3.0);
  EXPECT_NEAR(rep.mean_r, 16.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.n_queries, 3);
}

TEST(ComputeReport, PerfectRetrieval) {
  const RankingResult r = ranking_with_ranks({1, 1, 1, 1}, 9);
  const RetrievalReport rep = compute_report(r, PairIndex::diagonal(4), Direction::text_to_image);
  EXPECT_DOUBLE_EQ(rep.r_at_1, 100.0);
  EXPECT_DOUBLE_EQ(rep.med_r, 1.0);
  EXPECT_DOUBLE_EQ(rep.mean_r, 1.0);
}

TEST(ComputeReport, MedianAveragesTheMiddlePairForEvenCounts) {
  const RankingResult r = ranking_with_ranks({1, 2, 7, 20}, 25);
  const RetrievalReport rep = compute_report(r, PairIndex::diagonal(4), Direction::image_to_text);
  EXPECT_DOUBLE_EQ(rep.med_r, 4.5);
}

TEST(ComputeReport, MultiPositiveMatchesLinearScanOracle) {
  std::mt19937 rng(51);
  const int nq = 50, ni = 40;
  const RankingResult r = random_ranking(rng, nq, ni);
  std::uniform_int_distribution<int> item(0, ni - 1);
  std::vector<std::vector<int>> positives(nq);
  for (auto& pos : positives) {
    const int count = 1 + static_cast<int>(rng() % 5);
    for (int t = 0; t < count; ++t) pos.push_back(item(rng));
  }
  const PairIndex pairs(positives, ni);
  const RetrievalReport rep = compute_report(r, pairs, Direction::image_to_text);

  // Oracle: scan each ranked list for the first positive.
  std::vector<long> ranks;
  for (int q = 0; q < nq; ++q) {
    const auto& pos = pairs.positives(q);
    for (std::size_t p = 0; p < r.ranked_items[static_cast<std::size_t>(q)].size(); ++p) {
      if (std::find(pos.begin(), pos.end(),
                    r.ranked_items[static_cast<std::size_t>(q)][p]) != pos.end()) {
        ranks.push_back(static_cast<long>(p) + 1);
        break;
      }
    }
  }
  long hit1 = 0, hit5 = 0, hit10 = 0;
  double sum = 0;
  for (long rank : ranks) {
    hit1 += rank <= 1;
    hit5 += rank <= 5;
    hit10 += rank <= 10;
    sum += static_cast<double>(rank);
  }
  EXPECT_NEAR(rep.r_at_1, 100.0 * hit1 / nq, 1e-12);
  EXPECT_NEAR(rep.r_at_5, 100.0 * hit5 / nq, 1e-12);
  EXPECT_NEAR(rep.r_at_10, 100.0 * hit10 / nq, 1e-12);
  EXPECT_NEAR(rep.mean_r, sum / nq, 1e-12);
  EXPECT_GE(rep.r_at_5, rep.r_at_1);
  EXPECT_GE(rep.r_at_10, rep.r_at_5);
  EXPECT_GE(rep.med_r, 1.0);
  EXPECT_GE(rep.mean_r, 1.0);
}

TEST(ComputeReport, QueryWithoutPositivesThrows) {
  const RankingResult r = ranking_with_ranks({1, 1}, 4);
  EXPECT_THROW(compute_report(r, PairIndex({{0}, {}}, 4), Direction::image_to_text),
               MissingGroundTruthError);
}

TEST(ComputeReport, FoldAveragingMatchesManualSplit) {
  const RankingResult r = ranking_with_ranks({1, 2, 3, 4, 5, 6}, 10);
  const PairIndex pairs = PairIndex::diagonal(6);
  const RetrievalReport folded =
      compute_report_folds(r, pairs, Direction::image_to_text, 2);
  // Folds {1,2,3} and {4,5,6}: med 2 and 5, mean 2 and 5.
  EXPECT_DOUBLE_EQ(folded.med_r, 3.5);
  EXPECT_DOUBLE_EQ(folded.mean_r, 3.5);
  EXPECT_NEAR(folded.r_at_5, (100.0 + 200.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(folded.n_queries, 6);

  const RetrievalReport plain = compute_report(r, pairs, Direction::image_to_text);
  const RetrievalReport one_fold = compute_report_folds(r, pairs, Direction::image_to_text, 1);
  EXPECT_DOUBLE_EQ(plain.mean_r, one_fold.mean_r);
  EXPECT_DOUBLE_EQ(plain.r_at_1, one_fold.r_at_1);
}

TEST(HubHistogram, DiagonalDominantMeansEveryItemServesOneQuery) {
  Matrix s = Matrix::Constant(5, 5, 0.1);
  for (Index q = 0; q < 5; ++q) s(q, q) = 0.9;
  const HubHistogram h = hub_histogram(raw_sim(s));
  EXPECT_EQ(h.counts.at(1), 5);
  EXPECT_EQ(h.counts.size(), 1u);
}

TEST(HubHistogram, UniformlyMaximalColumnIsASingleHub) {
  std::mt19937 rng(52);
  Matrix s = oracle::random_matrix(rng, 6, 6, -1.0, 0.5);
  for (Index q = 0; q < 6; ++q) s(q, 2) = 0.9;
  const HubHistogram h = hub_histogram(raw_sim(s));
  EXPECT_EQ(h.counts.at(0), 5);
  EXPECT_EQ(h.counts.at(6), 1);
}

TEST(HubHistogram, InvariantsHoldOnRandomInputs) {
  std::mt19937 rng(53);
  for (int rep = 0; rep < 20; ++rep) {
    const Index nq = 1 + static_cast<Index>(rng() % 30);
    const Index ni = 1 + static_cast<Index>(rng() % 30);
    const HubHistogram h = hub_histogram(raw_sim(oracle::random_matrix(rng, nq, ni)));
    long items = 0, queries = 0;
    for (const auto& [k, count] : h.counts) {
      items += count;
      queries += k * count;
    }
    EXPECT_EQ(items, h.n_items);
    EXPECT_EQ(queries, h.n_queries);
  }
}

TEST(HubSummary, NoHubsMeansEmptyTailBuckets) {
  HubHistogram h;
  h.counts = {{1, 7}};
  h.n_items = 7;
  h.n_queries = 7;
  const std::vector<long> thresholds{2, 5, 10};
  const auto buckets = hub_summary(h, thresholds);
  ASSERT_EQ(buckets.size(), 5u);
  EXPECT_EQ(buckets[2].label, "k>=2");
  EXPECT_EQ(buckets[2].count, 0);
  EXPECT_EQ(buckets[1].count, 7);
  EXPECT_DOUBLE_EQ(buckets[1].percentage, 100.0);
}

TEST(HubSummary, MatchesFilterOracle) {
  std::mt19937 rng(54);
  const HubHistogram h = hub_histogram(raw_sim(oracle::random_matrix(rng, 40, 25)));
  const std::vector<long> thresholds{2, 3, 5};
  const auto buckets = hub_summary(h, thresholds);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    long expected = 0;
    for (const auto& [k, count] : h.counts)
      if (k >= thresholds[t]) expected += count;
    EXPECT_EQ(buckets[2 + t].count, expected);
    EXPECT_DOUBLE_EQ(buckets[2 + t].percentage, 100.0 * expected / h.n_items);
  }
}

TEST(HubSummary, EmptyThresholdsRejected) {
  HubHistogram h;
  h.counts = {{1, 1}};
  h.n_items = 1;
  h.n_queries = 1;
  EXPECT_THROW(hub_summary(h, {}), std::invalid_argument);
}

TEST(Hubness, MaximalHubForcesRankOneMisses) {
  // With diagonal ground truth, an item that is NN to m queries is a false
  // NN for at least m-1 of them.
  std::mt19937 rng(55);
  const Matrix s = oracle::random_matrix(rng, 25, 25);
  const SimilarityMatrix sim = raw_sim(s);
  const HubHistogram h = hub_histogram(sim);
  const RankingResult ranking = rank_naive(sim);
  const std::vector<long> ranks = ground_truth_ranks(ranking, PairIndex::diagonal(25));
  long max_count = 0;
  Index hub = 0;
  for (Index j = 0; j < 25; ++j) {
    long count = 0;
    for (Index q = 0; q < 25; ++q)
      if (ranking.ranked_items[static_cast<std::size_t>(q)][0] == j) ++count;
    if (count > max_count) {
      max_count = count;
      hub = j;
    }
  }
  long misses = 0;
  for (Index q = 0; q < 25; ++q)
    if (ranking.ranked_items[static_cast<std::size_t>(q)][0] == hub && ranks[static_cast<std::size_t>(q)] > 1)
      ++misses;
  EXPECT_GE(misses, max_count - 1);
  (void)h;
}

TEST(MatchingRecall, CountsMatchedPositives) {
  Matching m;
  m.edges = {{0, 1}, {1, 0}, {2, 2}};
  const PairIndex pairs({{1}, {1}, {2}, {3}}, 4);  // query 3 unmatched
  EXPECT_DOUBLE_EQ(matching_recall_at_1(m, pairs), 50.0);
}
