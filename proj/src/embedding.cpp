#include "vsematch/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace vsematch {

EmbeddingSet EmbeddingSet::from_matrix(Matrix m) {
  EmbeddingSet out;
  out.ids.reserve(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) out.ids.push_back(std::to_string(r));
  out.data = std::move(m);
  return out;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::raw: return "raw";
    case Provenance::inverted_softmax: return "inverted_softmax";
    case Provenance::csls: return "csls";
  }
  return "?";
}

PairIndex::PairIndex(std::vector<std::vector<int>> positives, Index n_items)
    : positives_(std::move(positives)), n_items_(n_items) {
  if (n_items_ < 0) throw std::invalid_argument("PairIndex: negative item count");
  for (std::size_t q = 0; q < positives_.size(); ++q) {
    auto& items = positives_[q];
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (int i : items) {
      if (i < 0 || i >= n_items_)
        throw std::invalid_argument("PairIndex: item index " + std::to_string(i) +
                                    " out of range for query " + std::to_string(q));
    }
  }
}

PairIndex PairIndex::diagonal(Index n) {
  std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
  for (Index q = 0; q < n; ++q) pos[static_cast<std::size_t>(q)] = {static_cast<int>(q)};
  return PairIndex(std::move(pos), n);
}

PairIndex PairIndex::inverse() const {
  std::vector<std::vector<int>> inv(static_cast<std::size_t>(n_items_));
  for (std::size_t q = 0; q < positives_.size(); ++q)
    for (int i : positives_[q]) inv[static_cast<std::size_t>(i)].push_back(static_cast<int>(q));
  return PairIndex(std::move(inv), n_queries());
}

bool PairIndex::is_bijection() const {
  if (n_queries() != n_items_) return false;
  std::vector<char> seen(static_cast<std::size_t>(n_items_), 0);
  for (const auto& items : positives_) {
    if (items.size() != 1) return false;
    if (seen[static_cast<std::size_t>(items[0])]) return false;
    seen[static_cast<std::size_t>(items[0])] = 1;
  }
  return true;
}

EmbeddingSet normalize(const EmbeddingSet& e) {
  EmbeddingSet out;
  out.data.resize(e.data.rows(), e.data.cols());
  for (Index r = 0; r < e.data.rows(); ++r) {
    const double norm = e.data.row(r).norm();
    if (!std::isfinite(norm))
      throw std::invalid_argument("normalize: row " + std::to_string(r) +
                                  " has non-finite entries");
    if (norm < 1e-12) throw ZeroVectorError(r);
    out.data.row(r) = e.data.row(r) / norm;
  }
  out.ids = e.ids;
  out.normalized = true;
  return out;
}

SimilarityMatrix cosine_similarity(const EmbeddingSet& queries, const EmbeddingSet& items) {
  if (queries.dim() != items.dim())
    throw DimensionMismatchError("cosine_similarity: query dimension " +
                                 std::to_string(queries.dim()) + " != item dimension " +
                                 std::to_string(items.dim()));
  Matrix q_copy, i_copy;
  if (!queries.normalized) q_copy = normalize(queries).data;
  if (!items.normalized) i_copy = normalize(items).data;
  const Matrix& q = queries.normalized ? queries.data : q_copy;
  const Matrix& i = items.normalized ? items.data : i_copy;
  SimilarityMatrix sim;
  sim.scores.noalias() = q * i.transpose();
  sim.provenance = Provenance::raw;
  return sim;
}

std::vector<int> descending_order(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[static_cast<std::size_t>(a)] >
                                              scores[static_cast<std::size_t>(b)]; });
  return order;
}

std::vector<int> knn_select(std::span<const double> scores, std::span<const int> exclude, int k) {
  if (k < 1) throw InsufficientCandidatesError("knn_select: k must be at least 1");
  std::vector<char> excluded(scores.size(), 0);
  for (int e : exclude) {
    if (e >= 0 && static_cast<std::size_t>(e) < scores.size())
      excluded[static_cast<std::size_t>(e)] = 1;
  }
  std::vector<int> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!excluded[i]) candidates.push_back(static_cast<int>(i));
  if (static_cast<int>(candidates.size()) < k)
    throw InsufficientCandidatesError("knn_select: k=" + std::to_string(k) + " but only " +
                                      std::to_string(candidates.size()) +
                                      " candidates remain after exclusion");
  const auto better = [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(), better);
  candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

}  // namespace vsematch
