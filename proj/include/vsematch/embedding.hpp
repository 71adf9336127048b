#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "vsematch/errors.hpp"

namespace vsematch {

// All internal arithmetic is 64-bit; on-disk storage may be 32-bit (io.hpp).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// A labeled set of fixed-dimension vectors for one modality.
struct EmbeddingSet {
  Matrix data;                   // n x d, one vector per row
  std::vector<std::string> ids;  // n unique labels
  bool normalized = false;       // true iff every row has unit L2 norm

  Index rows() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  // Wraps a matrix, labeling rows with their row numbers.
  static EmbeddingSet from_matrix(Matrix m);
};

enum class Provenance { raw, inverted_softmax, csls };

const char* provenance_name(Provenance p);

// Dense query-by-item score matrix together with how it was produced.
struct SimilarityMatrix {
  Matrix scores;  // nq x ni
  Provenance provenance = Provenance::raw;
  double beta = 0.0;  // temperature, set when provenance == inverted_softmax
  int csls_k = 0;     // neighborhood size, set when provenance == csls

  Index n_queries() const { return scores.rows(); }
  Index n_items() const { return scores.cols(); }
};

// Ground-truth query<->item correspondence. A query may have several correct
// items (five captions per image); the inverse view swaps the two roles.
class PairIndex {
 public:
  // `positives[q]` lists the correct item indices for query q. Lists are
  // stored sorted and deduplicated; indices must lie in [0, n_items).
  PairIndex(std::vector<std::vector<int>> positives, Index n_items);

  // q <-> q pairing for n aligned rows.
  static PairIndex diagonal(Index n);

  Index n_queries() const { return static_cast<Index>(positives_.size()); }
  Index n_items() const { return n_items_; }

  const std::vector<int>& positives(Index query) const { return positives_[static_cast<std::size_t>(query)]; }
  bool has_positives(Index query) const { return !positives(query).empty(); }

  // Item -> queries view. Inverting twice yields the original index.
  PairIndex inverse() const;

  // True when every query has exactly one item and every item one query.
  bool is_bijection() const;

  bool operator==(const PairIndex&) const = default;

 private:
  std::vector<std::vector<int>> positives_;
  Index n_items_ = 0;
};

// Returns a copy of `e` with every row scaled to unit L2 norm.
// Throws ZeroVectorError if any row norm is below 1e-12.
EmbeddingSet normalize(const EmbeddingSet& e);

// scores[q][i] = <query row q, item row i> after normalizing both sides.
// Inputs that are already normalized are used as-is.
SimilarityMatrix cosine_similarity(const EmbeddingSet& queries, const EmbeddingSet& items);

// Indices of the k highest-scoring candidates outside `exclude`, sorted by
// descending score; ties broken by the lower index.
std::vector<int> knn_select(std::span<const double> scores, std::span<const int> exclude, int k);

// All indices ordered by descending score, ties by lower index.
std::vector<int> descending_order(std::span<const double> scores);

}  // namespace vsematch
