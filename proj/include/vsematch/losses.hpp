#pragma once

#include "vsematch/embedding.hpp"

namespace vsematch {

enum class LossKind { sum_margin, max_margin, knn_margin };

struct LossConfig {
  LossKind kind = LossKind::sum_margin;
  double margin_alpha = 0.2;
  int knn_k = 3;  // read only by knn_margin
};

// Loss value and subgradient with respect to the similarity entries.
struct ScoreLoss {
  double value = 0.0;
  Matrix grad_scores;  // nq x ni
  long active_triplets = 0;
};

// Loss value and exact subgradients with respect to the raw
// (pre-normalization) embedding rows of both batches.
struct LossReport {
  double value = 0.0;
  Matrix grad_queries;
  Matrix grad_items;
  long active_triplets = 0;
};

// Bidirectional triplet ranking loss over one mini-batch score matrix.
// `sim` must be raw cosine similarity and `pairs` a bijection on the batch.
// The hinge subgradient at exactly zero is taken as zero, so zero loss
// implies a zero gradient matrix.
ScoreLoss margin_loss_on_scores(const SimilarityMatrix& sim, const PairIndex& pairs,
                                const LossConfig& cfg);

// Same loss evaluated from raw embedding batches: builds the cosine matrix
// internally and chains the subgradient through L2 normalization back to the
// given rows. Values are batch sums, not means.
LossReport triplet_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                        const PairIndex& pairs, const LossConfig& cfg);

// Per-kind wrappers; cfg.kind is overridden accordingly.
LossReport sum_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg);
LossReport max_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg);
LossReport knn_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg);

}  // namespace vsematch
