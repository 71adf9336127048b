#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vsematch/embedding.hpp"
#include "vsematch/losses.hpp"
#include "vsematch/metrics.hpp"

namespace vsematch {

// Linear stand-in for the paper-scale encoders: y = x W + b.
struct ToyEncoder {
  Matrix weight;             // d_in x d_out
  Eigen::RowVectorXd bias;   // d_out

  Index input_dim() const { return weight.rows(); }
  Index output_dim() const { return weight.cols(); }
};

Matrix encode(const ToyEncoder& enc, const Matrix& inputs);
EmbeddingSet encode_set(const ToyEncoder& enc, const EmbeddingSet& inputs);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 128;
  double lr = 1e-3;
  int lr_decay_every = 10;      // epochs between decays
  double lr_decay_factor = 10.0;
  std::uint64_t seed = 0;
  int joint_dim = 16;           // shared embedding dimension d
  LossConfig loss;
};

// lr / factor^floor(epoch / every), epochs 0-indexed.
double effective_lr(const TrainConfig& cfg, int epoch);

struct SyntheticSpec {
  int n_classes = 10;
  int samples_per_class = 20;
  int d_raw_query = 32;
  int d_raw_item = 32;
  double noise_sigma = 0.0;
  double hub_fraction = 0.0;   // fraction of items pulled toward a shared bias
  double hub_strength = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  EmbeddingSet queries;
  EmbeddingSet items;
  PairIndex pairs;  // class-level positives (see generate_synthetic)
};

// Draws one latent unit direction per class and emits paired noisy copies of
// it on both sides. With hub_fraction > 0 a shared bias vector scaled by
// hub_strength is added to that fraction of items, deliberately creating
// hubs. The returned PairIndex marks every same-class item as a positive;
// same-class samples are interchangeable by construction. Deterministic
// given the seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

struct TrainResult {
  ToyEncoder query_encoder;
  ToyEncoder item_encoder;
  std::vector<double> history;  // full-pass loss after each epoch
};

// Mini-batch training of both encoders with Adam (0.9, 0.999, 1e-8).
// Batches pair index-aligned rows; shuffling is deterministic from the seed.
// history[e] is the loss of the end-of-epoch model over canonical
// (unshuffled) batches, as a raw sum per the loss contract.
TrainResult train(const EmbeddingSet& queries, const EmbeddingSet& items,
                  const TrainConfig& cfg);

// Index of the candidate with the highest R@1+R@5+R@10 summed over both
// directions; ties go to the lower index.
std::size_t model_select(
    const std::vector<std::pair<RetrievalReport, RetrievalReport>>& candidates);

}  // namespace vsematch
