#include "vsematch/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <span>

namespace vsematch {

namespace {

// Seeded draws with an explicit mapping from engine output to doubles, so
// generated datasets and training runs are reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, one cached spare
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  void shuffle(std::vector<int>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Eigen::RowVectorXd normal_row(Rng& rng, Index d, double scale) {
  Eigen::RowVectorXd row(d);
  for (Index c = 0; c < d; ++c) row(c) = scale * rng.normal();
  return row;
}

ToyEncoder init_encoder(Rng& rng, Index d_in, Index d_out) {
  ToyEncoder enc;
  enc.weight.resize(d_in, d_out);
  const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));  // Xavier
  for (Index r = 0; r < d_in; ++r)
    for (Index c = 0; c < d_out; ++c) enc.weight(r, c) = bound * (2.0 * rng.uniform() - 1.0);
  enc.bias = Eigen::RowVectorXd::Zero(d_out);
  return enc;
}

struct AdamState {
  Matrix m_w, v_w;
  Eigen::RowVectorXd m_b, v_b;

  explicit AdamState(const ToyEncoder& enc)
      : m_w(Matrix::Zero(enc.weight.rows(), enc.weight.cols())),
        v_w(Matrix::Zero(enc.weight.rows(), enc.weight.cols())),
        m_b(Eigen::RowVectorXd::Zero(enc.bias.cols())),
        v_b(Eigen::RowVectorXd::Zero(enc.bias.cols())) {}
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Param, typename Grad, typename Mom>
void adam_update(Param& p, const Grad& g, Mom& m, Mom& v, long t, double lr) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
  const double m_corr = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double v_corr = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  p -= (lr / m_corr) * (m.array() / ((v.array() / v_corr).sqrt() + kAdamEps)).matrix();
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidSpecError("train: epochs must be at least 1");
  if (cfg.batch_size < 2) throw InvalidSpecError("train: batch_size must be at least 2");
  if (cfg.lr < 0.0) throw InvalidSpecError("train: lr must be nonnegative");
  if (cfg.lr_decay_every < 1) throw InvalidSpecError("train: lr_decay_every must be at least 1");
  if (!(cfg.lr_decay_factor > 0.0)) throw InvalidSpecError("train: lr_decay_factor must be positive");
  if (cfg.joint_dim < 1) throw InvalidSpecError("train: joint_dim must be at least 1");
}

Matrix gather_rows(const Matrix& src, std::span<const int> rows) {
  Matrix out(static_cast<Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = src.row(rows[r]);
  return out;
}

// Loss over one index-aligned batch; k is clamped so small tail batches
// stay evaluable under the kNN loss.
LossReport batch_loss(const Matrix& xq, const Matrix& xi, const ToyEncoder& qe,
                      const ToyEncoder& ie, const LossConfig& loss) {
  const Index b = xq.rows();
  LossConfig cfg = loss;
  if (cfg.kind == LossKind::knn_margin)
    cfg.knn_k = std::min<int>(cfg.knn_k, static_cast<int>(b) - 1);
  Matrix yq = encode(qe, xq);
  Matrix yi = encode(ie, xi);
  if (!yq.allFinite() || !yi.allFinite())
    throw DivergedLossError("encoder outputs are no longer finite");
  return triplet_loss(EmbeddingSet::from_matrix(std::move(yq)),
                      EmbeddingSet::from_matrix(std::move(yi)), PairIndex::diagonal(b), cfg);
}

}  // namespace

Matrix encode(const ToyEncoder& enc, const Matrix& inputs) {
  if (inputs.cols() != enc.weight.rows())
    throw DimensionMismatchError("encode: input dimension " + std::to_string(inputs.cols()) +
                                 " != encoder input dimension " + std::to_string(enc.weight.rows()));
  Matrix out = inputs * enc.weight;
  out.rowwise() += enc.bias;
  return out;
}

EmbeddingSet encode_set(const ToyEncoder& enc, const EmbeddingSet& inputs) {
  EmbeddingSet out;
  out.data = encode(enc, inputs.data);
  out.ids = inputs.ids;
  out.normalized = false;
  return out;
}

double effective_lr(const TrainConfig& cfg, int epoch) {
  return cfg.lr / std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw InvalidSpecError("synthetic: n_classes must be at least 2");
  if (spec.samples_per_class < 1)
    throw InvalidSpecError("synthetic: samples_per_class must be at least 1");
  if (spec.d_raw_query < 1 || spec.d_raw_item < 1)
    throw InvalidSpecError("synthetic: dimensions must be at least 1");
  if (spec.noise_sigma < 0.0) throw InvalidSpecError("synthetic: noise_sigma must be nonnegative");
  if (spec.hub_fraction < 0.0 || spec.hub_fraction > 1.0)
    throw InvalidSpecError("synthetic: hub_fraction must lie in [0, 1]");
  if (spec.hub_strength < 0.0) throw InvalidSpecError("synthetic: hub_strength must be nonnegative");

  Rng rng(spec.seed);
  const Index n = static_cast<Index>(spec.n_classes) * spec.samples_per_class;
  const Index d_lat = std::min(spec.d_raw_query, spec.d_raw_item);

  // Class latents live in a cone around a common center direction, the way
  // trained encoders concentrate their embeddings; the cone center is the
  // dense area where hubs can form.
  Eigen::RowVectorXd center;
  do {
    center = normal_row(rng, d_lat, 1.0);
  } while (center.norm() < 1e-9);
  center /= center.norm();
  Matrix latents(spec.n_classes, d_lat);
  for (Index c = 0; c < spec.n_classes; ++c) {
    Eigen::RowVectorXd latent;
    do {
      latent = center + normal_row(rng, d_lat, 0.75 / std::sqrt(static_cast<double>(d_lat)));
    } while (latent.norm() < 1e-9);
    latents.row(c) = latent / latent.norm();
  }

  Matrix queries = Matrix::Zero(n, spec.d_raw_query);
  Matrix items = Matrix::Zero(n, spec.d_raw_item);
  for (Index row = 0; row < n; ++row) {
    const Index cls = row / spec.samples_per_class;
    queries.row(row).head(d_lat) = latents.row(cls);
    queries.row(row) += normal_row(rng, spec.d_raw_query, spec.noise_sigma);
    items.row(row).head(d_lat) = latents.row(cls);
    items.row(row) += normal_row(rng, spec.d_raw_item, spec.noise_sigma);
  }

  // Pull a fixed fraction of items toward the cone center, parking them in
  // the dense area every query leans toward.
  const Eigen::RowVectorXd& bias = center;
  const Index n_hubs = static_cast<Index>(std::llround(spec.hub_fraction * static_cast<double>(n)));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  for (Index h = 0; h < n_hubs; ++h)
    items.row(order[static_cast<std::size_t>(h)]).head(d_lat) += spec.hub_strength * bias;

  // Every same-class item counts as correct: class members are exchangeable
  // noisy copies of one latent.
  std::vector<std::vector<int>> positives(static_cast<std::size_t>(n));
  for (Index q = 0; q < n; ++q) {
    const Index cls = q / spec.samples_per_class;
    auto& pos = positives[static_cast<std::size_t>(q)];
    for (int j = static_cast<int>(cls) * spec.samples_per_class;
         j < static_cast<int>(cls + 1) * spec.samples_per_class; ++j)
      pos.push_back(j);
  }

  SyntheticData data{EmbeddingSet::from_matrix(std::move(queries)),
                     EmbeddingSet::from_matrix(std::move(items)),
                     PairIndex(std::move(positives), n)};
  return data;
}

TrainResult train(const EmbeddingSet& queries, const EmbeddingSet& items, const TrainConfig& cfg) {
  validate(cfg);
  const Index n = queries.rows();
  if (items.rows() != n)
    throw DimensionMismatchError("train: query and item sets must pair row for row");
  if (n < cfg.batch_size)
    throw InvalidSpecError("train: need at least batch_size (" + std::to_string(cfg.batch_size) +
                           ") pairs, got " + std::to_string(n));

  Rng rng(cfg.seed);
  TrainResult result;
  result.query_encoder = init_encoder(rng, queries.dim(), cfg.joint_dim);
  result.item_encoder = init_encoder(rng, items.dim(), cfg.joint_dim);
  AdamState state_q(result.query_encoder);
  AdamState state_i(result.item_encoder);
  long step = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const auto batch_starts = [&](std::vector<std::pair<int, int>>& spans) {
    spans.clear();
    for (Index start = 0; start + 2 <= n; start += cfg.batch_size) {
      const Index size = std::min<Index>(cfg.batch_size, n - start);
      if (size < 2) break;  // a lone pair has no negatives
      spans.emplace_back(static_cast<int>(start), static_cast<int>(size));
    }
  };
  std::vector<std::pair<int, int>> spans;
  batch_starts(spans);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = effective_lr(cfg, epoch);
    rng.shuffle(order);
    for (const auto& [start, size] : spans) {
      const std::span<const int> rows(order.data() + start, static_cast<std::size_t>(size));
      const Matrix xq = gather_rows(queries.data, rows);
      const Matrix xi = gather_rows(items.data, rows);
      const LossReport rep = batch_loss(xq, xi, result.query_encoder, result.item_encoder, cfg.loss);
      if (!std::isfinite(rep.value)) throw DivergedLossError("loss diverged during training");
      const double inv_b = 1.0 / static_cast<double>(size);
      const Matrix gw_q = xq.transpose() * rep.grad_queries * inv_b;
      const Eigen::RowVectorXd gb_q = rep.grad_queries.colwise().sum() * inv_b;
      const Matrix gw_i = xi.transpose() * rep.grad_items * inv_b;
      const Eigen::RowVectorXd gb_i = rep.grad_items.colwise().sum() * inv_b;
      ++step;
      adam_update(result.query_encoder.weight, gw_q, state_q.m_w, state_q.v_w, step, lr);
      adam_update(result.query_encoder.bias, gb_q, state_q.m_b, state_q.v_b, step, lr);
      adam_update(result.item_encoder.weight, gw_i, state_i.m_w, state_i.v_w, step, lr);
      adam_update(result.item_encoder.bias, gb_i, state_i.m_b, state_i.v_b, step, lr);
    }

    // End-of-epoch loss over canonical (unshuffled) batches; independent of
    // the shuffle so equal models always report equal history entries.
    double epoch_loss = 0.0;
    for (const auto& [start, size] : spans) {
      const Matrix xq = queries.data.middleRows(start, size);
      const Matrix xi = items.data.middleRows(start, size);
      epoch_loss += batch_loss(xq, xi, result.query_encoder, result.item_encoder, cfg.loss).value;
    }
    if (!std::isfinite(epoch_loss)) throw DivergedLossError("loss diverged during training");
    result.history.push_back(epoch_loss);
  }
  return result;
}

std::size_t model_select(
    const std::vector<std::pair<RetrievalReport, RetrievalReport>>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("model_select: no candidates");
  std::size_t best = 0;
  double best_sum = candidates[0].first.r_sum() + candidates[0].second.r_sum();
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double sum = candidates[i].first.r_sum() + candidates[i].second.r_sum();
    if (sum > best_sum) {
      best = i;
      best_sum = sum;
    }
  }
  return best;
}

}  // namespace vsematch
