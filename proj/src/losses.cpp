#include "vsematch/losses.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace vsematch {

namespace {

struct BatchPairing {
  std::vector<int> item_of_query;
  std::vector<int> query_of_item;
};

BatchPairing bijection_of(const PairIndex& pairs, Index nq, Index ni) {
  if (pairs.n_queries() != nq || pairs.n_items() != ni)
    throw std::invalid_argument("loss: pair index shape does not match the batch");
  if (!pairs.is_bijection())
    throw std::invalid_argument(
        "loss: the batch pairing must be a bijection (one positive per row)");
  BatchPairing bp;
  bp.item_of_query.resize(static_cast<std::size_t>(nq));
  bp.query_of_item.resize(static_cast<std::size_t>(ni));
  for (Index q = 0; q < nq; ++q) {
    const int item = pairs.positives(q)[0];
    bp.item_of_query[static_cast<std::size_t>(q)] = item;
    bp.query_of_item[static_cast<std::size_t>(item)] = static_cast<int>(q);
  }
  return bp;
}

void validate_config(const LossConfig& cfg) {
  if (!(cfg.margin_alpha > 0.0))
    throw std::invalid_argument("loss: margin_alpha must be positive");
  if (cfg.kind == LossKind::knn_margin && cfg.knn_k < 1)
    throw std::invalid_argument("loss: knn_k must be at least 1");
}

// Adds one hinge term for anchor row q against negative item j.
inline void add_row_term(const Matrix& s, int q, int pos, int j, double alpha, ScoreLoss& out) {
  const double h = alpha - s(q, pos) + s(q, j);
  if (h > 0.0) {
    out.value += h;
    ++out.active_triplets;
    out.grad_scores(q, j) += 1.0;
    out.grad_scores(q, pos) -= 1.0;
  }
}

// Adds one hinge term for anchor column j against negative query q.
inline void add_col_term(const Matrix& s, int j, int pos_q, int q, double alpha, ScoreLoss& out) {
  const double h = alpha - s(pos_q, j) + s(q, j);
  if (h > 0.0) {
    out.value += h;
    ++out.active_triplets;
    out.grad_scores(q, j) += 1.0;
    out.grad_scores(pos_q, j) -= 1.0;
  }
}

void accumulate_sum_margin(const Matrix& s, const BatchPairing& bp, double alpha, ScoreLoss& out) {
  const int nq = static_cast<int>(s.rows());
  const int ni = static_cast<int>(s.cols());
  for (int q = 0; q < nq; ++q) {
    const int pos = bp.item_of_query[static_cast<std::size_t>(q)];
    for (int j = 0; j < ni; ++j)
      if (j != pos) add_row_term(s, q, pos, j, alpha, out);
  }
  for (int j = 0; j < ni; ++j) {
    const int pos_q = bp.query_of_item[static_cast<std::size_t>(j)];
    for (int q = 0; q < nq; ++q)
      if (q != pos_q) add_col_term(s, j, pos_q, q, alpha, out);
  }
}

void accumulate_max_margin(const Matrix& s, const BatchPairing& bp, double alpha, ScoreLoss& out) {
  const int nq = static_cast<int>(s.rows());
  const int ni = static_cast<int>(s.cols());
  for (int q = 0; q < nq; ++q) {
    const int pos = bp.item_of_query[static_cast<std::size_t>(q)];
    int hardest = -1;
    for (int j = 0; j < ni; ++j)
      if (j != pos && (hardest < 0 || s(q, j) > s(q, hardest))) hardest = j;
    if (hardest >= 0) add_row_term(s, q, pos, hardest, alpha, out);
  }
  for (int j = 0; j < ni; ++j) {
    const int pos_q = bp.query_of_item[static_cast<std::size_t>(j)];
    int hardest = -1;
    for (int q = 0; q < nq; ++q)
      if (q != pos_q && (hardest < 0 || s(q, j) > s(hardest, j))) hardest = q;
    if (hardest >= 0) add_col_term(s, j, pos_q, hardest, alpha, out);
  }
}

void accumulate_knn_margin(const Matrix& s, const BatchPairing& bp, double alpha, int k,
                           ScoreLoss& out) {
  const int nq = static_cast<int>(s.rows());
  const int ni = static_cast<int>(s.cols());
  std::vector<double> column(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    const int pos = bp.item_of_query[static_cast<std::size_t>(q)];
    const std::span<const double> row(s.data() + static_cast<std::ptrdiff_t>(q) * ni,
                                      static_cast<std::size_t>(ni));
    for (int j : knn_select(row, std::span<const int>(&pos, 1), k))
      add_row_term(s, q, pos, j, alpha, out);
  }
  for (int j = 0; j < ni; ++j) {
    const int pos_q = bp.query_of_item[static_cast<std::size_t>(j)];
    for (int q = 0; q < nq; ++q) column[static_cast<std::size_t>(q)] = s(q, j);
    for (int q : knn_select(column, std::span<const int>(&pos_q, 1), k))
      add_col_term(s, j, pos_q, q, alpha, out);
  }
}

// d(loss)/d(raw row) given d(loss)/d(unit row), for x_hat = x / |x|.
Matrix through_normalization(const Matrix& raw, const Matrix& unit, const Matrix& grad_unit) {
  Matrix out(raw.rows(), raw.cols());
  for (Index r = 0; r < raw.rows(); ++r) {
    const double norm = raw.row(r).norm();
    const double along = grad_unit.row(r).dot(unit.row(r));
    out.row(r) = (grad_unit.row(r) - along * unit.row(r)) / norm;
  }
  return out;
}

}  // namespace

ScoreLoss margin_loss_on_scores(const SimilarityMatrix& sim, const PairIndex& pairs,
                                const LossConfig& cfg) {
  if (sim.provenance != Provenance::raw)
    throw NotRawSimilarityError(std::string("loss requires raw similarity scores, got ") +
                                provenance_name(sim.provenance));
  validate_config(cfg);
  const BatchPairing bp = bijection_of(pairs, sim.n_queries(), sim.n_items());

  ScoreLoss out;
  out.grad_scores = Matrix::Zero(sim.n_queries(), sim.n_items());
  switch (cfg.kind) {
    case LossKind::sum_margin:
      accumulate_sum_margin(sim.scores, bp, cfg.margin_alpha, out);
      break;
    case LossKind::max_margin:
      accumulate_max_margin(sim.scores, bp, cfg.margin_alpha, out);
      break;
    case LossKind::knn_margin:
      accumulate_knn_margin(sim.scores, bp, cfg.margin_alpha, cfg.knn_k, out);
      break;
  }
  return out;
}

LossReport triplet_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                        const PairIndex& pairs, const LossConfig& cfg) {
  if (queries.dim() != items.dim())
    throw DimensionMismatchError("loss: query dimension " + std::to_string(queries.dim()) +
                                 " != item dimension " + std::to_string(items.dim()));
  const EmbeddingSet qn = normalize(queries);
  const EmbeddingSet in = normalize(items);
  SimilarityMatrix sim;
  sim.scores.noalias() = qn.data * in.data.transpose();
  sim.provenance = Provenance::raw;

  const ScoreLoss sl = margin_loss_on_scores(sim, pairs, cfg);

  LossReport report;
  report.value = sl.value;
  report.active_triplets = sl.active_triplets;
  Matrix grad_qn = sl.grad_scores * in.data;
  Matrix grad_in = sl.grad_scores.transpose() * qn.data;
  report.grad_queries = through_normalization(queries.data, qn.data, grad_qn);
  report.grad_items = through_normalization(items.data, in.data, grad_in);
  return report;
}

LossReport sum_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg) {
  LossConfig c = cfg;
  c.kind = LossKind::sum_margin;
  return triplet_loss(queries, items, pairs, c);
}

LossReport max_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg) {
  LossConfig c = cfg;
  c.kind = LossKind::max_margin;
  return triplet_loss(queries, items, pairs, c);
}

LossReport knn_margin_loss(const EmbeddingSet& queries, const EmbeddingSet& items,
                           const PairIndex& pairs, const LossConfig& cfg) {
  LossConfig c = cfg;
  c.kind = LossKind::knn_margin;
  return triplet_loss(queries, items, pairs, c);
}

}  // namespace vsematch
