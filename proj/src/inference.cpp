#include "vsematch/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace vsematch {

namespace {

void require_raw(const SimilarityMatrix& sim, const char* who) {
  if (sim.provenance != Provenance::raw)
    throw NotRawSimilarityError(std::string(who) + " requires raw similarity scores, got " +
                                provenance_name(sim.provenance));
}

std::vector<std::vector<int>> rank_rows(const Matrix& scores) {
  std::vector<std::vector<int>> ranked(static_cast<std::size_t>(scores.rows()));
  const Index ni = scores.cols();
  for (Index q = 0; q < scores.rows(); ++q) {
    const std::span<const double> row(scores.data() + q * ni, static_cast<std::size_t>(ni));
    ranked[static_cast<std::size_t>(q)] = descending_order(row);
  }
  return ranked;
}

// Jonker-Volgenant style shortest-augmenting-path assignment, minimizing.
// Returns the column of each row plus the dual potentials.
struct AssignmentSolution {
  std::vector<int> col_of_row;
  std::vector<int> row_of_col;
  std::vector<double> u, v;
};

AssignmentSolution solve_min_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, -1);  // per column; n is virtual
  for (int i = 0; i < n; ++i) {
    int j0 = n;
    match[static_cast<std::size_t>(j0)] = i;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, n);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != -1);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != n);
  }
  AssignmentSolution sol;
  sol.row_of_col.assign(match.begin(), match.begin() + n);
  sol.col_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) sol.col_of_row[static_cast<std::size_t>(sol.row_of_col[static_cast<std::size_t>(j)])] = j;
  sol.u = std::move(u);
  v.resize(static_cast<std::size_t>(n));
  sol.v = std::move(v);
  return sol;
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::naive: return "naive";
    case Strategy::inverted_softmax: return "inverted_softmax";
    case Strategy::csls: return "csls";
    case Strategy::hungarian: return "hungarian";
  }
  return "?";
}

RankingResult rank_naive(const SimilarityMatrix& sim) {
  require_raw(sim, "rank_naive");
  RankingResult out;
  out.adjusted = sim;
  out.ranked_items = rank_rows(sim.scores);
  return out;
}

RankingResult rank_inverted_softmax(const SimilarityMatrix& sim, const InferenceConfig& cfg) {
  require_raw(sim, "rank_inverted_softmax");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("inverted softmax: beta must be positive");
  const Index nq = sim.n_queries();
  const Index ni = sim.n_items();
  if (nq < 2)
    throw TooFewQueriesError(
        "inverted softmax needs at least 2 queries (the denominator excludes the query itself)");
  Matrix adj(nq, ni);
  std::vector<double> ex(static_cast<std::size_t>(nq));
  for (Index j = 0; j < ni; ++j) {
    double col_max = -std::numeric_limits<double>::infinity();
    for (Index q = 0; q < nq; ++q) col_max = std::max(col_max, sim.scores(q, j));
    double total = 0.0;
    for (Index q = 0; q < nq; ++q) {
      ex[static_cast<std::size_t>(q)] = std::exp(cfg.beta * (sim.scores(q, j) - col_max));
      total += ex[static_cast<std::size_t>(q)];
    }
    for (Index q = 0; q < nq; ++q)
      adj(q, j) = ex[static_cast<std::size_t>(q)] / (total - ex[static_cast<std::size_t>(q)]);
  }
  RankingResult out;
  out.adjusted.scores = std::move(adj);
  out.adjusted.provenance = Provenance::inverted_softmax;
  out.adjusted.beta = cfg.beta;
  out.ranked_items = rank_rows(out.adjusted.scores);
  return out;
}

RankingResult rank_csls(const SimilarityMatrix& sim, const InferenceConfig& cfg) {
  require_raw(sim, "rank_csls");
  const Index nq = sim.n_queries();
  const Index ni = sim.n_items();
  const int k = cfg.csls_k;
  if (k < 1) throw std::invalid_argument("csls: k must be at least 1");
  if (k > std::min(nq, ni))
    throw InsufficientCandidatesError("csls: k=" + std::to_string(k) +
                                      " exceeds min(n_queries, n_items)=" +
                                      std::to_string(std::min(nq, ni)));
  // Mean similarity of each query to its k nearest items, and of each item
  // to its k nearest queries. No exclusions, ground truth included.
  std::vector<double> row_avg(static_cast<std::size_t>(nq), 0.0);
  std::vector<double> col_avg(static_cast<std::size_t>(ni), 0.0);
  for (Index q = 0; q < nq; ++q) {
    const std::span<const double> row(sim.scores.data() + q * ni, static_cast<std::size_t>(ni));
    double sum = 0.0;
    for (int j : knn_select(row, {}, k)) sum += row[static_cast<std::size_t>(j)];
    row_avg[static_cast<std::size_t>(q)] = sum / k;
  }
  std::vector<double> column(static_cast<std::size_t>(nq));
  for (Index j = 0; j < ni; ++j) {
    for (Index q = 0; q < nq; ++q) column[static_cast<std::size_t>(q)] = sim.scores(q, j);
    double sum = 0.0;
    for (int q : knn_select(column, {}, k)) sum += column[static_cast<std::size_t>(q)];
    col_avg[static_cast<std::size_t>(j)] = sum / k;
  }
  Matrix adj(nq, ni);
  for (Index q = 0; q < nq; ++q)
    for (Index j = 0; j < ni; ++j)
      adj(q, j) = 2.0 * sim.scores(q, j) - col_avg[static_cast<std::size_t>(j)] -
                  row_avg[static_cast<std::size_t>(q)];
  RankingResult out;
  out.adjusted.scores = std::move(adj);
  out.adjusted.provenance = Provenance::csls;
  out.adjusted.csls_k = k;
  out.ranked_items = rank_rows(out.adjusted.scores);
  return out;
}

RankingResult rank_with(const SimilarityMatrix& sim, const InferenceConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::naive: return rank_naive(sim);
    case Strategy::inverted_softmax: return rank_inverted_softmax(sim, cfg);
    case Strategy::csls: return rank_csls(sim, cfg);
    case Strategy::hungarian:
      throw std::invalid_argument("hungarian produces a matching, not a ranking");
  }
  throw std::invalid_argument("unknown strategy");
}

Matching match_hungarian(const SimilarityMatrix& sim) {
  require_raw(sim, "match_hungarian");
  const int nq = static_cast<int>(sim.n_queries());
  const int ni = static_cast<int>(sim.n_items());
  if (nq == 0 || ni == 0) throw std::invalid_argument("match_hungarian: empty similarity matrix");
  const int n = std::max(nq, ni);

  // Minimize negated weights; dummy rows/columns carry weight 0 so the real
  // part of any optimal padded assignment is itself optimal.
  Matrix cost = Matrix::Zero(n, n);
  cost.topLeftCorner(nq, ni) = -sim.scores;
  AssignmentSolution sol = solve_min_assignment(cost);

  // Among equal-weight optima, prefer the lexicographically smallest edge
  // list by query index. Complementary slackness: every optimal assignment
  // uses only edges of zero reduced cost, so swaps are searched in the
  // tight-edge graph.
  double scale = 1.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(cost(r, c)));
  const double tol = 1e-12 * scale;
  const auto tight = [&](int r, int c) {
    return std::abs(cost(r, c) - sol.u[static_cast<std::size_t>(r)] -
                    sol.v[static_cast<std::size_t>(c)]) <= tol;
  };

  std::vector<char> col_pinned(static_cast<std::size_t>(n), 0);
  std::vector<char> col_visited(static_cast<std::size_t>(n), 0);

  // Kuhn augmentation restricted to tight, unpinned edges.
  std::function<bool(int)> place = [&](int row) -> bool {
    for (int c = 0; c < n; ++c) {
      if (col_visited[static_cast<std::size_t>(c)] || col_pinned[static_cast<std::size_t>(c)])
        continue;
      if (!tight(row, c)) continue;
      col_visited[static_cast<std::size_t>(c)] = 1;
      const int occupant = sol.row_of_col[static_cast<std::size_t>(c)];
      if (occupant == -1 || place(occupant)) {
        sol.row_of_col[static_cast<std::size_t>(c)] = row;
        sol.col_of_row[static_cast<std::size_t>(row)] = c;
        return true;
      }
    }
    return false;
  };

  for (int q = 0; q < nq; ++q) {
    const int cur = sol.col_of_row[static_cast<std::size_t>(q)];
    for (int cand = 0; cand < ni; ++cand) {
      if (cand == cur) break;  // already the smallest reachable column
      if (col_pinned[static_cast<std::size_t>(cand)] || !tight(q, cand)) continue;
      // Tentatively hand `cand` to q and re-place the displaced row; q's old
      // column is the single free one the augmenting path may end at.
      auto saved_cols = sol.col_of_row;
      auto saved_rows = sol.row_of_col;
      const int displaced = sol.row_of_col[static_cast<std::size_t>(cand)];
      sol.row_of_col[static_cast<std::size_t>(cur)] = -1;
      sol.col_of_row[static_cast<std::size_t>(q)] = cand;
      sol.row_of_col[static_cast<std::size_t>(cand)] = q;
      col_pinned[static_cast<std::size_t>(cand)] = 1;
      std::fill(col_visited.begin(), col_visited.end(), 0);
      if (place(displaced)) break;
      col_pinned[static_cast<std::size_t>(cand)] = 0;
      sol.col_of_row = std::move(saved_cols);
      sol.row_of_col = std::move(saved_rows);
    }
    col_pinned[static_cast<std::size_t>(sol.col_of_row[static_cast<std::size_t>(q)])] = 1;
  }

  Matching m;
  for (int q = 0; q < nq; ++q) {
    const int c = sol.col_of_row[static_cast<std::size_t>(q)];
    if (c < ni) {
      m.edges.emplace_back(q, c);
      m.total_weight += sim.scores(q, c);
    }
  }
  return m;
}

}  // namespace vsematch
