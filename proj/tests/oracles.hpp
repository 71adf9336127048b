// Independent reference implementations used by the tests. Everything here
// is written from the definitions, without reusing the library's code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "vsematch/embedding.hpp"

namespace oracle {

using vsematch::Index;
using vsematch::Matrix;

// Plain double-loop cosine of row-normalized inputs.
inline Matrix cosine(const Matrix& queries, const Matrix& items) {
  Matrix out(queries.rows(), items.rows());
  for (Index q = 0; q < queries.rows(); ++q) {
    const double qn = std::sqrt(queries.row(q).squaredNorm());
    for (Index i = 0; i < items.rows(); ++i) {
      const double in = std::sqrt(items.row(i).squaredNorm());
      double dot = 0.0;
      for (Index d = 0; d < queries.cols(); ++d) dot += queries(q, d) * items(i, d);
      out(q, i) = dot / (qn * in);
    }
  }
  return out;
}

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

// Eq.-style double sum over all negatives, diagonal pairing.
inline double sum_margin(const Matrix& s, double alpha) {
  const Index b = s.rows();
  double v = 0.0;
  for (Index q = 0; q < b; ++q)
    for (Index j = 0; j < b; ++j)
      if (j != q) v += hinge(alpha - s(q, q) + s(q, j));
  for (Index j = 0; j < b; ++j)
    for (Index q = 0; q < b; ++q)
      if (q != j) v += hinge(alpha - s(j, j) + s(q, j));
  return v;
}

// Per-anchor max over the enumerated hinge terms.
inline double max_margin(const Matrix& s, double alpha) {
  const Index b = s.rows();
  double v = 0.0;
  for (Index q = 0; q < b; ++q) {
    double worst = 0.0;
    for (Index j = 0; j < b; ++j)
      if (j != q) worst = std::max(worst, hinge(alpha - s(q, q) + s(q, j)));
    v += worst;
  }
  for (Index j = 0; j < b; ++j) {
    double worst = 0.0;
    for (Index q = 0; q < b; ++q)
      if (q != j) worst = std::max(worst, hinge(alpha - s(j, j) + s(q, j)));
    v += worst;
  }
  return v;
}

// Sorts each anchor's negatives by similarity and sums the top-k hinges.
inline double knn_margin(const Matrix& s, double alpha, int k) {
  const Index b = s.rows();
  double v = 0.0;
  const auto side = [&](bool row_side) {
    for (Index a = 0; a < b; ++a) {
      std::vector<double> negs;
      for (Index o = 0; o < b; ++o)
        if (o != a) negs.push_back(row_side ? s(a, o) : s(o, a));
      std::sort(negs.begin(), negs.end(), std::greater<>());
      for (int t = 0; t < k; ++t) v += hinge(alpha - s(a, a) + negs[static_cast<std::size_t>(t)]);
    }
  };
  side(true);
  side(false);
  return v;
}

// Eq. 5 with long-double arithmetic and no max-shift.
inline Matrix inverted_softmax(const Matrix& s, double beta) {
  const Index nq = s.rows(), ni = s.cols();
  Matrix out(nq, ni);
  for (Index j = 0; j < ni; ++j) {
    for (Index q = 0; q < nq; ++q) {
      long double denom = 0.0L;
      for (Index o = 0; o < nq; ++o)
        if (o != q) denom += std::exp(static_cast<long double>(beta) * s(o, j));
      out(q, j) = static_cast<double>(std::exp(static_cast<long double>(beta) * s(q, j)) / denom);
    }
  }
  return out;
}

// Eq. 6 via full sorts of each row and column.
inline Matrix csls(const Matrix& s, int k) {
  const Index nq = s.rows(), ni = s.cols();
  std::vector<double> row_mean(static_cast<std::size_t>(nq));
  std::vector<double> col_mean(static_cast<std::size_t>(ni));
  for (Index q = 0; q < nq; ++q) {
    std::vector<double> vals(static_cast<std::size_t>(ni));
    for (Index j = 0; j < ni; ++j) vals[static_cast<std::size_t>(j)] = s(q, j);
    std::sort(vals.begin(), vals.end(), std::greater<>());
    row_mean[static_cast<std::size_t>(q)] =
        std::accumulate(vals.begin(), vals.begin() + k, 0.0) / k;
  }
  for (Index j = 0; j < ni; ++j) {
    std::vector<double> vals(static_cast<std::size_t>(nq));
    for (Index q = 0; q < nq; ++q) vals[static_cast<std::size_t>(q)] = s(q, j);
    std::sort(vals.begin(), vals.end(), std::greater<>());
    col_mean[static_cast<std::size_t>(j)] =
        std::accumulate(vals.begin(), vals.begin() + k, 0.0) / k;
  }
  Matrix out(nq, ni);
  for (Index q = 0; q < nq; ++q)
    for (Index j = 0; j < ni; ++j)
      out(q, j) = 2.0 * s(q, j) - col_mean[static_cast<std::size_t>(j)] -
                  row_mean[static_cast<std::size_t>(q)];
  return out;
}

// Maximum assignment weight over all permutations (square matrices only).
inline double best_permutation_weight(const Matrix& w) {
  const Index n = w.rows();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index q = 0; q < n; ++q) total += w(q, perm[static_cast<std::size_t>(q)]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Row-by-row greedy assignment: each query takes the best unused item.
inline double greedy_assignment_weight(const Matrix& w) {
  const Index nq = w.rows(), ni = w.cols();
  std::vector<char> used(static_cast<std::size_t>(ni), 0);
  double total = 0.0;
  for (Index q = 0; q < std::min(nq, ni); ++q) {
    Index best = -1;
    for (Index j = 0; j < ni; ++j)
      if (!used[static_cast<std::size_t>(j)] && (best < 0 || w(q, j) > w(q, best))) best = j;
    used[static_cast<std::size_t>(best)] = 1;
    total += w(q, best);
  }
  return total;
}

inline Matrix random_matrix(std::mt19937& rng, Index rows, Index cols, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline Matrix random_normal_matrix(std::mt19937& rng, Index rows, Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// A raw embedding batch is degenerate for gradient checks when any hinge
// term sits within `tol` of its kink or any two negatives are within `tol`
// of a selection tie.
inline bool degenerate_batch(const Matrix& q_raw, const Matrix& i_raw, double alpha, double tol) {
  const Matrix s = cosine(q_raw, i_raw);
  const Index b = s.rows();
  const auto side = [&](bool row_side) {
    for (Index a = 0; a < b; ++a) {
      std::vector<double> negs;
      for (Index o = 0; o < b; ++o) {
        if (o == a) continue;
        const double sn = row_side ? s(a, o) : s(o, a);
        if (std::abs(alpha - s(a, a) + sn) < tol) return true;
        negs.push_back(sn);
      }
      std::sort(negs.begin(), negs.end());
      for (std::size_t t = 1; t < negs.size(); ++t)
        if (negs[t] - negs[t - 1] < tol) return true;
    }
    return false;
  };
  return side(true) || side(false);
}

}  // namespace oracle
