#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cyclematch/candidate_select.hpp"
#include "cyclematch/pools.hpp"

namespace cyclematch {

/// Rows: candidate tracklets. Columns: neighbor tracklets, then the target
/// tracklet in the last column.
using WeightMatrix = Eigen::MatrixXd;

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_weight = 0.0;

  std::optional<int> row_of_col(int col) const {
    for (const auto& [r, c] : pairs) {
      if (c == col) return r;
    }
    return std::nullopt;
  }
  std::optional<int> col_of_row(int row) const {
    for (const auto& [r, c] : pairs) {
      if (r == row) return c;
    }
    return std::nullopt;
  }
};

namespace detail {

/// Minimum-cost perfect assignment of a square matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns the column of each row.
template <typename Derived>
std::vector<int> min_cost_assignment(const Eigen::MatrixBase<Derived>& cost) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(cost.rows());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<Scalar> u(n + 1, Scalar(0)), v(n + 1, Scalar(0));
  std::vector<int> owner(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = owner[j0];
      Scalar delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    col_of_row[static_cast<std::size_t>(owner[j] - 1)] = j - 1;
  }
  return col_of_row;
}

/// Best total weight over perfect assignments of a square matrix.
inline double max_assignment_value(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return 0.0;
  const double top = w.maxCoeff();
  const Eigen::MatrixXd cost = (top - w.array()).matrix();
  const std::vector<int> cols = min_cost_assignment(cost);
  double total = 0.0;
  for (int r = 0; r < w.rows(); ++r) total += w(r, cols[static_cast<std::size_t>(r)]);
  return total;
}

inline Eigen::MatrixXd without(const Eigen::MatrixXd& w, const std::vector<bool>& row_gone,
                               const std::vector<bool>& col_gone) {
  std::vector<int> rows, cols;
  for (int r = 0; r < w.rows(); ++r)
    if (!row_gone[static_cast<std::size_t>(r)]) rows.push_back(r);
  for (int c = 0; c < w.cols(); ++c)
    if (!col_gone[static_cast<std::size_t>(c)]) cols.push_back(c);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w(rows[i], cols[j]);
  return out;
}

}  // namespace detail

/// Maximum-weight matching of a rectangular weight matrix. The matrix is
/// padded to square with zero-weight dummies; dummy pairings mean
/// "unmatched" and are not reported. Among optimal matchings (within a
/// relative tolerance) the one whose row-by-row column choices are
/// lexicographically smallest is returned, with "unmatched" ordered last.
template <typename Derived>
Assignment hungarian_max(const Eigen::MatrixBase<Derived>& weights) {
  const int rows = static_cast<int>(weights.rows());
  const int cols = static_cast<int>(weights.cols());
  Assignment out;
  if (rows == 0 || cols == 0) {
    return out;
  }
  const int n = std::max(rows, cols);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  w.topLeftCorner(rows, cols) = weights.template cast<double>();
  if (!w.allFinite()) {
    throw ContractError("weight matrix has non-finite entries");
  }

  const double best = detail::max_assignment_value(w);
  const double tol = 1e-9 * std::max(1.0, w.cwiseAbs().maxCoeff() * n);

  std::vector<bool> row_gone(static_cast<std::size_t>(n), false);
  std::vector<bool> col_gone(static_cast<std::size_t>(n), false);
  double fixed = 0.0;
  for (int r = 0; r < rows; ++r) {
    row_gone[static_cast<std::size_t>(r)] = true;
    for (int c = 0; c < n; ++c) {
      if (col_gone[static_cast<std::size_t>(c)]) continue;
      col_gone[static_cast<std::size_t>(c)] = true;
      const double rest = detail::max_assignment_value(detail::without(w, row_gone, col_gone));
      if (fixed + w(r, c) + rest >= best - tol) {
        fixed += w(r, c);
        if (c < cols) {
          out.pairs.emplace_back(r, c);
          out.total_weight += w(r, c);
        }
        break;
      }
      col_gone[static_cast<std::size_t>(c)] = false;
    }
  }
  return out;
}

/// hungarian_max on a build_weights layout with ties broken as if the target
/// column came first, so among optimal matchings the target goes to the
/// lowest-index row that can take it. Pairs use the original column order.
Assignment match_target_first(const WeightMatrix& w);

/// All-pairs tracklet_avg_iou between candidate tracklets and the neighbor
/// tracklets followed by the target tracklet.
WeightMatrix build_weights(const CandidatePool& pool, const NeighborPool& neighbors,
                           const TrackletD& target);

enum class Resolution {
  MatchedTarget,      // target column paired with a positive weight
  BestUnmatched,      // highest target weight among unmatched rows
  KalmanZeroIou,      // every unmatched row has zero target weight
  NoViableCandidate,  // nothing to select; caller falls back to argmax
};

std::string_view to_string(Resolution r);

struct TargetChoice {
  std::optional<std::size_t> index;
  Resolution reason;
};

/// Picks the candidate for the target column. Zero-weight pairs count as
/// unmatched.
TargetChoice resolve_target(const Assignment& a, const WeightMatrix& w, const CandidateSet& cands);

}  // namespace cyclematch
