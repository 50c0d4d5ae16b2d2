#include "cyclematch/matching.hpp"

namespace cyclematch {

WeightMatrix build_weights(const CandidatePool& pool, const NeighborPool& neighbors,
                           const TrackletD& target) {
  if (pool.entries.empty()) {
    throw ContractError("cannot build weights for an empty candidate pool");
  }
  const auto rows = static_cast<Eigen::Index>(pool.size());
  const auto cols = static_cast<Eigen::Index>(neighbors.size() + 1);
  WeightMatrix w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const TrackletD& cand = pool.entries[static_cast<std::size_t>(r)].tracklet;
    for (Eigen::Index c = 0; c + 1 < cols; ++c) {
      w(r, c) = tracklet_avg_iou(cand, neighbors.tracklets[static_cast<std::size_t>(c)]);
    }
    w(r, cols - 1) = tracklet_avg_iou(cand, target);
  }
  return w;
}

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::MatchedTarget: return "matched_target";
    case Resolution::BestUnmatched: return "best_unmatched";
    case Resolution::KalmanZeroIou: return "kalman_zero_iou";
    case Resolution::NoViableCandidate: return "no_viable_candidate";
  }
  return "unknown";
}

Assignment match_target_first(const WeightMatrix& w) {
  const Eigen::Index cols = w.cols();
  if (cols == 0) return hungarian_max(w);
  WeightMatrix permuted(w.rows(), cols);
  permuted.col(0) = w.col(cols - 1);
  permuted.rightCols(cols - 1) = w.leftCols(cols - 1);
  Assignment a = hungarian_max(permuted);
  for (auto& [r, c] : a.pairs) c = c == 0 ? static_cast<int>(cols) - 1 : c - 1;
  return a;
}

TargetChoice resolve_target(const Assignment& a, const WeightMatrix& w, const CandidateSet& cands) {
  if (w.rows() != static_cast<Eigen::Index>(cands.size())) {
    throw ContractError("weight matrix rows do not match the candidate set");
  }
  const int target_col = static_cast<int>(w.cols()) - 1;

  std::vector<bool> matched(static_cast<std::size_t>(w.rows()), false);
  std::optional<int> target_row;
  for (const auto& [r, c] : a.pairs) {
    if (!(w(r, c) > 0.0)) {
      continue;
    }
    matched[static_cast<std::size_t>(r)] = true;
    if (c == target_col) {
      target_row = r;
    }
  }
  if (target_row) {
    return {static_cast<std::size_t>(*target_row), Resolution::MatchedTarget};
  }

  std::optional<int> best;
  for (int r = 0; r < w.rows(); ++r) {
    if (matched[static_cast<std::size_t>(r)]) continue;
    if (!best || w(r, target_col) > w(*best, target_col)) {
      best = r;
    }
  }
  if (best && w(*best, target_col) > 0.0) {
    return {static_cast<std::size_t>(*best), Resolution::BestUnmatched};
  }
  if (cands.kalman_index) {
    return {*cands.kalman_index, Resolution::KalmanZeroIou};
  }
  return {std::nullopt, Resolution::NoViableCandidate};
}

}  // namespace cyclematch
