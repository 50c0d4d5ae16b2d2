#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cyclematch/tracker_port.hpp"

namespace cyclematch {

/// Candidate boxes for one frame. When present, the motion-predicted box sits
/// at `kalman_index` with score 0; it carries no confidence.
struct CandidateSet {
  std::vector<BBox> boxes;
  std::vector<double> scores;
  std::optional<std::size_t> kalman_index;

  std::size_t size() const { return boxes.size(); }
  bool is_kalman(std::size_t i) const { return kalman_index && *kalman_index == i; }

  /// Number of appearance-based (non-Kalman) candidates.
  std::size_t appearance_count() const { return boxes.size() - (kalman_index ? 1 : 0); }

  /// Highest-scoring appearance-based candidate, lowest index on ties.
  std::size_t top_index() const;
};

/// Keeps boxes scoring strictly above alpha * max score. Boxes tied with the
/// max always survive, so the result is never empty. Input order is kept.
RawCandidates filter_by_confidence(const RawCandidates& raw, double alpha);

/// Greedy Gaussian soft suppression. Visits boxes highest score first; every
/// remaining box overlapping a visited one by more than `iou_thresh` has its
/// score scaled by exp(-iou^2 / sigma) and is dropped once that decayed score
/// falls below `score_floor`. Output is in visiting order.
RawCandidates soft_nms(const RawCandidates& cands, double iou_thresh, double sigma,
                       double score_floor);

/// Appends the motion-predicted box, when given, after the filtered boxes.
CandidateSet assemble(const RawCandidates& filtered, const std::optional<BBox>& kalman_box);

}  // namespace cyclematch
