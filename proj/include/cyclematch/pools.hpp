#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cyclematch/candidate_select.hpp"
#include "cyclematch/tracker_port.hpp"

namespace cyclematch {

struct CandidateEntry {
  std::size_t index;    // position in the CandidateSet
  BBox box;             // the candidate at the pool's frame
  TrackletD tracklet;   // backtracked over the preceding frames
};

/// Backtracked tracklets for every candidate of one frame, index aligned.
struct CandidatePool {
  int frame = 0;
  int tau = 1;
  std::vector<CandidateEntry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Unselected candidates of the previous frame, shifted to end at that frame.
struct NeighborPool {
  std::vector<TrackletD> tracklets;

  std::size_t size() const { return tracklets.size(); }
  bool empty() const { return tracklets.empty(); }
  bool operator==(const NeighborPool&) const = default;
};

/// A tracklet already computed for candidate `index` (e.g. by the stability
/// gate) that the pool builder should reuse instead of backtracking again.
struct KnownTracklet {
  std::size_t index;
  TrackletD tracklet;
};

/// Backtracks every candidate of frame `t` over min(tau, t - first_frame)
/// frames using a template cropped at the candidate box.
CandidatePool build_candidate_pool(const CandidateSet& cands, const TrackerPort& port, int t,
                                   int tau, std::span<const KnownTracklet> known = {},
                                   int first_frame = 0);

/// Drops the selected entry and shifts every other tracklet forward one
/// frame: its candidate box goes to the head, and the oldest box is removed
/// once the tracklet already spans tau frames.
NeighborPool update_neighbor_pool(const CandidatePool& pool, std::size_t selected);

/// Cheap neighbor upkeep for frames where full matching is skipped. Each
/// unselected appearance candidate extends the previous neighbor tracklet it
/// overlaps best (greedy, IoU >= assoc_iou against the tracklet head), or
/// starts a new single-box tracklet. Unextended neighbors are dropped.
NeighborPool carry_neighbors(const NeighborPool& previous, const CandidateSet& cands,
                             std::size_t selected, int frame, int tau, double assoc_iou);

}  // namespace cyclematch
