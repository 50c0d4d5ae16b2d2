#include "cyclematch/pools.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace cyclematch {

CandidatePool build_candidate_pool(const CandidateSet& cands, const TrackerPort& port, int t,
                                   int tau, std::span<const KnownTracklet> known,
                                   int first_frame) {
  if (t <= first_frame) {
    throw ContractError("candidate pool needs at least one earlier frame");
  }
  if (tau < 1) {
    throw ContractError("tau must be at least 1");
  }
  const int span = std::min(tau, t - first_frame);

  CandidatePool pool;
  pool.frame = t;
  pool.tau = tau;
  pool.entries.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto hit = std::find_if(known.begin(), known.end(),
                            [i](const KnownTracklet& k) { return k.index == i; });
    if (hit != known.end() && hit->tracklet.end_frame() == t - 1 &&
        hit->tracklet.length() == span) {
      pool.entries.push_back({i, cands.boxes[i], hit->tracklet});
      continue;
    }
    pool.entries.push_back({i, cands.boxes[i], backtrack(port, t, cands.boxes[i], tau, first_frame)});
  }
  return pool;
}

NeighborPool update_neighbor_pool(const CandidatePool& pool, std::size_t selected) {
  if (selected >= pool.size()) {
    throw ContractError("selected candidate " + std::to_string(selected) + " not in pool of " +
                        std::to_string(pool.size()));
  }
  NeighborPool out;
  out.tracklets.reserve(pool.size() - 1);
  for (const CandidateEntry& e : pool.entries) {
    if (e.index == selected) {
      continue;
    }
    out.tracklets.push_back(e.tracklet.prepended(e.box, pool.tau));
  }
  return out;
}

NeighborPool carry_neighbors(const NeighborPool& previous, const CandidateSet& cands,
                             std::size_t selected, int frame, int tau, double assoc_iou) {
  std::vector<std::size_t> free_cands;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (i != selected && !cands.is_kalman(i)) {
      free_cands.push_back(i);
    }
  }

  // (iou, candidate, neighbor), best overlap first; index order breaks ties.
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t c : free_cands) {
    for (std::size_t n = 0; n < previous.size(); ++n) {
      const TrackletD& tr = previous.tracklets[n];
      if (tr.end_frame() != frame - 1) {
        continue;
      }
      const double overlap = iou(cands.boxes[c], tr.head());
      if (overlap >= assoc_iou) {
        pairs.emplace_back(overlap, c, n);
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a) > std::get<0>(b);
  });

  std::vector<std::optional<std::size_t>> link(cands.size());
  std::vector<bool> neighbor_used(previous.size(), false);
  for (const auto& [overlap, c, n] : pairs) {
    if (link[c] || neighbor_used[n]) {
      continue;
    }
    link[c] = n;
    neighbor_used[n] = true;
  }

  NeighborPool out;
  for (std::size_t c : free_cands) {
    if (link[c]) {
      out.tracklets.push_back(previous.tracklets[*link[c]].prepended(cands.boxes[c], tau));
    } else {
      out.tracklets.emplace_back(frame, std::vector<BBox>{cands.boxes[c]});
    }
  }
  return out;
}

}  // namespace cyclematch
