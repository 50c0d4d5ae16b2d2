#include "cyclematch/candidate_select.hpp"

#include <cmath>
#include <numeric>

namespace cyclematch {

std::size_t CandidateSet::top_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (is_kalman(i)) {
      continue;
    }
    if (!best || scores[i] > scores[*best]) {
      best = i;
    }
  }
  if (!best) {
    throw ContractError("candidate set has no appearance-based candidate");
  }
  return *best;
}

RawCandidates filter_by_confidence(const RawCandidates& raw, double alpha) {
  raw.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ContractError("alpha must lie in [0, 1]");
  }
  const double best = raw.scores[raw.argmax()];
  const double threshold = alpha * best;
  RawCandidates out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.scores[i] > threshold || raw.scores[i] == best) {
      out.boxes.push_back(raw.boxes[i]);
      out.scores.push_back(raw.scores[i]);
    }
  }
  return out;
}

RawCandidates soft_nms(const RawCandidates& cands, double iou_thresh, double sigma,
                       double score_floor) {
  cands.validate();
  if (!(sigma > 0.0)) {
    throw ContractError("soft-NMS sigma must be positive");
  }

  std::vector<std::size_t> remaining(cands.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<double> score = cands.scores;

  RawCandidates out;
  while (!remaining.empty()) {
    auto best_it = remaining.begin();
    for (auto it = remaining.begin(); it != remaining.end(); ++it) {
      if (score[*it] > score[*best_it]) {
        best_it = it;
      }
    }
    const std::size_t kept = *best_it;
    remaining.erase(best_it);
    out.boxes.push_back(cands.boxes[kept]);
    out.scores.push_back(score[kept]);

    std::vector<std::size_t> survivors;
    survivors.reserve(remaining.size());
    for (std::size_t r : remaining) {
      const double overlap = iou(cands.boxes[kept], cands.boxes[r]);
      if (overlap > iou_thresh) {
        score[r] *= std::exp(-overlap * overlap / sigma);
        if (score[r] < score_floor) {
          continue;
        }
      }
      survivors.push_back(r);
    }
    remaining = std::move(survivors);
  }
  return out;
}

CandidateSet assemble(const RawCandidates& filtered, const std::optional<BBox>& kalman_box) {
  filtered.validate();
  CandidateSet set{filtered.boxes, filtered.scores, std::nullopt};
  if (kalman_box) {
    set.kalman_index = set.boxes.size();
    set.boxes.push_back(*kalman_box);
    set.scores.push_back(0.0);
  }
  return set;
}

}  // namespace cyclematch
