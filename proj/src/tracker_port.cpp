#include "cyclematch/tracker_port.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cyclematch {

std::size_t RawCandidates::argmax() const {
  if (scores.empty()) {
    throw ContractError("argmax of an empty candidate list");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) {
      best = i;
    }
  }
  return best;
}

void RawCandidates::validate() const {
  if (boxes.size() != scores.size()) {
    throw ContractError("candidate boxes and scores differ in length");
  }
  if (boxes.empty()) {
    throw ContractError("tracker returned no candidates");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ContractError("candidate score " + std::to_string(s) + " outside [0, 1]");
    }
  }
}

TrackletD track_segment(const TrackerPort& port, const Template& tpl, const BBox& start,
                        std::span<const int> frames) {
  if (frames.empty()) {
    throw ContractError("track_segment needs at least one frame");
  }
  const int step = frames.size() > 1 ? frames[1] - frames[0] : -1;
  if (step != 1 && step != -1) {
    throw ContractError("track_segment frames must be consecutive");
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i] - frames[i - 1] != step) {
      throw ContractError("track_segment frames must be consecutive");
    }
  }

  std::vector<BBox> boxes;
  boxes.reserve(frames.size());
  BBox prior = start;
  for (int frame : frames) {
    const RawCandidates cands = port.propose(tpl, frame, prior);
    cands.validate();
    prior = cands.boxes[cands.argmax()];
    boxes.push_back(prior);
  }
  if (step == 1) {
    std::reverse(boxes.begin(), boxes.end());
  }
  const int end_frame = std::max(frames.front(), frames.back());
  return TrackletD(end_frame, std::move(boxes));
}

std::vector<int> backward_frames(int frame, int count) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 1; k <= count; ++k) {
    out.push_back(frame - k);
  }
  return out;
}

TrackletD backtrack(const TrackerPort& port, int frame, const BBox& box, int tau, int first_frame) {
  const int span = std::min(tau, frame - first_frame);
  if (span < 1) {
    throw ContractError("cannot backtrack from the first frame");
  }
  const Template tpl = port.make_template(frame, box);
  const std::vector<int> frames = backward_frames(frame, span);
  return track_segment(port, tpl, box, frames);
}

}  // namespace cyclematch
