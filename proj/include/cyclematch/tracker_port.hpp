#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cyclematch/geometry.hpp"

namespace cyclematch {

/// Appearance handle for a patch cropped at (source_frame, source_box).
/// `features` is backend-defined; the engine never inspects it.
struct Template {
  int source_frame;
  BBox source_box;
  Eigen::VectorXd features;

  bool operator==(const Template& other) const {
    return source_frame == other.source_frame && source_box == other.source_box &&
           features.size() == other.features.size() && features == other.features;
  }
};

/// Proposals for one frame, boxes[i] scored by scores[i] in [0, 1].
struct RawCandidates {
  std::vector<BBox> boxes;
  std::vector<double> scores;

  std::size_t size() const { return boxes.size(); }
  bool empty() const { return boxes.empty(); }

  /// Index of the highest score; the lowest index wins ties.
  std::size_t argmax() const;

  /// Throws ContractError unless sizes match, n >= 1, and scores lie in [0, 1].
  void validate() const;

  bool operator==(const RawCandidates&) const = default;
};

/// What a single-object tracker backbone must provide. Implementations must
/// be deterministic and safe for concurrent const use.
class TrackerPort {
 public:
  virtual ~TrackerPort() = default;

  virtual int frame_count() const = 0;

  virtual Template make_template(int frame, const BBox& box) const = 0;

  /// Candidates for `frame`, searching around `prior` (the previous result).
  virtual RawCandidates propose(const Template& tpl, int frame, const BBox& prior) const = 0;
};

/// Runs the tracker over consecutive `frames` (ascending, or descending for
/// backtracking), starting from `start` and taking the argmax box each step.
/// The resulting tracklet ends at the latest frame visited.
TrackletD track_segment(const TrackerPort& port, const Template& tpl, const BBox& start,
                        std::span<const int> frames);

/// frame-1, frame-2, ..., frame-count.
std::vector<int> backward_frames(int frame, int count);

/// Backtracks the box `box` seen at `frame` over min(tau, frame - first_frame)
/// earlier frames, using a template cropped at that box.
TrackletD backtrack(const TrackerPort& port, int frame, const BBox& box, int tau,
                    int first_frame = 0);

}  // namespace cyclematch
