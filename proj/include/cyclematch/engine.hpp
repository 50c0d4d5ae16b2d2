#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cyclematch/candidate_select.hpp"
#include "cyclematch/matching.hpp"
#include "cyclematch/motion.hpp"
#include "cyclematch/pools.hpp"
#include "cyclematch/tracker_port.hpp"

namespace cyclematch {

struct EngineConfig {
  double alpha = 0.7;        // confidence ratio for candidate filtering
  double nms_iou = 0.25;     // soft-NMS overlap threshold
  double nms_sigma = 0.01;   // soft-NMS Gaussian width
  double nms_floor = 1e-3;   // decayed scores below this are dropped
  int tau = 9;               // backtracking length in frames
  double stability_iou_threshold = 0.6;
  bool kalman_enabled = true;
  double neighbor_assoc_iou = 0.3;  // stable-path neighbor association
  MotionNoise<double> motion;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  nlohmann::ordered_json to_json() const;

  bool operator==(const EngineConfig& o) const;
};

struct EngineState {
  TrackletD target;          // most recent results, newest first, at most tau
  NeighborPool neighbors;
  MotionState<double> motion;
  Template tpl;              // fixed at initialization
  int frame;
  int first_frame;
  EngineConfig config;

  bool operator==(const EngineState&) const = default;
};

enum class Gate { StableSingle, StableOverlap, Unstable };

std::string_view to_string(Gate g);

/// What happened on one frame; serialized one JSON object per line.
struct DecisionRecord {
  int frame = 0;
  Gate gate = Gate::StableSingle;
  std::size_t num_candidates = 0;
  std::optional<std::size_t> kalman_index;
  std::optional<double> top_iou;
  WeightMatrix weights;       // empty when the gate was stable
  Assignment assignment;
  std::optional<Resolution> resolution;
  std::size_t selected = 0;
  BBox box{0, 0, 1, 1};
  std::string fallback;       // empty, or why the argmax was used instead

  nlohmann::ordered_json to_json() const;
};

EngineState engine_init(const TrackerPort& port, int frame0, const BBox& b0,
                        const EngineConfig& cfg = {});

/// Skips matching when there is a single appearance candidate or the top
/// candidate's backtracked tracklet overlaps the target tracklet by more
/// than `threshold` on average.
bool is_stable(const CandidateSet& cands, const TrackletD& target, const TrackletD& top_tracklet,
               double threshold);

struct StepResult {
  BBox box;
  EngineState state;
  DecisionRecord record;
};

/// Advances the engine to `frame`, which must be state.frame + 1.
StepResult step(const TrackerPort& port, const EngineState& state, int frame);

struct SequenceResult {
  std::vector<BBox> boxes;             // one per frame, boxes[0] == b0
  std::vector<DecisionRecord> log;     // one per step
};

/// Runs the engine over frames [first, last] starting from b0 at `first`.
SequenceResult run_sequence(const TrackerPort& port, int first, int last, const BBox& b0,
                            const EngineConfig& cfg = {});

/// The plain tracker: argmax confidence every frame, no post-processing.
std::vector<BBox> run_baseline(const TrackerPort& port, int first, int last, const BBox& b0);

}  // namespace cyclematch
