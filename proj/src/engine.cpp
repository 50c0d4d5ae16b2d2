#include "cyclematch/engine.hpp"

#include <string>

namespace cyclematch {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

nlohmann::ordered_json box_json(const BBox& b) { return {b.x(), b.y(), b.w(), b.h()}; }

}  // namespace

void EngineConfig::validate() const {
  if (!in_unit(alpha)) throw ConfigError("alpha must lie in [0, 1]");
  if (!in_unit(nms_iou)) throw ConfigError("nms_iou must lie in [0, 1]");
  if (!(nms_sigma > 0.0)) throw ConfigError("nms_sigma must be positive");
  if (!in_unit(nms_floor)) throw ConfigError("nms_floor must lie in [0, 1]");
  if (tau < 1) throw ConfigError("tau must be at least 1");
  if (!in_unit(stability_iou_threshold)) throw ConfigError("gate IoU threshold must lie in [0, 1]");
  if (!in_unit(neighbor_assoc_iou)) throw ConfigError("neighbor_assoc_iou must lie in [0, 1]");
  if (!(motion.position_weight > 0.0 && motion.velocity_weight > 0.0 && motion.min_size > 0.0)) {
    throw ConfigError("motion noise scales must be positive");
  }
}

nlohmann::ordered_json EngineConfig::to_json() const {
  return {{"alpha", alpha},
          {"nms_iou", nms_iou},
          {"nms_sigma", nms_sigma},
          {"nms_floor", nms_floor},
          {"tau", tau},
          {"gate_iou", stability_iou_threshold},
          {"kalman", kalman_enabled},
          {"neighbor_assoc_iou", neighbor_assoc_iou},
          {"motion_position_weight", motion.position_weight},
          {"motion_velocity_weight", motion.velocity_weight}};
}

bool EngineConfig::operator==(const EngineConfig& o) const {
  return alpha == o.alpha && nms_iou == o.nms_iou && nms_sigma == o.nms_sigma &&
         nms_floor == o.nms_floor && tau == o.tau &&
         stability_iou_threshold == o.stability_iou_threshold &&
         kalman_enabled == o.kalman_enabled && neighbor_assoc_iou == o.neighbor_assoc_iou &&
         motion.position_weight == o.motion.position_weight &&
         motion.velocity_weight == o.motion.velocity_weight &&
         motion.init_position_factor == o.motion.init_position_factor &&
         motion.init_velocity_factor == o.motion.init_velocity_factor &&
         motion.min_size == o.motion.min_size;
}

std::string_view to_string(Gate g) {
  switch (g) {
    case Gate::StableSingle: return "stable_single";
    case Gate::StableOverlap: return "stable_overlap";
    case Gate::Unstable: return "unstable";
  }
  return "unknown";
}

nlohmann::ordered_json DecisionRecord::to_json() const {
  nlohmann::ordered_json j;
  j["frame"] = frame;
  j["gate"] = std::string(to_string(gate));
  j["candidates"] = num_candidates;
  j["kalman_index"] = kalman_index ? nlohmann::ordered_json(*kalman_index) : nullptr;
  j["top_iou"] = top_iou ? nlohmann::ordered_json(*top_iou) : nullptr;
  if (weights.size() > 0) {
    nlohmann::ordered_json m = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < weights.cols(); ++c) row.push_back(weights(r, c));
      m.push_back(std::move(row));
    }
    j["matrix"] = std::move(m);
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& [r, c] : assignment.pairs) pairs.push_back({r, c});
    j["assignment"] = std::move(pairs);
  } else {
    j["matrix"] = nullptr;
    j["assignment"] = nullptr;
  }
  j["resolution"] = resolution ? nlohmann::ordered_json(std::string(to_string(*resolution))) : nullptr;
  j["selected"] = selected;
  j["box"] = box_json(box);
  j["fallback"] = fallback.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(fallback);
  return j;
}

EngineState engine_init(const TrackerPort& port, int frame0, const BBox& b0, const EngineConfig& cfg) {
  cfg.validate();
  return EngineState{TrackletD(frame0, {b0}),
                     NeighborPool{},
                     motion_init(b0, frame0, cfg.motion),
                     port.make_template(frame0, b0),
                     frame0,
                     frame0,
                     cfg};
}

bool is_stable(const CandidateSet& cands, const TrackletD& target, const TrackletD& top_tracklet,
               double threshold) {
  if (cands.appearance_count() == 1) {
    return true;
  }
  return tracklet_avg_iou(target, top_tracklet) > threshold;
}

StepResult step(const TrackerPort& port, const EngineState& state, int frame) {
  if (frame != state.frame + 1) {
    throw ContractError("engine expected frame " + std::to_string(state.frame + 1) + ", got " +
                        std::to_string(frame));
  }
  const EngineConfig& cfg = state.config;

  RawCandidates raw = port.propose(state.tpl, frame, state.target.head());
  raw.validate();
  const RawCandidates kept =
      soft_nms(filter_by_confidence(raw, cfg.alpha), cfg.nms_iou, cfg.nms_sigma, cfg.nms_floor);

  MotionState<double> motion = state.motion;
  std::optional<BBox> kalman_box;
  if (cfg.kalman_enabled) {
    auto [predicted, advanced] = motion_predict(motion, cfg.motion);
    kalman_box = predicted;
    motion = advanced;
  }
  const CandidateSet cands = assemble(kept, kalman_box);
  const std::size_t top = cands.top_index();

  DecisionRecord rec;
  rec.frame = frame;
  rec.num_candidates = cands.size();
  rec.kalman_index = cands.kalman_index;

  std::size_t selected = top;
  NeighborPool neighbors;
  std::optional<TrackletD> top_tracklet;
  bool stable = cands.appearance_count() == 1;
  if (stable) {
    rec.gate = Gate::StableSingle;
  } else {
    top_tracklet = backtrack(port, frame, cands.boxes[top], cfg.tau, state.first_frame);
    rec.top_iou = tracklet_avg_iou(state.target, *top_tracklet);
    stable = is_stable(cands, state.target, *top_tracklet, cfg.stability_iou_threshold);
    rec.gate = stable ? Gate::StableOverlap : Gate::Unstable;
  }

  if (stable) {
    neighbors = carry_neighbors(state.neighbors, cands, selected, frame, cfg.tau,
                                cfg.neighbor_assoc_iou);
  } else {
    const KnownTracklet known[] = {{top, *top_tracklet}};
    const CandidatePool pool =
        build_candidate_pool(cands, port, frame, cfg.tau, known, state.first_frame);
    rec.weights = build_weights(pool, state.neighbors, state.target);
    rec.assignment = match_target_first(rec.weights);
    const TargetChoice choice = resolve_target(rec.assignment, rec.weights, cands);
    rec.resolution = choice.reason;
    if (choice.index) {
      selected = *choice.index;
    } else {
      rec.fallback = "no viable candidate; using argmax confidence";
    }
    neighbors = update_neighbor_pool(pool, selected);
  }

  const BBox chosen = cands.boxes[selected];
  rec.selected = selected;
  rec.box = chosen;
  if (cfg.kalman_enabled) {
    motion = motion_update(motion, chosen, cfg.motion);
  }

  EngineState next{state.target.prepended(chosen, cfg.tau),
                   std::move(neighbors),
                   motion,
                   state.tpl,
                   frame,
                   state.first_frame,
                   cfg};
  return StepResult{chosen, std::move(next), std::move(rec)};
}

SequenceResult run_sequence(const TrackerPort& port, int first, int last, const BBox& b0,
                            const EngineConfig& cfg) {
  if (last < first) {
    throw ContractError("sequence must contain at least one frame");
  }
  SequenceResult out;
  out.boxes.reserve(static_cast<std::size_t>(last - first + 1));
  out.log.reserve(static_cast<std::size_t>(last - first));
  out.boxes.push_back(b0);
  EngineState state = engine_init(port, first, b0, cfg);
  for (int f = first + 1; f <= last; ++f) {
    StepResult r = step(port, state, f);
    out.boxes.push_back(r.box);
    out.log.push_back(std::move(r.record));
    state = std::move(r.state);
  }
  return out;
}

std::vector<BBox> run_baseline(const TrackerPort& port, int first, int last, const BBox& b0) {
  if (last < first) {
    throw ContractError("sequence must contain at least one frame");
  }
  std::vector<BBox> out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  out.push_back(b0);
  const Template tpl = port.make_template(first, b0);
  for (int f = first + 1; f <= last; ++f) {
    const RawCandidates raw = port.propose(tpl, f, out.back());
    raw.validate();
    out.push_back(raw.boxes[raw.argmax()]);
  }
  return out;
}

}  // namespace cyclematch
