#pragma once

// Deterministic synthetic world: scripted object trajectories, appearance
// vectors and occlusions, plus a mock tracker backbone that scores objects by
// visibility-weighted cosine similarity to its template.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "cyclematch/geometry.hpp"
#include "cyclematch/tracker_port.hpp"

namespace cyclematch {

struct Waypoint {
  int frame;
  BBox box;
};

/// Linear drift (vx, vy) plus a vertical oscillation.
struct Sinusoid {
  BBox base;
  double vx = 0.0;
  double vy = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;
};

/// Piecewise-linear waypoints (held constant outside their range) or a sinusoid.
using Trajectory = std::variant<std::vector<Waypoint>, Sinusoid>;

BBox trajectory_box(const Trajectory& t, int frame);

struct Occlusion {
  int start;                   // inclusive
  int end;                     // inclusive
  std::optional<int> occluder; // object id, or nullopt for the static scenery
  double severity;             // 1 = fully hidden

  bool operator==(const Occlusion&) const = default;
};

struct ObjectSpec {
  int id = 0;
  Trajectory trajectory;
  Eigen::VectorXd appearance;           // unit vector at first_frame
  double drift = 0.0;                   // random-walk step per frame
  std::vector<std::pair<int, double>> drift_spikes;  // (frame, extra step)
  std::vector<Occlusion> occlusions;
  int first_frame = 0;                  // the object exists on [first, last]
  int last_frame = 0;
};

struct SimParams {
  double jitter = 0.0;          // proposal box noise, pixels (std dev)
  double search_radius = 2.5;   // multiple of the prior box diagonal
  int clutter = 0;              // clutter boxes per frame
  double clutter_score = 0.3;   // clutter scores are uniform in [0, this]
};

struct Scene {
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  int length = 0;
  double width = 640.0;
  double height = 480.0;
  int target_id = 0;
  SimParams sim;
  Eigen::VectorXd static_appearance;  // appearance of the static occluders
  std::vector<ObjectSpec> objects;

  const ObjectSpec& object(int id) const;
};

struct ObjectObs {
  int id;
  BBox box;
  Eigen::VectorXd appearance;  // effective (occluder-mixed) unit vector
  double visibility;
};

struct FrameObs {
  int frame;
  std::vector<ObjectObs> objects;  // only objects that exist at this frame
};

/// A scene with every frame's observations precomputed. Immutable.
class SimWorld {
 public:
  explicit SimWorld(Scene scene);

  const Scene& scene() const { return scene_; }
  int length() const { return scene_.length; }
  const FrameObs& frame(int f) const;

  const ObjectObs* find(int frame, int id) const;
  BBox target_box(int frame) const;
  std::vector<BBox> ground_truth() const;

 private:
  Scene scene_;
  std::vector<FrameObs> frames_;
};

/// The simulator's tracker backbone.
class MockTracker final : public TrackerPort {
 public:
  explicit MockTracker(std::shared_ptr<const SimWorld> world);

  int frame_count() const override;
  Template make_template(int frame, const BBox& box) const override;
  RawCandidates propose(const Template& tpl, int frame, const BBox& prior) const override;

  const SimWorld& world() const { return *world_; }

 private:
  void check_frame(int frame) const;

  std::shared_ptr<const SimWorld> world_;
};

/// Score the mock tracker gives an object: visibility times the cosine
/// similarity of template and effective appearance, clipped to [0, 1].
double appearance_score(const Eigen::VectorXd& tpl, const Eigen::VectorXd& appearance,
                        double visibility);

// --- scenario generation ---------------------------------------------------

struct ScenarioConfig {
  std::string kind = "crossing";
  int frames = 120;
  double width = 640.0;
  double height = 480.0;
  int appearance_dim = 16;
  // Ranges are sampled uniformly per seed.
  double similarity_min = 0.92;
  double similarity_max = 0.96;
  double severity_min = 0.15;
  double severity_max = 0.25;
  double speed_min = 2.5;
  double speed_max = 4.0;
  double drift = 0.0;
  SimParams sim{0.0, 1.8, 0, 0.3};

  nlohmann::ordered_json to_json() const;
};

const std::vector<std::string>& scenario_kinds();

/// Defaults for a named kind; throws ConfigError listing valid names.
ScenarioConfig scenario_defaults(const std::string& kind);

/// Parses a config object on top of the kind's defaults; unknown keys are
/// rejected.
ScenarioConfig parse_scenario_config(const nlohmann::json& j);

Scene generate_scene(const ScenarioConfig& cfg, std::uint64_t seed);

// --- persistence -----------------------------------------------------------

nlohmann::ordered_json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

/// MOT ground truth: `frame,id,x,y,w,h,conf,class,visibility` per line,
/// frames 1-based. Gaps inside an id's span are filled by linear
/// interpolation and reported through `warnings`.
Scene parse_mot(std::istream& in, std::uint64_t seed = 0, int appearance_dim = 16,
                std::vector<std::string>* warnings = nullptr);
Scene load_mot(const std::filesystem::path& path, std::uint64_t seed = 0,
               int appearance_dim = 16, std::vector<std::string>* warnings = nullptr);
void write_mot(const Scene& scene, std::ostream& out);

}  // namespace cyclematch
