#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "cyclematch/simworld.hpp"
#include "sim_random.hpp"

namespace cyclematch {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

/// Unit vector whose cosine with the unit vector `a` is exactly `similarity`.
Eigen::VectorXd similar_to(Rng& rng, const Eigen::VectorXd& a, double similarity) {
  Eigen::VectorXd orth;
  do {
    orth = random_unit(rng, static_cast<int>(a.size()));
    orth -= orth.dot(a) * a;
  } while (orth.norm() < 1e-6);
  orth.normalize();
  const double s = std::clamp(similarity, -1.0, 1.0);
  return (s * a + std::sqrt(1.0 - s * s) * orth).normalized();
}

std::vector<Waypoint> line(int f0, const BBox& b0, int f1, const BBox& b1) {
  return {{f0, b0}, {f1, b1}};
}

struct Size {
  double w;
  double h;
};

Size random_size(Rng& rng) {
  const double w = uniform(rng, 28.0, 36.0);
  return {w, w * uniform(rng, 1.8, 2.2)};
}

ObjectSpec make_object(int id, Trajectory traj, Eigen::VectorXd app, int frames, double drift) {
  ObjectSpec o;
  o.id = id;
  o.trajectory = std::move(traj);
  o.appearance = std::move(app);
  o.drift = drift;
  o.first_frame = 0;
  o.last_frame = frames - 1;
  return o;
}

void gen_single(const ScenarioConfig& cfg, Rng& rng, Scene& scene) {
  const int n = cfg.frames;
  const Size sz = random_size(rng);
  const double margin = 2.0 * sz.h;
  auto clampx = [&](double x) { return std::clamp(x, margin, cfg.width - margin); };
  auto clampy = [&](double y) { return std::clamp(y, margin, cfg.height - margin); };
  double cx = uniform(rng, 0.3 * cfg.width, 0.7 * cfg.width);
  double cy = uniform(rng, 0.3 * cfg.height, 0.7 * cfg.height);
  const Eigen::VectorXd app = random_unit(rng, cfg.appearance_dim);

  Trajectory traj;
  if (uniform(rng, 0.0, 1.0) < 0.5) {
    std::vector<Waypoint> wps{{0, BBox::from_center(cx, cy, sz.w, sz.h)}};
    const int segments = 3;
    for (int s = 1; s <= segments; ++s) {
      const int f = s == segments ? n - 1 : s * (n - 1) / segments;
      const int df = f - wps.back().frame;
      const double speed = uniform(rng, cfg.speed_min, cfg.speed_max);
      const double heading = uniform(rng, 0.0, 6.283185307179586);
      cx = clampx(cx + speed * df * std::cos(heading));
      cy = clampy(cy + speed * df * std::sin(heading));
      wps.push_back({f, BBox::from_center(cx, cy, sz.w, sz.h)});
    }
    traj = std::move(wps);
  } else {
    Sinusoid s{BBox::from_center(uniform(rng, 0.2, 0.4) * cfg.width, cy, sz.w, sz.h),
               uniform(rng, cfg.speed_min, cfg.speed_max) * 0.5,
               0.0,
               uniform(rng, 10.0, 40.0),
               uniform(rng, 30.0, 80.0),
               uniform(rng, 0.0, 6.283185307179586)};
    traj = s;
  }
  scene.objects.push_back(make_object(0, std::move(traj), app, n, cfg.drift));
}

// Two look-alikes cross; the distractor passes in front with a vertical
// offset and partially hides the target from shortly before the crossing
// until some time after it.
void gen_crossing(const ScenarioConfig& cfg, Rng& rng, Scene& scene) {
  const int n = cfg.frames;
  const Size sz = random_size(rng);
  const int cross = uniform_int(rng, int(0.35 * n), int(0.5 * n));
  const double xc = cfg.width / 2 + uniform(rng, -40.0, 40.0);
  const double ya = cfg.height / 2 + uniform(rng, -60.0, 60.0);
  const double yb = ya + (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * 0.7 * sz.h;
  const double va = uniform(rng, cfg.speed_min, cfg.speed_max);
  const double vb = uniform(rng, cfg.speed_min, cfg.speed_max);
  const double sim = uniform(rng, cfg.similarity_min, cfg.similarity_max);
  const double sev = uniform(rng, cfg.severity_min, cfg.severity_max);
  const int pre = uniform_int(rng, 3, 8);
  const int post = uniform_int(rng, 6, 30);

  const Eigen::VectorXd a = random_unit(rng, cfg.appearance_dim);
  const Eigen::VectorXd b = similar_to(rng, a, sim);
  auto at = [&](double x, double y) { return BBox::from_center(x, y, sz.w, sz.h); };

  ObjectSpec target = make_object(
      0, line(0, at(xc - va * cross, ya), n - 1, at(xc + va * (n - 1 - cross), ya)), a, n, cfg.drift);
  target.occlusions.push_back({std::max(1, cross - pre), std::min(n - 1, cross + post), 1, sev});
  ObjectSpec other = make_object(
      1, line(0, at(xc + vb * cross, yb), n - 1, at(xc - vb * (n - 1 - cross), yb)), b, n, cfg.drift);
  scene.objects.push_back(std::move(target));
  scene.objects.push_back(std::move(other));
}

// Look-alikes travel side by side; while the target is partly hidden by
// static scenery the companion veers away.
void gen_convoy(const ScenarioConfig& cfg, Rng& rng, Scene& scene) {
  const int n = cfg.frames;
  const Size sz = random_size(rng);
  const double x0 = uniform(rng, 80.0, 140.0);
  const double y0 = cfg.height / 2 + uniform(rng, -40.0, 40.0);
  const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double gap = uniform(rng, 6.0, 20.0);
  const double vx = uniform(rng, cfg.speed_min, cfg.speed_max);
  const double sim = uniform(rng, cfg.similarity_min, cfg.similarity_max);
  const double sev = uniform(rng, cfg.severity_min, cfg.severity_max);
  const int occ_start = uniform_int(rng, int(0.3 * n), int(0.45 * n));
  const int split = occ_start + uniform_int(rng, 2, 6);
  const int occ_end = std::min(n - 1, occ_start + uniform_int(rng, 15, 35));
  const double veer = side * uniform(rng, 2.0, 3.5);

  const Eigen::VectorXd a = random_unit(rng, cfg.appearance_dim);
  const Eigen::VectorXd b = similar_to(rng, a, sim);
  auto at = [&](double x, double y) { return BBox::from_center(x, y, sz.w, sz.h); };

  const double yb = y0 + side * (sz.h + gap);
  ObjectSpec target =
      make_object(0, line(0, at(x0, y0), n - 1, at(x0 + vx * (n - 1), y0)), a, n, cfg.drift);
  target.occlusions.push_back({occ_start, occ_end, std::nullopt, sev});
  std::vector<Waypoint> path{{0, at(x0, yb)},
                             {split, at(x0 + vx * split, yb)},
                             {n - 1, at(x0 + vx * (n - 1), yb + veer * (n - 1 - split))}};
  ObjectSpec other = make_object(1, std::move(path), b, n, cfg.drift);
  scene.objects.push_back(std::move(target));
  scene.objects.push_back(std::move(other));
}

// Side-by-side look-alikes; the target's appearance jumps (turning, pose
// change) partway through.
void gen_deform(const ScenarioConfig& cfg, Rng& rng, Scene& scene) {
  const int n = cfg.frames;
  const Size sz = random_size(rng);
  const double x0 = uniform(rng, 80.0, 140.0);
  const double y0 = cfg.height / 2 + uniform(rng, -40.0, 40.0);
  const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double gap = uniform(rng, 6.0, 20.0);
  const double vx = uniform(rng, cfg.speed_min, cfg.speed_max);
  const double sim = uniform(rng, cfg.similarity_min, cfg.similarity_max);
  const int spike_at = uniform_int(rng, int(0.35 * n), int(0.5 * n));
  const double spike = uniform(rng, 0.6, 0.9);

  const Eigen::VectorXd a = random_unit(rng, cfg.appearance_dim);
  const Eigen::VectorXd b = similar_to(rng, a, sim);
  auto at = [&](double x, double y) { return BBox::from_center(x, y, sz.w, sz.h); };

  ObjectSpec target =
      make_object(0, line(0, at(x0, y0), n - 1, at(x0 + vx * (n - 1), y0)), a, n, cfg.drift);
  target.drift_spikes.emplace_back(spike_at, spike);
  const double yb = y0 + side * (sz.h + gap);
  ObjectSpec other =
      make_object(1, line(0, at(x0, yb), n - 1, at(x0 + vx * (n - 1), yb)), b, n, cfg.drift);
  scene.objects.push_back(std::move(target));
  scene.objects.push_back(std::move(other));
}

// The target walks between two stationary look-alikes and vanishes behind
// scenery while passing them, so no appearance candidate is correct.
void gen_blackout(const ScenarioConfig& cfg, Rng& rng, Scene& scene) {
  const int n = cfg.frames;
  const Size sz = random_size(rng);
  const double vx = uniform(rng, cfg.speed_min, cfg.speed_max);
  const int mid = uniform_int(rng, int(0.45 * n), int(0.55 * n));
  const int half = uniform_int(rng, 3, 6);
  const double xm = cfg.width / 2 + uniform(rng, -40.0, 40.0);
  const double y0 = cfg.height / 2 + uniform(rng, -40.0, 40.0);
  const double gap = uniform(rng, 8.0, 20.0);
  const double sev = uniform(rng, cfg.severity_min, cfg.severity_max);
  const double s1 = uniform(rng, cfg.similarity_min, cfg.similarity_max);
  const double s2 = std::max(-1.0, s1 - uniform(rng, 0.01, 0.03));

  const Eigen::VectorXd a = random_unit(rng, cfg.appearance_dim);
  auto at = [&](double x, double y) { return BBox::from_center(x, y, sz.w, sz.h); };

  ObjectSpec target = make_object(
      0, line(0, at(xm - vx * mid, y0), n - 1, at(xm + vx * (n - 1 - mid), y0)), a, n, cfg.drift);
  target.occlusions.push_back({std::max(1, mid - half), std::min(n - 1, mid + half), std::nullopt, sev});
  scene.objects.push_back(std::move(target));
  const double dy = sz.h + gap;
  scene.objects.push_back(make_object(1, line(0, at(xm, y0 - dy), n - 1, at(xm, y0 - dy)),
                                      similar_to(rng, a, s1), n, cfg.drift));
  scene.objects.push_back(make_object(2, line(0, at(xm, y0 + dy), n - 1, at(xm, y0 + dy)),
                                      similar_to(rng, a, s2), n, cfg.drift));
}

std::uint64_t kind_tag(const std::string& kind) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : kind) h = (h ^ ch) * 1099511628211ull;
  return h;
}

void read_range(const nlohmann::json& v, const char* key, double& lo, double& hi) {
  if (v.is_number()) {
    lo = hi = v.get<double>();
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    lo = v[0].get<double>();
    hi = v[1].get<double>();
  } else {
    throw ConfigError(std::string("config key '") + key + "' must be a number or [min, max]");
  }
  if (hi < lo) throw ConfigError(std::string("config key '") + key + "' has min > max");
}

}  // namespace

const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> kinds{"single", "crossing", "convoy", "deform", "blackout"};
  return kinds;
}

ScenarioConfig scenario_defaults(const std::string& kind) {
  const auto& kinds = scenario_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    std::string names;
    for (const auto& k : kinds) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown scenario '" + kind + "'; valid scenarios: " + names);
  }
  ScenarioConfig cfg;
  cfg.kind = kind;
  if (kind == "single") {
    cfg.frames = 100;
    cfg.sim.search_radius = 2.5;
  } else if (kind == "blackout") {
    cfg.frames = 100;
    cfg.severity_min = cfg.severity_max = 1.0;
    cfg.similarity_min = 0.88;
    cfg.similarity_max = 0.94;
    cfg.sim.search_radius = 2.5;
  }
  return cfg;
}

nlohmann::ordered_json ScenarioConfig::to_json() const {
  return {{"kind", kind},
          {"frames", frames},
          {"width", width},
          {"height", height},
          {"appearance_dim", appearance_dim},
          {"similarity", {similarity_min, similarity_max}},
          {"severity", {severity_min, severity_max}},
          {"speed", {speed_min, speed_max}},
          {"drift", drift},
          {"jitter", sim.jitter},
          {"search_radius", sim.search_radius},
          {"clutter", sim.clutter},
          {"clutter_score", sim.clutter_score}};
}

ScenarioConfig parse_scenario_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("scenario config needs a string 'kind'");
  }
  ScenarioConfig cfg = scenario_defaults(j["kind"].get<std::string>());
  static const std::set<std::string> known{"kind",   "frames", "width",  "height",
                                           "appearance_dim", "similarity", "severity",
                                           "speed",  "drift",  "jitter", "search_radius",
                                           "clutter", "clutter_score"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown scenario config key '" + key + "'");
  }
  try {
    if (j.contains("frames")) cfg.frames = j["frames"].get<int>();
    if (j.contains("width")) cfg.width = j["width"].get<double>();
    if (j.contains("height")) cfg.height = j["height"].get<double>();
    if (j.contains("appearance_dim")) cfg.appearance_dim = j["appearance_dim"].get<int>();
    if (j.contains("similarity")) read_range(j["similarity"], "similarity", cfg.similarity_min, cfg.similarity_max);
    if (j.contains("severity")) read_range(j["severity"], "severity", cfg.severity_min, cfg.severity_max);
    if (j.contains("speed")) read_range(j["speed"], "speed", cfg.speed_min, cfg.speed_max);
    if (j.contains("drift")) cfg.drift = j["drift"].get<double>();
    if (j.contains("jitter")) cfg.sim.jitter = j["jitter"].get<double>();
    if (j.contains("search_radius")) cfg.sim.search_radius = j["search_radius"].get<double>();
    if (j.contains("clutter")) cfg.sim.clutter = j["clutter"].get<int>();
    if (j.contains("clutter_score")) cfg.sim.clutter_score = j["clutter_score"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario config value: ") + e.what());
  }
  if (cfg.frames < 2) throw ConfigError("frames must be at least 2");
  if (cfg.appearance_dim < 2) throw ConfigError("appearance_dim must be at least 2");
  if (!(cfg.width > 0 && cfg.height > 0)) throw ConfigError("world size must be positive");
  if (cfg.severity_min < 0 || cfg.severity_max > 1) throw ConfigError("severity must lie in [0, 1]");
  if (cfg.similarity_min < -1 || cfg.similarity_max > 1) throw ConfigError("similarity must lie in [-1, 1]");
  if (cfg.sim.jitter < 0 || cfg.sim.search_radius <= 0 || cfg.sim.clutter < 0) {
    throw ConfigError("jitter, search_radius and clutter must be non-negative");
  }
  return cfg;
}

Scene generate_scene(const ScenarioConfig& cfg, std::uint64_t seed) {
  // Re-validate through the parser so hand-built configs get the same checks.
  const ScenarioConfig checked = parse_scenario_config(cfg.to_json());

  Rng rng(detail::mix_seed(seed, kind_tag(checked.kind), 0x5CE7Eu, 0));
  Scene scene;
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%04llu", checked.kind.c_str(),
                static_cast<unsigned long long>(seed));
  scene.name = name;
  scene.kind = checked.kind;
  scene.seed = seed;
  scene.length = checked.frames;
  scene.width = checked.width;
  scene.height = checked.height;
  scene.target_id = 0;
  scene.sim = checked.sim;
  scene.static_appearance = random_unit(rng, checked.appearance_dim);

  if (checked.kind == "single") gen_single(checked, rng, scene);
  else if (checked.kind == "crossing") gen_crossing(checked, rng, scene);
  else if (checked.kind == "convoy") gen_convoy(checked, rng, scene);
  else if (checked.kind == "deform") gen_deform(checked, rng, scene);
  else gen_blackout(checked, rng, scene);
  return scene;
}

}  // namespace cyclematch
