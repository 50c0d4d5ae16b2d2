#include <algorithm>
#include <fstream>
#include <sstream>

#include "cyclematch/errors.hpp"
#include "cyclematch/simworld.hpp"

namespace cyclematch {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr const char* kFormat = "cyclematch-scene";
constexpr int kVersion = 1;

ojson box_to_json(const BBox& b) { return {b.x(), b.y(), b.w(), b.h()}; }

BBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("box must be [x, y, w, h]");
  return BBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

ojson vec_to_json(const Eigen::VectorXd& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("vector must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

ojson trajectory_to_json(const Trajectory& t) {
  if (const auto* wps = std::get_if<std::vector<Waypoint>>(&t)) {
    ojson pts = ojson::array();
    for (const Waypoint& w : *wps) pts.push_back({w.frame, w.box.x(), w.box.y(), w.box.w(), w.box.h()});
    return {{"type", "waypoints"}, {"points", std::move(pts)}};
  }
  const auto& s = std::get<Sinusoid>(t);
  return {{"type", "sinusoid"}, {"base", box_to_json(s.base)}, {"vx", s.vx},  {"vy", s.vy},
          {"amplitude", s.amplitude}, {"period", s.period},    {"phase", s.phase}};
}

Trajectory trajectory_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "waypoints") {
    std::vector<Waypoint> wps;
    for (const json& p : j.at("points")) {
      if (!p.is_array() || p.size() != 5) throw ConfigError("waypoint must be [frame, x, y, w, h]");
      wps.push_back({p[0].get<int>(), BBox(p[1].get<double>(), p[2].get<double>(),
                                           p[3].get<double>(), p[4].get<double>())});
    }
    if (wps.empty()) throw ConfigError("waypoint trajectory is empty");
    for (std::size_t i = 1; i < wps.size(); ++i) {
      if (wps[i].frame <= wps[i - 1].frame) throw ConfigError("waypoint frames must increase");
    }
    return wps;
  }
  if (type == "sinusoid") {
    Sinusoid s{box_from_json(j.at("base")), j.at("vx").get<double>(), j.at("vy").get<double>(),
               j.at("amplitude").get<double>(), j.at("period").get<double>(),
               j.at("phase").get<double>()};
    if (!(s.period > 0.0)) throw ConfigError("sinusoid period must be positive");
    return s;
  }
  throw ConfigError("unknown trajectory type '" + type + "'");
}

}  // namespace

nlohmann::ordered_json scene_to_json(const Scene& scene) {
  ojson objects = ojson::array();
  for (const ObjectSpec& o : scene.objects) {
    ojson spikes = ojson::array();
    for (const auto& [f, m] : o.drift_spikes) spikes.push_back({f, m});
    ojson occs = ojson::array();
    for (const Occlusion& oc : o.occlusions) {
      occs.push_back({{"start", oc.start},
                      {"end", oc.end},
                      {"occluder", oc.occluder ? ojson(*oc.occluder) : ojson("static")},
                      {"severity", oc.severity}});
    }
    objects.push_back({{"id", o.id},
                       {"first_frame", o.first_frame},
                       {"last_frame", o.last_frame},
                       {"trajectory", trajectory_to_json(o.trajectory)},
                       {"appearance", vec_to_json(o.appearance)},
                       {"drift", o.drift},
                       {"drift_spikes", std::move(spikes)},
                       {"occlusions", std::move(occs)}});
  }
  return {{"format", kFormat},
          {"version", kVersion},
          {"name", scene.name},
          {"kind", scene.kind},
          {"seed", scene.seed},
          {"length", scene.length},
          {"width", scene.width},
          {"height", scene.height},
          {"target_id", scene.target_id},
          {"sim",
           {{"jitter", scene.sim.jitter},
            {"search_radius", scene.sim.search_radius},
            {"clutter", scene.sim.clutter},
            {"clutter_score", scene.sim.clutter_score}}},
          {"static_appearance", vec_to_json(scene.static_appearance)},
          {"objects", std::move(objects)}};
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != kFormat) throw ConfigError("not a scene file");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported scene version");
    Scene s;
    s.name = j.at("name").get<std::string>();
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.length = j.at("length").get<int>();
    s.width = j.at("width").get<double>();
    s.height = j.at("height").get<double>();
    s.target_id = j.at("target_id").get<int>();
    const json& sim = j.at("sim");
    s.sim = SimParams{sim.at("jitter").get<double>(), sim.at("search_radius").get<double>(),
                      sim.at("clutter").get<int>(), sim.at("clutter_score").get<double>()};
    s.static_appearance = vec_from_json(j.at("static_appearance"));
    for (const json& jo : j.at("objects")) {
      ObjectSpec o;
      o.id = jo.at("id").get<int>();
      o.first_frame = jo.at("first_frame").get<int>();
      o.last_frame = jo.at("last_frame").get<int>();
      o.trajectory = trajectory_from_json(jo.at("trajectory"));
      o.appearance = vec_from_json(jo.at("appearance"));
      o.drift = jo.at("drift").get<double>();
      for (const json& sp : jo.at("drift_spikes")) {
        o.drift_spikes.emplace_back(sp.at(0).get<int>(), sp.at(1).get<double>());
      }
      for (const json& oc : jo.at("occlusions")) {
        Occlusion occ{oc.at("start").get<int>(), oc.at("end").get<int>(), std::nullopt,
                      oc.at("severity").get<double>()};
        const json& who = oc.at("occluder");
        if (who.is_number_integer()) {
          occ.occluder = who.get<int>();
        } else if (!(who.is_string() && who.get<std::string>() == "static")) {
          throw ConfigError("occluder must be an object id or \"static\"");
        }
        if (occ.severity < 0.0 || occ.severity > 1.0) throw ConfigError("severity must lie in [0, 1]");
        o.occlusions.push_back(occ);
      }
      s.objects.push_back(std::move(o));
    }
    if (s.length < 1) throw ConfigError("scene length must be positive");
    s.object(s.target_id);
    for (const ObjectSpec& o : s.objects) {
      for (const Occlusion& oc : o.occlusions) {
        if (oc.occluder && (*oc.occluder == o.id || !std::any_of(s.objects.begin(), s.objects.end(),
                                                                 [&](const ObjectSpec& x) {
                                                                   return x.id == *oc.occluder;
                                                                 }))) {
          throw ConfigError("object " + std::to_string(o.id) + " has an invalid occluder id");
        }
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scene: ") + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(std::string("malformed scene: ") + e.what());
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << scene_to_json(scene).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing scene file " + path.string());
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return scene_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace cyclematch
