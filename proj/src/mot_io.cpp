#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "cyclematch/errors.hpp"
#include "cyclematch/simworld.hpp"
#include "sim_random.hpp"

namespace cyclematch {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, std::string(name) + " is not finite");
  }
  return value;
}

struct Row {
  BBox box;
  double visibility;
};

void put_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

Eigen::VectorXd seeded_unit(std::uint64_t seed, std::uint64_t tag, int dim) {
  std::mt19937_64 rng(detail::mix_seed(seed, 0x307u, tag, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

Scene parse_mot(std::istream& in, std::uint64_t seed, int appearance_dim,
                std::vector<std::string>* warnings) {
  if (appearance_dim < 1) throw ConfigError("appearance_dim must be positive");
  std::map<int, std::map<int, Row>> tracks;  // id -> frame(0-based) -> row
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string_view line = trim(text);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 9) {
      throw ParseError(line_no, "expected 9 comma-separated fields, got " + std::to_string(fields.size()));
    }
    const int frame = parse_field<int>(fields[0], line_no, "frame");
    const int id = parse_field<int>(fields[1], line_no, "id");
    const double x = parse_field<double>(fields[2], line_no, "x");
    const double y = parse_field<double>(fields[3], line_no, "y");
    const double w = parse_field<double>(fields[4], line_no, "width");
    const double h = parse_field<double>(fields[5], line_no, "height");
    parse_field<double>(fields[6], line_no, "confidence");
    parse_field<int>(fields[7], line_no, "class");
    const double vis = parse_field<double>(fields[8], line_no, "visibility");
    if (frame < 1) throw ParseError(line_no, "frame numbers start at 1");
    if (!(w > 0.0 && h > 0.0)) throw ParseError(line_no, "box width and height must be positive");
    if (vis < 0.0 || vis > 1.0) throw ParseError(line_no, "visibility must lie in [0, 1]");
    auto& track = tracks[id];
    if (!track.emplace(frame - 1, Row{BBox(x, y, w, h), vis}).second) {
      throw ParseError(line_no, "duplicate entry for id " + std::to_string(id) + " at frame " +
                                    std::to_string(frame));
    }
  }
  if (tracks.empty()) throw ParseError(0, "MOT file has no annotations");

  Scene scene;
  scene.name = "mot";
  scene.kind = "mot";
  scene.seed = seed;
  scene.target_id = tracks.begin()->first;
  scene.static_appearance = seeded_unit(seed, 0x57A7u, appearance_dim);
  int length = 0;
  for (const auto& [id, track] : tracks) length = std::max(length, track.rbegin()->first + 1);
  scene.length = length;

  for (const auto& [id, track] : tracks) {
    ObjectSpec o;
    o.id = id;
    o.first_frame = track.begin()->first;
    o.last_frame = track.rbegin()->first;
    o.appearance = seeded_unit(seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(id)), appearance_dim);

    std::vector<Waypoint> wps;
    int prev = -1;
    for (const auto& [f, row] : track) {
      if (prev >= 0 && f != prev + 1) {
        if (warnings) {
          warnings->push_back("id " + std::to_string(id) + ": frames " + std::to_string(prev + 2) + "-" +
                              std::to_string(f) + " missing, interpolated");
        }
      }
      wps.push_back({f, row.box});
      const double severity = 1.0 - row.visibility;
      if (severity > 0.0) {
        if (!o.occlusions.empty() && o.occlusions.back().end == f - 1 &&
            o.occlusions.back().severity == severity) {
          o.occlusions.back().end = f;
        } else {
          o.occlusions.push_back({f, f, std::nullopt, severity});
        }
      }
      prev = f;
    }
    o.trajectory = std::move(wps);
    scene.objects.push_back(std::move(o));
  }
  return scene;
}

Scene load_mot(const std::filesystem::path& path, std::uint64_t seed, int appearance_dim,
               std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MOT file " + path.string());
  Scene scene = parse_mot(in, seed, appearance_dim, warnings);
  scene.name = path.stem().string();
  return scene;
}

void write_mot(const Scene& scene, std::ostream& out) {
  std::vector<const ObjectSpec*> order;
  for (const ObjectSpec& o : scene.objects) order.push_back(&o);
  std::sort(order.begin(), order.end(), [](const ObjectSpec* a, const ObjectSpec* b) { return a->id < b->id; });

  std::string buf;
  for (int f = 0; f < scene.length; ++f) {
    for (const ObjectSpec* o : order) {
      if (f < o->first_frame || f > o->last_frame) continue;
      const BBox b = trajectory_box(o->trajectory, f);
      double severity = 0.0;
      for (const Occlusion& oc : o->occlusions) {
        if (f >= oc.start && f <= oc.end) severity = std::max(severity, oc.severity);
      }
      buf.clear();
      buf += std::to_string(f + 1);
      buf += ',';
      buf += std::to_string(o->id);
      for (double v : {b.x(), b.y(), b.w(), b.h()}) {
        buf += ',';
        put_double(buf, v);
      }
      char vis[32];
      std::snprintf(vis, sizeof(vis), "%.12g", 1.0 - severity);
      buf += ",1,1,";
      buf += vis;
      out << buf << '\n';
    }
  }
}

}  // namespace cyclematch
