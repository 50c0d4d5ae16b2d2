#include "cyclematch/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sim_random.hpp"

namespace cyclematch {

namespace {

Eigen::VectorXd normalized_or(const Eigen::VectorXd& v, const Eigen::VectorXd& fallback) {
  const double n = v.norm();
  return n > 1e-12 ? Eigen::VectorXd(v / n) : fallback;
}

BBox lerp(const BBox& a, const BBox& b, double t) {
  return BBox(a.x() + (b.x() - a.x()) * t, a.y() + (b.y() - a.y()) * t,
              a.w() + (b.w() - a.w()) * t, a.h() + (b.h() - a.h()) * t);
}

}  // namespace

BBox trajectory_box(const Trajectory& t, int frame) {
  if (const auto* wps = std::get_if<std::vector<Waypoint>>(&t)) {
    if (wps->empty()) {
      throw ContractError("trajectory has no waypoints");
    }
    if (frame <= wps->front().frame) return wps->front().box;
    if (frame >= wps->back().frame) return wps->back().box;
    auto hi = std::lower_bound(wps->begin(), wps->end(), frame,
                               [](const Waypoint& w, int f) { return w.frame < f; });
    if (hi->frame == frame) return hi->box;
    auto lo = std::prev(hi);
    const double u = double(frame - lo->frame) / double(hi->frame - lo->frame);
    return lerp(lo->box, hi->box, u);
  }
  const auto& s = std::get<Sinusoid>(t);
  const double two_pi = 6.283185307179586;
  const double dy = s.amplitude * std::sin(two_pi * frame / s.period + s.phase);
  return s.base.translated(s.vx * frame, s.vy * frame + dy);
}

const ObjectSpec& Scene::object(int id) const {
  for (const ObjectSpec& o : objects) {
    if (o.id == id) return o;
  }
  throw ContractError("scene has no object with id " + std::to_string(id));
}

SimWorld::SimWorld(Scene scene) : scene_(std::move(scene)) {
  if (scene_.length < 1) {
    throw ContractError("scene must have at least one frame");
  }
  const int len = scene_.length;
  const std::size_t n_obj = scene_.objects.size();

  // Appearance random walk per object, one vector per frame of its span.
  std::vector<std::vector<Eigen::VectorXd>> own(n_obj);
  for (std::size_t k = 0; k < n_obj; ++k) {
    const ObjectSpec& o = scene_.objects[k];
    if (o.appearance.size() == 0) {
      throw ContractError("object " + std::to_string(o.id) + " has no appearance vector");
    }
    auto& seq = own[k];
    seq.assign(static_cast<std::size_t>(len), Eigen::VectorXd());
    Eigen::VectorXd cur = normalized_or(o.appearance, o.appearance);
    const double scale = 1.0 / std::sqrt(double(cur.size()));
    for (int f = 0; f < len; ++f) {
      if (f > o.first_frame) {
        double step = o.drift;
        for (const auto& [sf, mag] : o.drift_spikes) {
          if (sf == f) step += mag;
        }
        if (step > 0.0) {
          std::mt19937_64 rng(detail::mix_seed(scene_.seed, 0xA11Eu, std::uint64_t(o.id), std::uint64_t(f)));
          std::normal_distribution<double> normal(0.0, 1.0);
          Eigen::VectorXd g(cur.size());
          for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
          cur = normalized_or(cur + step * scale * g, cur);
        }
      }
      seq[static_cast<std::size_t>(f)] = cur;
    }
  }

  const Eigen::VectorXd static_app =
      scene_.static_appearance.size() > 0 ? Eigen::VectorXd(scene_.static_appearance.normalized())
                                          : Eigen::VectorXd::Zero(own.empty() ? 1 : own[0][0].size());

  frames_.reserve(static_cast<std::size_t>(len));
  for (int f = 0; f < len; ++f) {
    FrameObs obs{f, {}};
    for (std::size_t k = 0; k < n_obj; ++k) {
      const ObjectSpec& o = scene_.objects[k];
      if (f < o.first_frame || f > o.last_frame) continue;

      const Occlusion* worst = nullptr;
      for (const Occlusion& occ : o.occlusions) {
        if (f >= occ.start && f <= occ.end && (!worst || occ.severity > worst->severity)) {
          worst = &occ;
        }
      }
      const Eigen::VectorXd& self = own[k][static_cast<std::size_t>(f)];
      Eigen::VectorXd effective = self;
      double visibility = 1.0;
      if (worst) {
        const double sev = std::clamp(worst->severity, 0.0, 1.0);
        visibility = 1.0 - sev;
        Eigen::VectorXd occ_app = static_app;
        if (worst->occluder) {
          for (std::size_t m = 0; m < n_obj; ++m) {
            const ObjectSpec& other = scene_.objects[m];
            if (other.id == *worst->occluder && f >= other.first_frame && f <= other.last_frame) {
              occ_app = own[m][static_cast<std::size_t>(f)];
            }
          }
        }
        effective = normalized_or((1.0 - sev) * self + sev * occ_app, self);
      }
      obs.objects.push_back({o.id, trajectory_box(o.trajectory, f), std::move(effective), visibility});
    }
    frames_.push_back(std::move(obs));
  }
}

const FrameObs& SimWorld::frame(int f) const {
  if (f < 0 || f >= scene_.length) {
    throw ContractError("frame " + std::to_string(f) + " outside scene of length " +
                        std::to_string(scene_.length));
  }
  return frames_[static_cast<std::size_t>(f)];
}

const ObjectObs* SimWorld::find(int f, int id) const {
  for (const ObjectObs& o : frame(f).objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

BBox SimWorld::target_box(int f) const {
  if (const ObjectObs* o = find(f, scene_.target_id)) {
    return o->box;
  }
  return trajectory_box(scene_.object(scene_.target_id).trajectory, f);
}

std::vector<BBox> SimWorld::ground_truth() const {
  std::vector<BBox> out;
  out.reserve(static_cast<std::size_t>(scene_.length));
  for (int f = 0; f < scene_.length; ++f) out.push_back(target_box(f));
  return out;
}

double appearance_score(const Eigen::VectorXd& tpl, const Eigen::VectorXd& appearance,
                        double visibility) {
  const double nt = tpl.norm();
  const double na = appearance.norm();
  if (nt < 1e-12 || na < 1e-12 || tpl.size() != appearance.size()) {
    return 0.0;
  }
  const double cosine = tpl.dot(appearance) / (nt * na);
  return std::clamp(visibility * cosine, 0.0, 1.0);
}

MockTracker::MockTracker(std::shared_ptr<const SimWorld> world) : world_(std::move(world)) {
  if (!world_) throw ContractError("mock tracker needs a world");
}

int MockTracker::frame_count() const { return world_->length(); }

void MockTracker::check_frame(int frame) const {
  if (frame < 0 || frame >= world_->length()) {
    throw ContractError("frame " + std::to_string(frame) + " out of range [0, " +
                        std::to_string(world_->length()) + ")");
  }
}

Template MockTracker::make_template(int frame, const BBox& box) const {
  check_frame(frame);
  const FrameObs& obs = world_->frame(frame);
  Eigen::VectorXd features;
  for (const ObjectObs& o : obs.objects) {
    const double overlap = iou(box, o.box);
    if (features.size() == 0) features = Eigen::VectorXd::Zero(o.appearance.size());
    if (overlap > 0.0) features += overlap * o.appearance;
  }
  if (features.size() > 0 && features.norm() > 1e-12) {
    features.normalize();
  }
  return Template{frame, box, std::move(features)};
}

RawCandidates MockTracker::propose(const Template& tpl, int frame, const BBox& prior) const {
  check_frame(frame);
  const Scene& scene = world_->scene();
  const double radius = scene.sim.search_radius * prior.diagonal();

  RawCandidates out;
  for (const ObjectObs& o : world_->frame(frame).objects) {
    if (center_distance(o.box, prior) > radius) continue;
    BBox box = o.box;
    if (scene.sim.jitter > 0.0) {
      std::mt19937_64 rng(detail::mix_seed(scene.seed, 0x7177E4u, std::uint64_t(o.id), std::uint64_t(frame)));
      std::normal_distribution<double> normal(0.0, scene.sim.jitter);
      const double dx = normal(rng), dy = normal(rng), dw = normal(rng), dh = normal(rng);
      box = BBox(box.x() + dx, box.y() + dy, std::max(1.0, box.w() + 0.5 * dw),
                 std::max(1.0, box.h() + 0.5 * dh));
    }
    out.boxes.push_back(box);
    out.scores.push_back(appearance_score(tpl.features, o.appearance, o.visibility));
  }

  if (scene.sim.clutter > 0) {
    std::mt19937_64 rng(detail::mix_seed(scene.seed, 0xC1077Eu, std::uint64_t(frame), 0));
    std::uniform_real_distribution<double> ux(0.0, scene.width), uy(0.0, scene.height);
    std::uniform_real_distribution<double> uw(20.0, 50.0), uh(40.0, 90.0);
    std::uniform_real_distribution<double> us(0.0, scene.sim.clutter_score);
    for (int k = 0; k < scene.sim.clutter; ++k) {
      const BBox box = BBox::from_center(ux(rng), uy(rng), uw(rng), uh(rng));
      const double score = us(rng);
      if (center_distance(box, prior) <= radius) {
        out.boxes.push_back(box);
        out.scores.push_back(score);
      }
    }
  }

  if (out.empty()) {
    // Nothing in range: the response map peaks nowhere, hold the prior.
    out.boxes.push_back(prior);
    out.scores.push_back(0.0);
  }
  return out;
}

}  // namespace cyclematch
