#pragma once

// Shared test scaffolding: a tiny property runner, random generators,
// a scriptable tracker and independent reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cyclematch/geometry.hpp"
#include "cyclematch/matching.hpp"
#include "cyclematch/tracker_port.hpp"

namespace cyclematch::testkit {

using Rng = std::mt19937_64;

// --- property runner -----------------------------------------------------

struct PropertyResult {
  std::string module;
  std::string name;
  long long cases = 0;
  long long failures = 0;
  std::string first_failure;  // message of the first failing case
};

/// Runs `prop` on `cases` values drawn by `gen`. `prop` returns an empty
/// string on success, otherwise a description of the violation.
template <typename Gen, typename Prop>
PropertyResult check_property(std::string module, std::string name, long long cases, std::uint64_t seed,
                              Gen gen, Prop prop) {
  PropertyResult r{std::move(module), std::move(name), 0, 0, {}};
  Rng rng(seed);
  for (long long i = 0; i < cases; ++i) {
    auto value = gen(rng);
    std::string msg;
    try {
      msg = prop(value);
    } catch (const std::exception& e) {
      msg = std::string("threw: ") + e.what();
    }
    ++r.cases;
    if (!msg.empty()) {
      if (r.failures == 0) {
        r.first_failure = "case " + std::to_string(i) + " (seed " + std::to_string(seed) + "): " + msg;
      }
      ++r.failures;
    }
  }
  return r;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

/// Boxes on a 1/8 pixel grid so that sums and translations stay exact.
inline BBox grid_box(Rng& rng, double extent = 100.0) {
  auto q = [](double v) { return std::round(v * 8.0) / 8.0; };
  return BBox(q(uniform(rng, -extent, extent)), q(uniform(rng, -extent, extent)),
              q(uniform(rng, 1.0, 60.0)), q(uniform(rng, 1.0, 60.0)));
}

inline BBox near_box(Rng& rng, const BBox& b, double spread) {
  return BBox(b.x() + uniform(rng, -spread, spread), b.y() + uniform(rng, -spread, spread),
              std::max(0.5, b.w() + uniform(rng, -spread, spread)),
              std::max(0.5, b.h() + uniform(rng, -spread, spread)));
}

inline std::string describe(const BBox& b) {
  std::ostringstream s;
  s.precision(17);
  s << "(" << b.x() << "," << b.y() << "," << b.w() << "," << b.h() << ")";
  return s.str();
}

// --- scripted tracker ------------------------------------------------------

/// TrackerPort whose behaviour is given by callables; counts proposals.
class FnTracker final : public TrackerPort {
 public:
  using ProposeFn = std::function<RawCandidates(const Template&, int, const BBox&)>;

  FnTracker(int frames, ProposeFn propose) : frames_(frames), propose_(std::move(propose)) {}

  int frame_count() const override { return frames_; }
  Template make_template(int frame, const BBox& box) const override {
    Eigen::VectorXd f(4);
    f << box.x(), box.y(), box.w(), box.h();
    return Template{frame, box, f};
  }
  RawCandidates propose(const Template& tpl, int frame, const BBox& prior) const override {
    ++calls_;
    return propose_(tpl, frame, prior);
  }
  long long calls() const { return calls_; }

 private:
  int frames_;
  ProposeFn propose_;
  mutable long long calls_ = 0;
};

// --- oracles ----------------------------------------------------------------

/// Mean IoU over shared frames computed frame by frame from absolute frame
/// numbers rather than offsets.
inline double naive_tracklet_iou(const TrackletD& p, const TrackletD& q) {
  double sum = 0.0;
  int count = 0;
  const int lo = std::max(p.start_frame(), q.start_frame());
  for (int f = p.end_frame(); f >= lo; --f) {
    sum += iou(p.at_frame(f), q.at_frame(f));
    ++count;
  }
  return std::clamp(sum / count, 0.0, 1.0);
}

struct BruteMatch {
  double best = 0.0;                        // max total weight
  std::vector<std::pair<int, int>> pairs;   // lexicographically first optimum, real columns only
};

/// Exhaustive search over all permutations of the zero-padded square matrix.
/// Ties are broken as hungarian_max documents: first optimal permutation in
/// lexicographic order of the real rows' columns.
inline BruteMatch brute_force_match(const Eigen::MatrixXd& w) {
  const int rows = static_cast<int>(w.rows());
  const int cols = static_cast<int>(w.cols());
  BruteMatch out;
  if (rows == 0 || cols == 0) return out;
  const int n = std::max(rows, cols);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  auto total_of = [&](const std::vector<int>& p) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (p[static_cast<std::size_t>(r)] < cols) s += w(r, p[static_cast<std::size_t>(r)]);
    }
    return s;
  };
  double best = -std::numeric_limits<double>::infinity();
  do {
    best = std::max(best, total_of(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.best = best;

  double max_abs = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) max_abs = std::max(max_abs, std::abs(w(r, c)));
  const double tol = 1e-9 * std::max(1.0, max_abs * n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (total_of(perm) >= best - tol) {
      for (int r = 0; r < rows; ++r) {
        if (perm[static_cast<std::size_t>(r)] < cols) out.pairs.emplace_back(r, perm[static_cast<std::size_t>(r)]);
      }
      break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

/// Random weight matrix: continuous, or quantized to k/4 to provoke ties,
/// optionally with zero blocks.
inline Eigen::MatrixXd random_weights(Rng& rng, int max_dim = 6) {
  const int r = uniform_int(rng, 1, max_dim);
  const int c = uniform_int(rng, 1, max_dim);
  Eigen::MatrixXd w(r, c);
  const int mode = uniform_int(rng, 0, 2);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      double v = uniform(rng, 0.0, 1.0);
      if (mode == 1) v = std::floor(v * 5.0) / 4.0;
      if (mode == 2 && coin(rng, 0.4)) v = 0.0;
      w(i, j) = std::min(v, 1.0);
    }
  }
  return w;
}

/// Scalar constant-velocity filter for one coordinate (position, velocity),
/// used to cross-check the 8-state filter dimension by dimension.
struct ScalarCV {
  double p = 0.0, v = 0.0;   // state
  double a = 0.0, b = 0.0, c = 0.0;  // covariance [[a, b], [b, c]]

  void predict(double q_pos, double q_vel) {
    p += v;
    const double a2 = a + 2.0 * b + c + q_pos * q_pos;
    const double b2 = b + c;
    const double c2 = c + q_vel * q_vel;
    a = a2;
    b = b2;
    c = c2;
  }
  void update(double z, double r) {
    const double s = a + r * r;
    const double kp = a / s, kv = b / s;
    const double innov = z - p;
    p += kp * innov;
    v += kv * innov;
    const double a2 = a * (r * r) / s;
    const double b2 = b * (r * r) / s;
    const double c2 = c - b * b / s;
    a = a2;
    b = b2;
    c = c2;
  }
};

struct ScalarKalmanOracle {
  ScalarCV dims[4];  // cx, cy, w, h
  double pos_w = 1.0 / 20, vel_w = 1.0 / 160, min_size = 1.0;

  void init(const BBox& b, double init_pos = 2.0, double init_vel = 10.0) {
    const double z[4] = {b.cx(), b.cy(), b.w(), b.h()};
    const double sp = init_pos * pos_w * b.h(), sv = init_vel * vel_w * b.h();
    for (int i = 0; i < 4; ++i) dims[i] = ScalarCV{z[i], 0.0, sp * sp, 0.0, sv * sv};
  }
  void predict() {
    const double h = std::max(dims[3].p, min_size);
    for (auto& d : dims) d.predict(pos_w * h, vel_w * h);
    dims[2].p = std::max(dims[2].p, min_size);
    dims[3].p = std::max(dims[3].p, min_size);
  }
  void update(const BBox& b) {
    const double h = std::max(dims[3].p, min_size);
    const double z[4] = {b.cx(), b.cy(), b.w(), b.h()};
    for (int i = 0; i < 4; ++i) dims[i].update(z[i], pos_w * h);
    dims[2].p = std::max(dims[2].p, min_size);
    dims[3].p = std::max(dims[3].p, min_size);
  }
};

}  // namespace cyclematch::testkit
