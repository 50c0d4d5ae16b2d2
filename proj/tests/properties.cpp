#include "properties.hpp"

#include <Eigen/Eigenvalues>

#include "cyclematch/candidate_select.hpp"
#include "cyclematch/evalkit.hpp"
#include "cyclematch/matching.hpp"
#include "cyclematch/motion.hpp"
#include "cyclematch/pools.hpp"
#include "cyclematch/simworld.hpp"

namespace cyclematch::testkit {

namespace {

std::string fail_if(bool bad, const std::string& msg) { return bad ? msg : std::string(); }

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

struct BoxPair {
  BBox a, b;
};

BoxPair random_pair(Rng& rng) {
  const BBox a = grid_box(rng, 60.0);
  switch (uniform_int(rng, 0, 2)) {
    case 0: return {a, grid_box(rng, 60.0)};
    case 1: {
      auto q = [](double v) { return std::round(v * 8.0) / 8.0; };
      return {a, BBox(q(a.x() + uniform(rng, -20, 20)), q(a.y() + uniform(rng, -20, 20)),
                      q(std::max(1.0, a.w() + uniform(rng, -10, 10))),
                      q(std::max(1.0, a.h() + uniform(rng, -10, 10))))};
    }
    default: return {a, a};
  }
}

TrackletD random_tracklet(Rng& rng, int end, int len, const BBox& seed_box) {
  std::vector<BBox> boxes;
  BBox cur = seed_box;
  for (int k = 0; k < len; ++k) {
    boxes.push_back(cur);
    cur = near_box(rng, cur, 4.0);
  }
  return TrackletD(end, boxes);
}

RawCandidates random_candidates(Rng& rng) {
  const int n = uniform_int(rng, 1, 10);
  const int clusters = uniform_int(rng, 1, 3);
  std::vector<BBox> centers;
  for (int c = 0; c < clusters; ++c) centers.push_back(grid_box(rng, 80.0));
  const bool quantized = coin(rng, 0.3);
  RawCandidates out;
  for (int i = 0; i < n; ++i) {
    const BBox& c = centers[static_cast<std::size_t>(uniform_int(rng, 0, clusters - 1))];
    out.boxes.push_back(coin(rng, 0.2) ? c : near_box(rng, c, uniform(rng, 0.5, 12.0)));
    double s = uniform(rng, 0.0, 1.0);
    if (quantized) s = std::floor(s * 4.0 + 1.0) / 4.0;
    out.scores.push_back(std::min(s, 1.0));
  }
  return out;
}

}  // namespace

// --- geometry -------------------------------------------------------------

std::vector<PropertyResult> geometry_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "geometry";

  out.push_back(check_property(m, "iou range and symmetry", cases, seed, random_pair, [](const BoxPair& p) {
    const double ab = iou(p.a, p.b), ba = iou(p.b, p.a);
    if (!(ab >= 0.0 && ab <= 1.0)) return "iou out of range: " + std::to_string(ab);
    return fail_if(ab != ba, "iou not symmetric");
  }));

  out.push_back(check_property(m, "self iou is one", cases, seed + 1, [](Rng& r) { return grid_box(r); }, [](const BBox& b) {
    return fail_if(iou(b, b) != 1.0, "iou(b, b) != 1 for " + describe(b));
  }));

  out.push_back(check_property(
      m, "iou translation invariance", cases, seed + 2,
      [](Rng& rng) {
        auto q = [](double v) { return std::round(v * 8.0) / 8.0; };
        return std::make_tuple(random_pair(rng), q(uniform(rng, -500, 500)), q(uniform(rng, -500, 500)));
      },
      [](const std::tuple<BoxPair, double, double>& t) {
        const auto& [p, dx, dy] = t;
        return fail_if(iou(p.a, p.b) != iou(p.a.translated(dx, dy), p.b.translated(dx, dy)),
                       "translation changed iou");
      }));

  out.push_back(check_property(m, "positive iou iff overlap", cases, seed + 3, random_pair, [](const BoxPair& p) {
    const bool overlap = p.a.x() < p.b.right() && p.b.x() < p.a.right() && p.a.y() < p.b.bottom() &&
                         p.b.y() < p.a.bottom();
    return fail_if(overlap != (iou(p.a, p.b) > 0.0), "overlap test disagrees with iou");
  }));

  out.push_back(check_property(
      m, "iou shrinks as a box slides away", cases, seed + 8,
      [](Rng& rng) { return std::make_tuple(grid_box(rng, 50.0), uniform(rng, 0.0, 30.0), uniform(rng, 0.0, 30.0)); },
      [](const std::tuple<BBox, double, double>& t) {
        const auto& [a, d1, d2] = t;
        const double lo = std::min(d1, d2), hi = std::max(d1, d2);
        return fail_if(iou(a, a.translated(hi, 0.0)) > iou(a, a.translated(lo, 0.0)),
                       "iou grew while the intersection shrank");
      }));

  out.push_back(check_property(
      m, "contained box iou is area ratio", cases, seed + 4,
      [](Rng& rng) {
        const BBox outer = grid_box(rng, 50.0);
        const double w = uniform(rng, 0.1, 1.0) * outer.w(), h = uniform(rng, 0.1, 1.0) * outer.h();
        const BBox inner(outer.x() + uniform(rng, 0.0, outer.w() - w), outer.y() + uniform(rng, 0.0, outer.h() - h),
                         w, h);
        return BoxPair{outer, inner};
      },
      [](const BoxPair& p) {
        const double want = (p.b.w() * p.b.h()) / (p.a.w() * p.a.h());
        return fail_if(!close(iou(p.a, p.b), want, 1e-9), "contained iou mismatch");
      }));

  out.push_back(check_property(
      m, "tracklet iou matches frame-wise oracle", cases, seed + 5,
      [](Rng& rng) {
        const int end = uniform_int(rng, 0, 50);
        const BBox base = grid_box(rng, 40.0);
        const TrackletD p = random_tracklet(rng, end, uniform_int(rng, 1, 12), base);
        const TrackletD q = random_tracklet(rng, end, uniform_int(rng, 1, 12),
                                            coin(rng) ? base : near_box(rng, base, 10.0));
        return std::make_pair(p, q);
      },
      [](const std::pair<TrackletD, TrackletD>& pq) {
        const double got = tracklet_avg_iou(pq.first, pq.second);
        const double want = naive_tracklet_iou(pq.first, pq.second);
        if (!(got >= 0.0 && got <= 1.0)) return std::string("tracklet iou out of range");
        if (got != tracklet_avg_iou(pq.second, pq.first)) return std::string("tracklet iou not symmetric");
        return fail_if(!close(got, want, 1e-12), "oracle mismatch: " + std::to_string(got) + " vs " +
                                                     std::to_string(want));
      }));

  out.push_back(check_property(
      m, "tracklets with different end frames are rejected", cases, seed + 6,
      [](Rng& rng) {
        const int end = uniform_int(rng, 0, 50);
        const int other = end + (coin(rng) ? 1 : -1) * uniform_int(rng, 1, 5);
        const BBox base = grid_box(rng);
        return std::make_pair(random_tracklet(rng, end, uniform_int(rng, 1, 5), base),
                              random_tracklet(rng, other, uniform_int(rng, 1, 5), base));
      },
      [](const std::pair<TrackletD, TrackletD>& pq) {
        try {
          tracklet_avg_iou(pq.first, pq.second);
        } catch (const ContractError&) {
          return std::string();
        }
        return std::string("no ContractError");
      }));

  out.push_back(check_property(
      m, "prepend shifts and caps", cases, seed + 7,
      [](Rng& rng) {
        const int tau = uniform_int(rng, 1, 12);
        const BBox base = grid_box(rng);
        return std::make_tuple(random_tracklet(rng, uniform_int(rng, 0, 40), uniform_int(rng, 1, tau), base),
                               near_box(rng, base, 5.0), tau);
      },
      [](const std::tuple<TrackletD, BBox, int>& t) {
        const auto& [tr, box, tau] = t;
        const TrackletD next = tr.prepended(box, tau);
        if (next.end_frame() != tr.end_frame() + 1) return std::string("end frame not advanced");
        if (next.length() != std::min(tr.length() + 1, tau)) return std::string("wrong length");
        if (!(next.head() == box)) return std::string("head is not the new box");
        for (int k = 1; k < next.length(); ++k) {
          if (!(next.back(k) == tr.back(k - 1))) return "box " + std::to_string(k) + " not shifted";
        }
        for (int f = next.start_frame(); f <= tr.end_frame(); ++f) {
          if (!(next.at_frame(f) == tr.at_frame(f))) return "frame " + std::to_string(f) + " moved";
        }
        return std::string();
      }));
  return out;
}

// --- candidate_select -------------------------------------------------------

std::vector<PropertyResult> candidate_select_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "candidate_select";

  auto with_alpha = [](Rng& rng) {
    const double alpha = coin(rng, 0.2) ? std::floor(uniform(rng, 0.0, 5.0)) / 4.0 : uniform(rng, 0.0, 1.0);
    return std::make_pair(random_candidates(rng), std::min(alpha, 1.0));
  };

  out.push_back(check_property(m, "confidence filter is an ordered subset", cases, seed, with_alpha,
                               [](const std::pair<RawCandidates, double>& p) {
    const auto& [raw, alpha] = p;
    const RawCandidates f = filter_by_confidence(raw, alpha);
    std::size_t j = 0;
    for (std::size_t i = 0; i < raw.size() && j < f.size(); ++i) {
      if (raw.boxes[i] == f.boxes[j] && raw.scores[i] == f.scores[j]) ++j;
    }
    if (j != f.size()) return std::string("not an ordered subset");
    return fail_if(f.empty(), "filter emptied the set");
  }));

  out.push_back(check_property(m, "confidence filter threshold", cases, seed + 1, with_alpha,
                               [](const std::pair<RawCandidates, double>& p) {
    const auto& [raw, alpha] = p;
    const double best = *std::max_element(raw.scores.begin(), raw.scores.end());
    const RawCandidates f = filter_by_confidence(raw, alpha);
    std::size_t expected = 0;
    for (double s : raw.scores) expected += (s > alpha * best || s == best);
    if (expected != f.size()) return std::string("kept count differs from threshold rule");
    for (double s : f.scores) {
      if (!(s > alpha * best || s == best)) return std::string("kept a box at or below threshold");
    }
    return std::string();
  }));

  auto nms_input = [](Rng& rng) {
    return std::make_tuple(random_candidates(rng), uniform(rng, 0.0, 0.9), uniform(rng, 0.001, 1.0),
                           coin(rng, 0.3) ? 0.0 : uniform(rng, 0.0, 0.1));
  };
  using NmsIn = std::tuple<RawCandidates, double, double, double>;

  out.push_back(check_property(m, "soft-nms keeps a subset with lower scores", cases, seed + 2, nms_input,
                               [](const NmsIn& t) {
    const auto& [raw, thr, sigma, floor] = t;
    const RawCandidates o = soft_nms(raw, thr, sigma, floor);
    if (o.size() > raw.size() || o.empty()) return std::string("bad output size");
    std::vector<bool> used(raw.size(), false);
    for (std::size_t k = 0; k < o.size(); ++k) {
      bool found = false;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!used[i] && raw.boxes[i] == o.boxes[k] && o.scores[k] <= raw.scores[i]) {
          used[i] = true;
          found = true;
          break;
        }
      }
      if (!found) return "output box " + std::to_string(k) + " has no source";
    }
    return std::string();
  }));

  out.push_back(check_property(m, "soft-nms visits in non-increasing score order", cases, seed + 3, nms_input,
                               [](const NmsIn& t) {
    const auto& [raw, thr, sigma, floor] = t;
    const RawCandidates o = soft_nms(raw, thr, sigma, floor);
    const std::size_t top = raw.argmax();
    if (!(o.boxes[0] == raw.boxes[top]) || o.scores[0] != raw.scores[top]) {
      return std::string("first output is not the argmax");
    }
    for (std::size_t k = 1; k < o.size(); ++k) {
      if (o.scores[k] > o.scores[k - 1]) return std::string("scores increase");
    }
    return std::string();
  }));

  out.push_back(check_property(m, "soft-nms floor", cases, seed + 4, nms_input, [](const NmsIn& t) {
    const auto& [raw, thr, sigma, floor] = t;
    const RawCandidates o = soft_nms(raw, thr, sigma, floor);
    for (std::size_t k = 0; k < o.size(); ++k) {
      bool undecayed = false;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        undecayed |= raw.boxes[i] == o.boxes[k] && raw.scores[i] == o.scores[k];
      }
      if (o.scores[k] < floor && !undecayed) return std::string("decayed score below floor survived");
    }
    return std::string();
  }));

  out.push_back(check_property(
      m, "soft-nms pairwise decay formula", cases, seed + 5,
      [](Rng& rng) {
        const BBox a = grid_box(rng, 30.0);
        const BBox b = coin(rng, 0.8) ? near_box(rng, a, uniform(rng, 0.5, 15.0)) : grid_box(rng, 30.0);
        const double s1 = uniform(rng, 0.5, 1.0), s2 = uniform(rng, 0.0, 0.5);
        return std::make_tuple(a, b, s1, s2, uniform(rng, 0.0, 0.8), uniform(rng, 0.001, 1.0),
                               uniform(rng, 0.0, 0.05));
      },
      [](const std::tuple<BBox, BBox, double, double, double, double, double>& t) {
        const auto& [a, b, s1, s2, thr, sigma, floor] = t;
        const RawCandidates o = soft_nms(RawCandidates{{b, a}, {s2, s1}}, thr, sigma, floor);
        const double ov = iou(a, b);
        const double want = ov > thr ? s2 * std::exp(-ov * ov / sigma) : s2;
        const bool keep = ov > thr ? want >= floor : true;
        if (!(o.boxes[0] == a)) return std::string("higher score not first");
        if (keep != (o.size() == 2)) return std::string("keep/drop decision wrong");
        return fail_if(keep && o.scores[1] != want, "decayed score mismatch");
      }));

  out.push_back(check_property(m, "soft-nms without overlap only sorts", cases, seed + 6,
                               [](Rng& rng) {
    RawCandidates raw;
    const int n = uniform_int(rng, 1, 8);
    for (int i = 0; i < n; ++i) {
      raw.boxes.push_back(BBox(100.0 * i, uniform(rng, 0, 50), uniform(rng, 1, 60), uniform(rng, 1, 60)));
      raw.scores.push_back(std::floor(uniform(rng, 0.0, 4.0)) / 4.0 + 0.125);
    }
    return raw;
  }, [](const RawCandidates& raw) {
    const RawCandidates o = soft_nms(raw, 0.0, 0.01, 1e-3);
    std::vector<std::size_t> idx(raw.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return raw.scores[x] > raw.scores[y]; });
    if (o.size() != raw.size()) return std::string("dropped a disjoint box");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (!(o.boxes[k] == raw.boxes[idx[k]]) || o.scores[k] != raw.scores[idx[k]]) {
        return std::string("not a stable score sort");
      }
    }
    return std::string();
  }));

  out.push_back(check_property(m, "assemble appends the motion box", cases, seed + 7,
                               [](Rng& rng) {
    return std::make_pair(random_candidates(rng), coin(rng) ? std::optional<BBox>(grid_box(rng)) : std::nullopt);
  }, [](const std::pair<RawCandidates, std::optional<BBox>>& p) {
    const CandidateSet s = assemble(p.first, p.second);
    if (s.appearance_count() != p.first.size()) return std::string("appearance count wrong");
    if (p.second) {
      if (!s.kalman_index || *s.kalman_index != p.first.size()) return std::string("kalman not last");
      if (!(s.boxes.back() == *p.second) || s.scores.back() != 0.0) return std::string("kalman box/score");
    } else if (s.kalman_index) {
      return std::string("unexpected kalman index");
    }
    const std::size_t top = s.top_index();
    return fail_if(s.is_kalman(top) || s.scores[top] != p.first.scores[p.first.argmax()], "top index wrong");
  }));
  return out;
}

// --- motion -----------------------------------------------------------------

namespace {

struct MotionCase {
  BBox start;
  std::vector<BBox> observations;
};

MotionCase random_motion_case(Rng& rng) {
  MotionCase c{BBox(uniform(rng, -200, 200), uniform(rng, -200, 200),
                    coin(rng, 0.1) ? uniform(rng, 0.2, 3.0) : uniform(rng, 5, 80),
                    coin(rng, 0.1) ? uniform(rng, 0.2, 3.0) : uniform(rng, 5, 120)),
               {}};
  const int steps = uniform_int(rng, 1, 15);
  BBox cur = c.start;
  const double vx = uniform(rng, -6, 6), vy = uniform(rng, -6, 6);
  for (int k = 0; k < steps; ++k) {
    cur = BBox(cur.x() + vx + uniform(rng, -3, 3), cur.y() + vy + uniform(rng, -3, 3),
               std::max(0.2, cur.w() + uniform(rng, -2, 2)), std::max(0.2, cur.h() + uniform(rng, -2, 2)));
    c.observations.push_back(cur);
  }
  return c;
}

std::string compare_oracle(const MotionState<double>& s, const ScalarKalmanOracle& o) {
  const double scale = std::max(1.0, s.covariance.cwiseAbs().maxCoeff());
  for (int i = 0; i < 4; ++i) {
    const ScalarCV& d = o.dims[i];
    if (!close(s.mean(i), d.p, 1e-9) || !close(s.mean(i + 4), d.v, 1e-9)) {
      return "mean mismatch in dim " + std::to_string(i);
    }
    if (std::abs(s.covariance(i, i) - d.a) > 1e-9 * scale || std::abs(s.covariance(i, i + 4) - d.b) > 1e-9 * scale ||
        std::abs(s.covariance(i + 4, i + 4) - d.c) > 1e-9 * scale) {
      return "covariance mismatch in dim " + std::to_string(i);
    }
  }
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if ((i % 4) != (j % 4) && std::abs(s.covariance(i, j)) > 1e-9 * scale) {
        return std::string("cross-dimension covariance appeared");
      }
    }
  }
  return {};
}

}  // namespace

std::vector<PropertyResult> motion_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "motion";
  const MotionNoise<double> noise;

  out.push_back(check_property(m, "matches per-axis scalar filter", cases, seed, random_motion_case,
                               [&](const MotionCase& c) {
    MotionState<double> s = motion_init(c.start, 0, noise);
    ScalarKalmanOracle o;
    o.init(c.start);
    if (auto msg = compare_oracle(s, o); !msg.empty()) return "init: " + msg;
    for (std::size_t k = 0; k < c.observations.size(); ++k) {
      s = motion_predict(s, noise).second;
      o.predict();
      if (auto msg = compare_oracle(s, o); !msg.empty()) return "predict " + std::to_string(k) + ": " + msg;
      s = motion_update(s, c.observations[k], noise);
      o.update(c.observations[k]);
      if (auto msg = compare_oracle(s, o); !msg.empty()) return "update " + std::to_string(k) + ": " + msg;
    }
    return std::string();
  }));

  out.push_back(check_property(m, "covariance stays symmetric PSD", cases, seed + 1, random_motion_case,
                               [&](const MotionCase& c) {
    MotionState<double> s = motion_init(c.start, 0, noise);
    auto check = [](const MotionState<double>& st) {
      if (st.covariance != st.covariance.transpose()) return std::string("asymmetric covariance");
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(st.covariance);
      const double lo = es.eigenvalues().minCoeff();
      return fail_if(lo < -1e-9 * std::max(1.0, es.eigenvalues().maxCoeff()),
                     "negative eigenvalue " + std::to_string(lo));
    };
    for (const BBox& z : c.observations) {
      s = motion_predict(s, noise).second;
      if (auto msg = check(s); !msg.empty()) return msg;
      s = motion_update(s, z, noise);
      if (auto msg = check(s); !msg.empty()) return msg;
    }
    return std::string();
  }));

  out.push_back(check_property(m, "predicted size respects the floor", cases, seed + 2, random_motion_case,
                               [&](const MotionCase& c) {
    MotionState<double> s = motion_init(c.start, 0, noise);
    for (const BBox& z : c.observations) {
      const auto [box, next] = motion_predict(s, noise);
      if (box.w() < noise.min_size || box.h() < noise.min_size) return std::string("size below floor");
      if (next.frame != s.frame + 1) return std::string("frame not advanced");
      s = motion_update(next, z, noise);
    }
    return std::string();
  }));

  out.push_back(check_property(
      m, "constant velocity convergence", cases, seed + 3,
      [](Rng& rng) {
        return std::make_tuple(BBox(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, 10, 60),
                                    uniform(rng, 20, 120)),
                               uniform(rng, -8, 8), uniform(rng, -8, 8));
      },
      [&](const std::tuple<BBox, double, double>& t) {
        const auto& [b0, vx, vy] = t;
        MotionState<double> s = motion_init(b0, 0, noise);
        for (int k = 1; k <= 60; ++k) {
          s = motion_predict(s, noise).second;
          s = motion_update(s, b0.translated(vx * k, vy * k), noise);
        }
        const BBox pred = motion_predict(s, noise).first;
        const BBox truth = b0.translated(vx * 61, vy * 61);
        return fail_if(center_distance(pred, truth) > 1e-2 * b0.h() || iou(pred, truth) < 0.99,
                       "prediction error " + std::to_string(center_distance(pred, truth)));
      }));

  out.push_back(check_property(m, "prediction mean follows velocity", cases, seed + 4, random_motion_case,
                               [&](const MotionCase& c) {
    MotionState<double> s = motion_init(c.start, 0, noise);
    for (const BBox& z : c.observations) {
      s = motion_update(motion_predict(s, noise).second, z, noise);
    }
    const auto next = motion_predict(s, noise).second;
    for (int i = 0; i < 2; ++i) {
      if (next.mean(i) != s.mean(i) + s.mean(i + 4)) return std::string("position not advanced by velocity");
    }
    return fail_if(next.mean.tail<4>() != s.mean.tail<4>(), "velocity changed in predict");
  }));
  return out;
}

// --- pools ------------------------------------------------------------------

namespace {

struct SyntheticPool {
  CandidatePool pool;
  std::size_t selected;
};

SyntheticPool random_pool(Rng& rng) {
  SyntheticPool s;
  s.pool.frame = uniform_int(rng, 1, 60);
  s.pool.tau = uniform_int(rng, 1, 12);
  const int k = uniform_int(rng, 1, 8);
  for (int i = 0; i < k; ++i) {
    const BBox b = grid_box(rng);
    const int len = uniform_int(rng, 1, std::min(s.pool.tau, s.pool.frame));
    s.pool.entries.push_back({static_cast<std::size_t>(i), b, random_tracklet(rng, s.pool.frame - 1, len, b)});
  }
  s.selected = static_cast<std::size_t>(uniform_int(rng, 0, k - 1));
  return s;
}

// Deterministic tracker: every object drifts one pixel right per frame, so
// the argmax box at frame f from prior p is p shifted by the frame step.
FnTracker drift_tracker() {
  return FnTracker(1000, [](const Template& tpl, int frame, const BBox& prior) {
    const double step = frame < tpl.source_frame ? -1.0 : 1.0;
    RawCandidates rc;
    rc.boxes = {prior.translated(step, 0.0), prior.translated(40.0, 40.0)};
    rc.scores = {0.9, 0.2};
    return rc;
  });
}

CandidateSet random_cands(Rng& rng) {
  RawCandidates raw;
  const int n = uniform_int(rng, 1, 6);
  for (int i = 0; i < n; ++i) {
    raw.boxes.push_back(grid_box(rng));
    raw.scores.push_back(uniform(rng, 0.1, 1.0));
  }
  return assemble(raw, coin(rng) ? std::optional<BBox>(grid_box(rng)) : std::nullopt);
}

}  // namespace

std::vector<PropertyResult> pools_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "pools";

  out.push_back(check_property(m, "neighbor shift keeps every unselected tracklet", cases, seed, random_pool,
                               [](const SyntheticPool& s) {
    const NeighborPool n = update_neighbor_pool(s.pool, s.selected);
    if (n.size() != s.pool.size() - 1) return std::string("cardinality is not |C| - 1");
    std::size_t j = 0;
    for (const CandidateEntry& e : s.pool.entries) {
      if (e.index == s.selected) continue;
      const TrackletD& t = n.tracklets[j++];
      if (t.end_frame() != s.pool.frame) return std::string("neighbor does not end at the pool frame");
      if (!(t.head() == e.box)) return std::string("head is not the candidate box");
      if (t.length() != std::min(e.tracklet.length() + 1, s.pool.tau)) return std::string("wrong length");
      for (int k = 1; k < t.length(); ++k) {
        if (!(t.back(k) == e.tracklet.back(k - 1))) return std::string("history not shifted");
      }
    }
    return std::string();
  }));

  out.push_back(check_property(m, "bad selection is rejected", cases, seed + 1, random_pool,
                               [](const SyntheticPool& s) {
    try {
      update_neighbor_pool(s.pool, s.pool.size() + s.selected);
    } catch (const ContractError&) {
      return std::string();
    }
    return std::string("no ContractError");
  }));

  out.push_back(check_property(
      m, "candidate pool shape", cases, seed + 2,
      [](Rng& rng) {
        const int t = uniform_int(rng, 1, 40);
        return std::make_tuple(random_cands(rng), t, uniform_int(rng, 0, t - 1), uniform_int(rng, 1, 12));
      },
      [](const std::tuple<CandidateSet, int, int, int>& c) {
        const auto& [cands, t, first, tau] = c;
        const FnTracker port = drift_tracker();
        const CandidatePool pool = build_candidate_pool(cands, port, t, tau, {}, first);
        const int span = std::min(tau, t - first);
        if (pool.size() != cands.size()) return std::string("pool size differs from candidate count");
        if (port.calls() != static_cast<long long>(cands.size()) * span) return std::string("wrong backtrack cost");
        for (std::size_t i = 0; i < pool.size(); ++i) {
          const CandidateEntry& e = pool.entries[i];
          if (e.index != i || !(e.box == cands.boxes[i])) return std::string("entry misaligned");
          if (e.tracklet.end_frame() != t - 1 || e.tracklet.length() != span) return std::string("tracklet shape");
          for (int k = 0; k < span; ++k) {
            if (!(e.tracklet.back(k) == cands.boxes[i].translated(-(k + 1.0), 0.0))) {
              return std::string("backtracked path wrong");
            }
          }
        }
        return std::string();
      }));

  out.push_back(check_property(
      m, "known tracklets are reused only when they fit", cases, seed + 3,
      [](Rng& rng) {
        const int t = uniform_int(rng, 2, 40);
        const int tau = uniform_int(rng, 1, 12);
        const CandidateSet cands = random_cands(rng);
        const std::size_t idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cands.size()) - 1));
        const int span = std::min(tau, t);
        const bool fits = coin(rng);
        const int len = fits ? span : (span > 1 ? span - 1 : span + 1);
        return std::make_tuple(cands, t, tau, KnownTracklet{idx, random_tracklet(rng, t - 1, len, grid_box(rng))}, fits);
      },
      [](const std::tuple<CandidateSet, int, int, KnownTracklet, bool>& c) {
        const auto& [cands, t, tau, known, fits] = c;
        const FnTracker port = drift_tracker();
        const KnownTracklet ks[] = {known};
        const CandidatePool pool = build_candidate_pool(cands, port, t, tau, ks, 0);
        const bool reused = pool.entries[known.index].tracklet == known.tracklet;
        const int span = std::min(tau, t);
        const long long expected = static_cast<long long>(cands.size() - (fits ? 1 : 0)) * span;
        if (reused != fits) return std::string("reuse decision wrong");
        return fail_if(port.calls() != expected, "unexpected backtrack count");
      }));

  out.push_back(check_property(
      m, "stable-path neighbor upkeep", cases, seed + 4,
      [](Rng& rng) {
        const int frame = uniform_int(rng, 1, 50);
        const int tau = uniform_int(rng, 1, 10);
        NeighborPool prev;
        const int np = uniform_int(rng, 0, 5);
        for (int i = 0; i < np; ++i) {
          prev.tracklets.push_back(random_tracklet(rng, coin(rng, 0.9) ? frame - 1 : frame - 2,
                                                   uniform_int(rng, 1, tau), grid_box(rng, 40.0)));
        }
        CandidateSet cands = random_cands(rng);
        // Put some candidates right on top of previous neighbors.
        for (std::size_t i = 0; i < cands.size() && i < prev.size(); ++i) {
          if (!cands.is_kalman(i) && coin(rng, 0.6)) cands.boxes[i] = near_box(rng, prev.tracklets[i].head(), 1.0);
        }
        const std::size_t sel = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cands.size()) - 1));
        return std::make_tuple(prev, cands, sel, frame, tau, uniform(rng, 0.1, 0.9));
      },
      [](const std::tuple<NeighborPool, CandidateSet, std::size_t, int, int, double>& c) {
        const auto& [prev, cands, sel, frame, tau, assoc] = c;
        const NeighborPool n = carry_neighbors(prev, cands, sel, frame, tau, assoc);
        std::vector<std::size_t> expect;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          if (i != sel && !cands.is_kalman(i)) expect.push_back(i);
        }
        if (n.size() != expect.size()) return std::string("wrong neighbor count");
        std::vector<bool> used(prev.size(), false);
        for (std::size_t j = 0; j < n.size(); ++j) {
          const TrackletD& t = n.tracklets[j];
          if (t.end_frame() != frame || !(t.head() == cands.boxes[expect[j]])) return std::string("head/end wrong");
          if (t.length() > std::max(1, tau)) return std::string("longer than tau");
          if (t.length() == 1) continue;
          bool matched = false;
          for (std::size_t p = 0; p < prev.size() && !matched; ++p) {
            const TrackletD& q = prev.tracklets[p];
            if (used[p] || q.end_frame() != frame - 1) continue;
            if (t.length() != std::min(q.length() + 1, tau)) continue;
            bool same = true;
            for (int k = 1; k < t.length(); ++k) same &= t.back(k) == q.back(k - 1);
            if (same && iou(cands.boxes[expect[j]], q.head()) >= assoc) {
              used[p] = true;
              matched = true;
            }
          }
          if (!matched) return std::string("extended tracklet has no valid predecessor");
        }
        return std::string();
      }));
  return out;
}

// --- evalkit ------------------------------------------------------------------

namespace {

struct Sequence {
  std::vector<BBox> pred, gt;
};

Sequence random_sequence(Rng& rng) {
  Sequence s;
  const int n = uniform_int(rng, 1, 40);
  auto q = [](double v) { return std::round(v * 8.0) / 8.0; };
  for (int i = 0; i < n; ++i) {
    const BBox g = grid_box(rng, 200.0);
    s.gt.push_back(g);
    switch (uniform_int(rng, 0, 3)) {
      case 0: s.pred.push_back(g); break;
      case 1: s.pred.push_back(BBox(q(g.x() + uniform(rng, -8, 8)), q(g.y() + uniform(rng, -8, 8)),
                                    q(std::max(1.0, g.w() + uniform(rng, -6, 6))),
                                    q(std::max(1.0, g.h() + uniform(rng, -6, 6)))));
        break;
      case 2: s.pred.push_back(g.translated(500.0, 0.0)); break;
      default: s.pred.push_back(grid_box(rng, 200.0));
    }
  }
  return s;
}

}  // namespace

std::vector<PropertyResult> evalkit_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "evalkit";

  out.push_back(check_property(m, "rates are bounded and ordered", cases, seed, random_sequence,
                               [](const Sequence& s) {
    const EvalReport r = evaluate(s.pred, s.gt);
    for (double v : {r.accuracy, r.robustness, r.eao_lite, r.auc, r.precision, r.norm_precision, r.ao, r.sr50, r.sr75}) {
      if (!(v >= 0.0 && v <= 1.0)) return std::string("rate out of [0, 1]");
    }
    return fail_if(r.sr75 > r.sr50, "sr75 > sr50");
  }));

  out.push_back(check_property(m, "auc equals brute-force double loop", cases, seed + 1, random_sequence,
                               [](const Sequence& s) {
    double total = 0.0;
    for (int k = 0; k <= 50; ++k) {
      const double th = k / 50.0;
      int hits = 0;
      for (std::size_t i = 0; i < s.pred.size(); ++i) {
        const double v = iou(s.pred[i], s.gt[i]);
        if (v > 0.0 && v >= th) ++hits;
      }
      total += double(hits) / double(s.pred.size());
    }
    const double want = total / 51.0;
    const double got = success_metrics(s.pred, s.gt).auc;
    return fail_if(!close(got, want, 1e-12), "auc " + std::to_string(got) + " vs " + std::to_string(want));
  }));

  out.push_back(check_property(
      m, "metrics are translation invariant", cases, seed + 2,
      [](Rng& rng) {
        auto q = [](double v) { return std::round(v * 8.0) / 8.0; };
        return std::make_tuple(random_sequence(rng), q(uniform(rng, -1000, 1000)), q(uniform(rng, -1000, 1000)));
      },
      [](const std::tuple<Sequence, double, double>& t) {
        const auto& [s, dx, dy] = t;
        Sequence moved;
        for (std::size_t i = 0; i < s.pred.size(); ++i) {
          moved.pred.push_back(s.pred[i].translated(dx, dy));
          moved.gt.push_back(s.gt[i].translated(dx, dy));
        }
        const EvalReport a = evaluate(s.pred, s.gt), b = evaluate(moved.pred, moved.gt);
        for (const char* name : metric_names()) {
          if (metric_value(a, name) != metric_value(b, name)) return std::string("metric changed: ") + name;
        }
        return fail_if(a.failures != b.failures, "failures changed");
      }));

  out.push_back(check_property(
      m, "eao-lite over the full length equals ao without failures", cases, seed + 3,
      [](Rng& rng) {
        Sequence s = random_sequence(rng);
        for (std::size_t i = 0; i < s.pred.size(); ++i) {
          if (iou(s.pred[i], s.gt[i]) == 0.0) s.pred[i] = s.gt[i];
        }
        return s;
      },
      [](const Sequence& s) {
        const int n = static_cast<int>(s.pred.size());
        const int full[] = {n};
        const double e = eao_lite(s.pred, s.gt, full);
        const double ao = success_metrics(s.pred, s.gt).ao;
        return fail_if(!close(e, ao, 1e-12), "eao " + std::to_string(e) + " vs ao " + std::to_string(ao));
      }));

  out.push_back(check_property(
      m, "constant overlap threshold arithmetic", cases, seed + 4,
      [](Rng& rng) {
        double c;
        do {
          c = uniform(rng, 0.02, 1.0);
        } while (std::abs(c - 0.5) < 1e-6 || std::abs(c - 0.75) < 1e-6);
        return std::make_tuple(c, uniform_int(rng, 1, 30), grid_box(rng));
      },
      [](const std::tuple<double, int, BBox>& t) {
        const auto& [c, n, g] = t;
        // Same top-left corner and height, width stretched by 1/c: IoU = c.
        const BBox p(g.x(), g.y(), g.w() / c, g.h());
        const std::vector<BBox> pred(static_cast<std::size_t>(n), p), gt(static_cast<std::size_t>(n), g);
        const SuccessResult r = success_metrics(pred, gt);
        if (!close(r.ao, c, 1e-9)) return std::string("ao differs from the constant overlap");
        if (r.sr50 != (c > 0.5 ? 1.0 : 0.0)) return std::string("sr50 wrong");
        if (r.sr75 != (c > 0.75 ? 1.0 : 0.0)) return std::string("sr75 wrong");
        int passed = 0;
        for (double th : success_thresholds()) passed += iou(p, g) >= th;
        return fail_if(!close(r.auc, passed / 51.0, 1e-12), "auc step count wrong");
      }));

  out.push_back(check_property(m, "vot protocol matches a frame walker", cases, seed + 5,
                               [](Rng& rng) { return std::make_pair(random_sequence(rng), uniform_int(rng, 0, 6)); },
                               [](const std::pair<Sequence, int>& p) {
    const auto& [s, skip] = p;
    const VotResult r = vot_metrics(s.pred, s.gt, 0.0, skip);
    // Independent walk: a countdown of frames to ignore after each failure.
    int ignore = 0, tracked = 0;
    double sum = 0.0;
    std::vector<int> fails;
    for (std::size_t i = 0; i < s.pred.size(); ++i) {
      if (ignore > 0) {
        --ignore;
        continue;
      }
      const double v = iou(s.pred[i], s.gt[i]);
      if (v == 0.0) {
        fails.push_back(static_cast<int>(i));
        ignore = skip;
        continue;
      }
      sum += v;
      ++tracked;
    }
    if (fails != r.failures) return std::string("failure frames differ");
    if (!close(r.robustness, double(tracked) / s.pred.size(), 1e-12)) return std::string("robustness differs");
    return fail_if(!close(r.accuracy, tracked ? sum / tracked : 0.0, 1e-12), "accuracy differs");
  }));
  return out;
}

// --- matching -------------------------------------------------------------------

std::vector<PropertyResult> matching_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "matching";

  out.push_back(check_property(m, "hungarian equals exhaustive search", cases, seed,
                               [](Rng& rng) { return random_weights(rng, 6); }, [](const Eigen::MatrixXd& w) {
    const Assignment a = hungarian_max(w);
    const BruteMatch b = brute_force_match(w);
    if (a.total_weight != b.best) {
      return "total " + std::to_string(a.total_weight) + " vs optimum " + std::to_string(b.best);
    }
    return fail_if(a.pairs != b.pairs, "tie-break differs from lexicographic optimum");
  }));

  out.push_back(check_property(m, "optimum beats greedy matching", cases, seed + 3,
                               [](Rng& rng) { return random_weights(rng, 6); }, [](const Eigen::MatrixXd& w) {
    // Greedy: repeatedly take the heaviest remaining edge.
    Eigen::MatrixXd g = w;
    double greedy = 0.0;
    for (Eigen::Index k = 0; k < std::min(w.rows(), w.cols()); ++k) {
      Eigen::Index r, c;
      const double v = g.maxCoeff(&r, &c);
      if (v < 0.0) break;
      greedy += v;
      g.row(r).setConstant(-1.0);
      g.col(c).setConstant(-1.0);
    }
    return fail_if(hungarian_max(w).total_weight < greedy - 1e-12, "greedy matching beat the optimum");
  }));

  out.push_back(check_property(m, "assignment is a matching", cases, seed + 1,
                               [](Rng& rng) { return random_weights(rng, 6); }, [](const Eigen::MatrixXd& w) {
    const Assignment a = hungarian_max(w);
    std::vector<bool> rows(static_cast<std::size_t>(w.rows())), cols(static_cast<std::size_t>(w.cols()));
    int last = -1;
    double total = 0.0;
    for (const auto& [r, c] : a.pairs) {
      if (r <= last) return std::string("pairs not sorted by row");
      last = r;
      if (cols[static_cast<std::size_t>(c)]) return std::string("column used twice");
      rows[static_cast<std::size_t>(r)] = cols[static_cast<std::size_t>(c)] = true;
      total += w(r, c);
    }
    const std::size_t expect = static_cast<std::size_t>(std::min(w.rows(), w.cols()));
    if (a.pairs.size() != expect) return std::string("not a maximum-cardinality matching");
    return fail_if(total != a.total_weight, "total weight mismatch");
  }));

  out.push_back(check_property(
      m, "target resolution picks a valid candidate", cases, seed + 2,
      [](Rng& rng) {
        Eigen::MatrixXd w = random_weights(rng, 6);
        CandidateSet cands;
        for (int r = 0; r < w.rows(); ++r) {
          cands.boxes.push_back(BBox(r, 0, 1, 1));
          cands.scores.push_back(0.5);
        }
        if (coin(rng)) {
          cands.kalman_index = cands.size() - 1;
          cands.scores.back() = 0.0;
        }
        return std::make_pair(w, cands);
      },
      [](const std::pair<Eigen::MatrixXd, CandidateSet>& p) {
        const auto& [w, cands] = p;
        const Assignment a = hungarian_max(w);
        const TargetChoice c = resolve_target(a, w, cands);
        const int tc = static_cast<int>(w.cols()) - 1;
        switch (c.reason) {
          case Resolution::MatchedTarget: {
            const auto row = a.row_of_col(tc);
            return fail_if(!row || static_cast<std::size_t>(*row) != c.index || !(w(*row, tc) > 0.0),
                           "matched target inconsistent");
          }
          case Resolution::BestUnmatched:
            return fail_if(!c.index || !(w(static_cast<int>(*c.index), tc) > 0.0), "best unmatched has zero weight");
          case Resolution::KalmanZeroIou:
            return fail_if(c.index != cands.kalman_index, "kalman fallback without kalman");
          case Resolution::NoViableCandidate:
            return fail_if(cands.kalman_index.has_value() || c.index.has_value(), "gave up with a kalman box");
        }
        return std::string("unknown resolution");
      }));
  return out;
}

// --- simworld ---------------------------------------------------------------------

std::vector<PropertyResult> simworld_properties(long long cases, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const std::string m = "simworld";

  auto unit_pair = [](Rng& rng) {
    const int dim = uniform_int(rng, 2, 24);
    Eigen::VectorXd t(dim), o(dim);
    for (int i = 0; i < dim; ++i) {
      t(i) = uniform(rng, -1, 1);
      o(i) = uniform(rng, -1, 1);
    }
    t.normalize();
    o -= o.dot(t) * t;
    o.normalize();
    const double th1 = uniform(rng, 0.0, 3.14159), th2 = uniform(rng, 0.0, 3.14159);
    return std::make_tuple(t, o, std::min(th1, th2), std::max(th1, th2), uniform(rng, 0, 1), uniform(rng, 0, 1));
  };
  using Pair = std::tuple<Eigen::VectorXd, Eigen::VectorXd, double, double, double, double>;

  out.push_back(check_property(m, "score is bounded and monotone in visibility", cases, seed, unit_pair,
                               [](const Pair& p) {
    const auto& [t, o, th1, th2, v1, v2] = p;
    const Eigen::VectorXd a = std::cos(th1) * t + std::sin(th1) * o;
    const double lo = appearance_score(t, a, std::min(v1, v2)), hi = appearance_score(t, a, std::max(v1, v2));
    if (!(lo >= 0.0 && hi <= 1.0)) return std::string("score out of range");
    return fail_if(lo > hi, "score decreased with visibility");
  }));

  out.push_back(check_property(m, "score is monotone in similarity", cases, seed + 1, unit_pair, [](const Pair& p) {
    const auto& [t, o, th1, th2, v1, v2] = p;
    const Eigen::VectorXd near = std::cos(th1) * t + std::sin(th1) * o;
    const Eigen::VectorXd far = std::cos(th2) * t + std::sin(th2) * o;
    return fail_if(appearance_score(t, near, v1) + 1e-12 < appearance_score(t, far, v1),
                   "less similar appearance scored higher");
  }));

  const long long heavy = std::max<long long>(1, cases / 50);
  out.push_back(check_property(
      m, "generation is a pure function of (config, seed)", heavy, seed + 2,
      [](Rng& rng) {
        const auto& kinds = scenario_kinds();
        return std::make_pair(kinds[static_cast<std::size_t>(uniform_int(rng, 0, int(kinds.size()) - 1))],
                              static_cast<std::uint64_t>(uniform_int(rng, 0, 100000)));
      },
      [](const std::pair<std::string, std::uint64_t>& p) {
        const ScenarioConfig cfg = scenario_defaults(p.first);
        const auto a = scene_to_json(generate_scene(cfg, p.second)).dump();
        const auto b = scene_to_json(generate_scene(cfg, p.second)).dump();
        return fail_if(a != b, "two generations differ");
      }));

  out.push_back(check_property(
      m, "visibility is one minus the worst active severity", heavy, seed + 3,
      [](Rng& rng) {
        const auto& kinds = scenario_kinds();
        return std::make_pair(kinds[static_cast<std::size_t>(uniform_int(rng, 0, int(kinds.size()) - 1))],
                              static_cast<std::uint64_t>(uniform_int(rng, 0, 100000)));
      },
      [](const std::pair<std::string, std::uint64_t>& p) {
        const SimWorld world(generate_scene(scenario_defaults(p.first), p.second));
        for (int f = 0; f < world.length(); ++f) {
          for (const ObjectObs& o : world.frame(f).objects) {
            double worst = 0.0;
            for (const Occlusion& oc : world.scene().object(o.id).occlusions) {
              if (f >= oc.start && f <= oc.end) worst = std::max(worst, oc.severity);
            }
            if (o.visibility != 1.0 - worst) return "frame " + std::to_string(f) + " visibility mismatch";
            if (std::abs(o.appearance.norm() - 1.0) > 1e-9) return std::string("appearance not unit length");
          }
        }
        return std::string();
      }));
  return out;
}

}  // namespace cyclematch::testkit
