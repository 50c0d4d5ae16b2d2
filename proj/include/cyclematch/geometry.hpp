#pragma once

// Axis-aligned boxes, tracklets and the overlap kernels used for matching.
// Everything here is header-only and templated on the scalar type; the rest
// of the library works with the double instantiation (BBox, Tracklet).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cyclematch/errors.hpp"

namespace cyclematch {

/// Box in continuous image coordinates: (x, y) is the top-left corner.
/// Construction rejects non-finite coordinates and non-positive sizes, so
/// every Box that exists has positive area.
template <typename Scalar>
class Box {
 public:
  Box(Scalar x, Scalar y, Scalar w, Scalar h) : x_(x), y_(y), w_(w), h_(h) {
    using std::isfinite;
    if (!(isfinite(x) && isfinite(y) && isfinite(w) && isfinite(h))) {
      throw ContractError("box coordinates must be finite");
    }
    if (!(w > Scalar(0) && h > Scalar(0))) {
      throw ContractError("box width and height must be positive");
    }
  }

  static Box from_center(Scalar cx, Scalar cy, Scalar w, Scalar h) {
    return Box(cx - w / Scalar(2), cy - h / Scalar(2), w, h);
  }

  Scalar x() const { return x_; }
  Scalar y() const { return y_; }
  Scalar w() const { return w_; }
  Scalar h() const { return h_; }
  Scalar right() const { return x_ + w_; }
  Scalar bottom() const { return y_ + h_; }
  Scalar cx() const { return x_ + w_ / Scalar(2); }
  Scalar cy() const { return y_ + h_ / Scalar(2); }
  Scalar diagonal() const { return std::hypot(w_, h_); }

  Box translated(Scalar dx, Scalar dy) const { return Box(x_ + dx, y_ + dy, w_, h_); }

  template <typename Other>
  Box<Other> cast() const {
    return Box<Other>(Other(x_), Other(y_), Other(w_), Other(h_));
  }

  bool operator==(const Box&) const = default;

 private:
  Scalar x_;
  Scalar y_;
  Scalar w_;
  Scalar h_;
};

using BBox = Box<double>;

/// Intersection over union. Areas are measured from the corner coordinates
/// so that identical boxes give exactly 1.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar ix = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const Scalar iy = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (ix <= Scalar(0) || iy <= Scalar(0)) {
    return Scalar(0);
  }
  const Scalar inter = ix * iy;
  const Scalar area_a = (a.right() - a.x()) * (a.bottom() - a.y());
  const Scalar area_b = (b.right() - b.x()) * (b.bottom() - b.y());
  const Scalar value = inter / (area_a + area_b - inter);
  return std::clamp(value, Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar center_distance(const Box<Scalar>& a, const Box<Scalar>& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

/// A contiguous run of boxes ending at `end_frame`. Boxes are stored newest
/// first: boxes()[k] belongs to frame end_frame - k.
template <typename Scalar>
class Tracklet {
 public:
  Tracklet(int end_frame, std::vector<Box<Scalar>> boxes)
      : end_frame_(end_frame), boxes_(std::move(boxes)) {
    if (boxes_.empty()) {
      throw ContractError("tracklet must contain at least one box");
    }
  }

  int end_frame() const { return end_frame_; }
  int start_frame() const { return end_frame_ - length() + 1; }
  int length() const { return static_cast<int>(boxes_.size()); }
  const std::vector<Box<Scalar>>& boxes() const { return boxes_; }
  const Box<Scalar>& head() const { return boxes_.front(); }

  /// Box `k` frames before end_frame.
  const Box<Scalar>& back(int k) const { return boxes_.at(static_cast<std::size_t>(k)); }

  const Box<Scalar>& at_frame(int frame) const {
    if (frame > end_frame_ || frame < start_frame()) {
      throw ContractError("frame " + std::to_string(frame) + " outside tracklet span");
    }
    return boxes_[static_cast<std::size_t>(end_frame_ - frame)];
  }

  /// New tracklet one frame later with `box` at its head, capped at
  /// `max_length` by dropping the oldest box.
  Tracklet prepended(const Box<Scalar>& box, int max_length) const {
    std::vector<Box<Scalar>> out;
    out.reserve(boxes_.size() + 1);
    out.push_back(box);
    out.insert(out.end(), boxes_.begin(), boxes_.end());
    if (max_length >= 1 && static_cast<int>(out.size()) > max_length) {
      out.erase(out.begin() + max_length, out.end());
    }
    return Tracklet(end_frame_ + 1, std::move(out));
  }

  bool operator==(const Tracklet&) const = default;

 private:
  int end_frame_;
  std::vector<Box<Scalar>> boxes_;
};

using TrackletD = Tracklet<double>;

/// Mean per-frame IoU over the frames both tracklets cover, counting back
/// from their shared end frame. Tracklets of different length are compared
/// over the shorter span.
template <typename Scalar>
Scalar tracklet_avg_iou(const Tracklet<Scalar>& p, const Tracklet<Scalar>& q) {
  if (p.end_frame() != q.end_frame()) {
    throw ContractError("tracklets end at different frames (" + std::to_string(p.end_frame()) +
                        " vs " + std::to_string(q.end_frame()) + ")");
  }
  const int span = std::min(p.length(), q.length());
  Scalar sum(0);
  for (int k = 0; k < span; ++k) {
    sum += iou(p.back(k), q.back(k));
  }
  return std::clamp(sum / Scalar(span), Scalar(0), Scalar(1));
}

}  // namespace cyclematch
