#pragma once

// Constant-velocity Kalman filter over (cx, cy, w, h) and their per-frame
// velocities. Noise standard deviations scale with the current box height.

#include <algorithm>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cyclematch/geometry.hpp"

namespace cyclematch {

template <typename Scalar>
struct MotionNoise {
  Scalar position_weight = Scalar(1) / Scalar(20);
  Scalar velocity_weight = Scalar(1) / Scalar(160);
  // Initial standard deviations are these multiples of the weights above.
  Scalar init_position_factor = Scalar(2);
  Scalar init_velocity_factor = Scalar(10);
  // Predicted width/height never drop below this.
  Scalar min_size = Scalar(1);
};

template <typename Scalar>
struct MotionState {
  using Vector8 = Eigen::Matrix<Scalar, 8, 1>;
  using Matrix8 = Eigen::Matrix<Scalar, 8, 8>;

  Vector8 mean;
  Matrix8 covariance;
  int frame = 0;

  Box<Scalar> box() const { return Box<Scalar>::from_center(mean(0), mean(1), mean(2), mean(3)); }

  bool operator==(const MotionState& other) const {
    return frame == other.frame && mean == other.mean && covariance == other.covariance;
  }
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> measurement_of(const Box<Scalar>& b) {
  Eigen::Matrix<Scalar, 4, 1> z;
  z << b.cx(), b.cy(), b.w(), b.h();
  return z;
}

template <typename Scalar>
void clamp_size(MotionState<Scalar>& s, Scalar min_size) {
  s.mean(2) = std::max(s.mean(2), min_size);
  s.mean(3) = std::max(s.mean(3), min_size);
}

template <typename Scalar>
void symmetrize(Eigen::Matrix<Scalar, 8, 8>& m) {
  m = (m + m.transpose()).eval() / Scalar(2);
}

}  // namespace detail

template <typename Scalar>
MotionState<Scalar> motion_init(const Box<Scalar>& b0, int frame,
                                const MotionNoise<Scalar>& noise = {}) {
  MotionState<Scalar> s;
  s.mean.setZero();
  s.mean.template head<4>() = detail::measurement_of(b0);
  const Scalar pos = noise.init_position_factor * noise.position_weight * b0.h();
  const Scalar vel = noise.init_velocity_factor * noise.velocity_weight * b0.h();
  Eigen::Matrix<Scalar, 8, 1> stddev;
  stddev << pos, pos, pos, pos, vel, vel, vel, vel;
  s.covariance = stddev.array().square().matrix().asDiagonal();
  s.frame = frame;
  return s;
}

/// One frame ahead under constant velocity. Returns the predicted box and
/// the advanced state.
template <typename Scalar>
std::pair<Box<Scalar>, MotionState<Scalar>> motion_predict(const MotionState<Scalar>& s,
                                                           const MotionNoise<Scalar>& noise = {}) {
  using Matrix8 = typename MotionState<Scalar>::Matrix8;
  Matrix8 transition = Matrix8::Identity();
  transition.template topRightCorner<4, 4>().setIdentity();

  const Scalar h = std::max(s.mean(3), noise.min_size);
  const Scalar pos = noise.position_weight * h;
  const Scalar vel = noise.velocity_weight * h;
  Eigen::Matrix<Scalar, 8, 1> q;
  q << pos, pos, pos, pos, vel, vel, vel, vel;

  MotionState<Scalar> next;
  next.mean = transition * s.mean;
  next.covariance = transition * s.covariance * transition.transpose();
  next.covariance.diagonal() += q.array().square().matrix();
  detail::symmetrize(next.covariance);
  next.frame = s.frame + 1;
  detail::clamp_size(next, noise.min_size);
  return {next.box(), next};
}

/// Measurement update with an observed box (Joseph form keeps the
/// covariance symmetric positive semi-definite).
template <typename Scalar>
MotionState<Scalar> motion_update(const MotionState<Scalar>& s, const Box<Scalar>& observed,
                                  const MotionNoise<Scalar>& noise = {}) {
  using Matrix8 = typename MotionState<Scalar>::Matrix8;
  Eigen::Matrix<Scalar, 4, 8> H = Eigen::Matrix<Scalar, 4, 8>::Zero();
  H.template leftCols<4>().setIdentity();

  const Scalar h = std::max(s.mean(3), noise.min_size);
  const Scalar r = noise.position_weight * h;
  const Eigen::Matrix<Scalar, 4, 4> R = Eigen::Matrix<Scalar, 4, 4>::Identity() * (r * r);

  const Eigen::Matrix<Scalar, 4, 4> S = H * s.covariance * H.transpose() + R;
  const Eigen::Matrix<Scalar, 8, 4> PHt = s.covariance * H.transpose();
  const Eigen::Matrix<Scalar, 8, 4> gain = S.llt().solve(PHt.transpose()).transpose();

  MotionState<Scalar> next;
  next.mean = s.mean + gain * (detail::measurement_of(observed) - H * s.mean);
  const Matrix8 I_KH = Matrix8::Identity() - gain * H;
  next.covariance = I_KH * s.covariance * I_KH.transpose() + gain * R * gain.transpose();
  detail::symmetrize(next.covariance);
  next.frame = s.frame;
  detail::clamp_size(next, noise.min_size);
  return next;
}

}  // namespace cyclematch
