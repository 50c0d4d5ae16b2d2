#pragma once

// Tracking metrics: VOT-style accuracy / robustness / EAO-lite, success-plot
// style AUC / precision / AO / SR, and identity switches against a SimWorld.

#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cyclematch/geometry.hpp"

namespace cyclematch {

class SimWorld;

struct EvalOptions {
  double fail_iou = 0.0;        // a frame with IoU <= this is a failure
  int skip_frames = 5;          // frames ignored after a failure before re-anchoring
  std::vector<int> intervals;   // EAO-lite window lengths; empty = {n/4, n/2, 3n/4, n}
  double precision_px = 20.0;
  double norm_precision_threshold = 0.2;
};

struct VotResult {
  double accuracy = 0.0;
  double robustness = 0.0;
  std::vector<int> failures;  // frame indices
};

struct SuccessResult {
  double auc = 0.0;
  double precision = 0.0;
  double norm_precision = 0.0;
  double ao = 0.0;
  double sr50 = 0.0;
  double sr75 = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double robustness = 0.0;
  double eao_lite = 0.0;
  double auc = 0.0;
  double precision = 0.0;
  double norm_precision = 0.0;
  double ao = 0.0;
  double sr50 = 0.0;
  double sr75 = 0.0;
  int id_switches = 0;
  std::vector<int> failures;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Names of the scalar metrics, in report order.
const std::vector<const char*>& metric_names();
/// Scalar metric by name (id_switches as a double).
double metric_value(const EvalReport& r, std::string_view name);

std::vector<double> per_frame_iou(std::span<const BBox> pred, std::span<const BBox> gt);

VotResult vot_metrics(std::span<const BBox> pred, std::span<const BBox> gt, double fail_iou = 0.0,
                      int skip_frames = 5);

double eao_lite(std::span<const BBox> pred, std::span<const BBox> gt, std::span<const int> intervals,
                double fail_iou = 0.0);

/// Thresholds of the success curve: 0, 0.02, ..., 1.
const std::vector<double>& success_thresholds();

SuccessResult success_metrics(std::span<const BBox> pred, std::span<const BBox> gt,
                              double precision_px = 20.0, double norm_threshold = 0.2);

/// Per frame the prediction is assigned to the object it overlaps most (none
/// if it overlaps nothing); counts changes of the assigned id. pred[i] is
/// the box for frame first_frame + i.
int id_switches(std::span<const BBox> pred, const SimWorld& world, int first_frame = 0);

EvalReport evaluate(std::span<const BBox> pred, std::span<const BBox> gt, const EvalOptions& opts = {});
EvalReport evaluate(std::span<const BBox> pred, const SimWorld& world, const EvalOptions& opts = {},
                    int first_frame = 0);

}  // namespace cyclematch
