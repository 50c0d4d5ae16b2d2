#include "cyclematch/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "cyclematch/errors.hpp"
#include "cyclematch/simworld.hpp"

namespace cyclematch {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ContractError("prediction has " + std::to_string(a) + " frames, ground truth " +
                        std::to_string(b));
  }
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

std::vector<int> default_intervals(int n) {
  std::vector<int> out;
  for (int q = 1; q <= 4; ++q) {
    const int len = std::max(1, n * q / 4);
    if (out.empty() || out.back() != len) out.push_back(len);
  }
  return out;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  return {{"accuracy", accuracy}, {"robustness", robustness},   {"eao_lite", eao_lite},
          {"auc", auc},           {"precision", precision},     {"norm_precision", norm_precision},
          {"ao", ao},             {"sr50", sr50},               {"sr75", sr75},
          {"id_switches", id_switches}, {"failures", failures}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.robustness = j.at("robustness").get<double>();
  r.eao_lite = j.at("eao_lite").get<double>();
  r.auc = j.at("auc").get<double>();
  r.precision = j.at("precision").get<double>();
  r.norm_precision = j.at("norm_precision").get<double>();
  r.ao = j.at("ao").get<double>();
  r.sr50 = j.at("sr50").get<double>();
  r.sr75 = j.at("sr75").get<double>();
  r.id_switches = j.at("id_switches").get<int>();
  r.failures = j.value("failures", std::vector<int>{});
  return r;
}

const std::vector<const char*>& metric_names() {
  static const std::vector<const char*> names{"accuracy", "robustness",     "eao_lite",
                                              "auc",      "precision",      "norm_precision",
                                              "ao",       "sr50",           "sr75",
                                              "id_switches"};
  return names;
}

double metric_value(const EvalReport& r, std::string_view name) {
  if (name == "accuracy") return r.accuracy;
  if (name == "robustness") return r.robustness;
  if (name == "eao_lite") return r.eao_lite;
  if (name == "auc") return r.auc;
  if (name == "precision") return r.precision;
  if (name == "norm_precision") return r.norm_precision;
  if (name == "ao") return r.ao;
  if (name == "sr50") return r.sr50;
  if (name == "sr75") return r.sr75;
  if (name == "id_switches") return r.id_switches;
  throw ContractError("unknown metric '" + std::string(name) + "'");
}

std::vector<double> per_frame_iou(std::span<const BBox> pred, std::span<const BBox> gt) {
  check_lengths(pred.size(), gt.size());
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = iou(pred[i], gt[i]);
  return out;
}

VotResult vot_metrics(std::span<const BBox> pred, std::span<const BBox> gt, double fail_iou,
                      int skip_frames) {
  if (skip_frames < 0) throw ContractError("skip_frames must be non-negative");
  const std::vector<double> ious = per_frame_iou(pred, gt);
  VotResult r;
  if (ious.empty()) return r;

  double sum = 0.0;
  std::size_t tracked = 0;
  for (std::size_t f = 0; f < ious.size(); ++f) {
    if (ious[f] <= fail_iou) {
      r.failures.push_back(static_cast<int>(f));
      f += static_cast<std::size_t>(skip_frames);
      continue;
    }
    sum += ious[f];
    ++tracked;
  }
  r.accuracy = tracked ? sum / double(tracked) : 0.0;
  r.robustness = double(tracked) / double(ious.size());
  return r;
}

double eao_lite(std::span<const BBox> pred, std::span<const BBox> gt, std::span<const int> intervals,
                double fail_iou) {
  const std::vector<double> ious = per_frame_iou(pred, gt);
  const int n = static_cast<int>(ious.size());
  if (n == 0) return 0.0;
  std::vector<int> lens(intervals.begin(), intervals.end());
  if (lens.empty()) lens = default_intervals(n);

  // first_fail[s]: first failing frame at or after s (n if none).
  std::vector<int> first_fail(static_cast<std::size_t>(n) + 1, n);
  for (int f = n - 1; f >= 0; --f) {
    first_fail[f] = ious[f] <= fail_iou ? f : first_fail[f + 1];
  }
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int f = 0; f < n; ++f) prefix[f + 1] = prefix[f] + ious[f];

  double total = 0.0;
  for (int len : lens) {
    if (len < 1) throw ContractError("EAO interval lengths must be positive");
    len = std::min(len, n);
    double acc = 0.0;
    for (int s = 0; s + len <= n; ++s) {
      const int stop = std::min(s + len, first_fail[s]);
      acc += (prefix[stop] - prefix[s]) / double(len);
    }
    total += acc / double(n - len + 1);
  }
  return total / double(lens.size());
}

const std::vector<double>& success_thresholds() {
  static const std::vector<double> th = [] {
    std::vector<double> t(51);
    for (int k = 0; k <= 50; ++k) t[k] = k / 50.0;
    return t;
  }();
  return th;
}

SuccessResult success_metrics(std::span<const BBox> pred, std::span<const BBox> gt, double precision_px,
                              double norm_threshold) {
  const std::vector<double> ious = per_frame_iou(pred, gt);
  SuccessResult r;
  if (ious.empty()) return r;
  const double n = double(ious.size());

  std::vector<double> sorted = ious;
  std::sort(sorted.begin(), sorted.end());
  double auc = 0.0;
  for (double th : success_thresholds()) {
    // success at threshold th: IoU >= th and IoU > 0
    auto it = std::lower_bound(sorted.begin(), sorted.end(), th);
    it = std::upper_bound(it, sorted.end(), 0.0);
    auc += double(sorted.end() - it) / n;
  }
  r.auc = auc / double(success_thresholds().size());
  r.ao = mean(ious);

  std::size_t sr50 = 0, sr75 = 0, prec = 0, nprec = 0;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    if (ious[i] > 0.5) ++sr50;
    if (ious[i] > 0.75) ++sr75;
    const double dx = pred[i].cx() - gt[i].cx();
    const double dy = pred[i].cy() - gt[i].cy();
    if (std::hypot(dx, dy) <= precision_px) ++prec;
    if (std::hypot(dx / gt[i].w(), dy / gt[i].h()) <= norm_threshold) ++nprec;
  }
  r.sr50 = double(sr50) / n;
  r.sr75 = double(sr75) / n;
  r.precision = double(prec) / n;
  r.norm_precision = double(nprec) / n;
  return r;
}

namespace {

void check_span(std::size_t n, const SimWorld& world, int first_frame) {
  if (first_frame < 0 || first_frame + static_cast<long long>(n) > world.length()) {
    throw ContractError("prediction of " + std::to_string(n) + " frames from frame " +
                        std::to_string(first_frame) + " exceeds scene length " +
                        std::to_string(world.length()));
  }
}

}  // namespace

int id_switches(std::span<const BBox> pred, const SimWorld& world, int first_frame) {
  check_span(pred.size(), world, first_frame);
  int switches = 0;
  std::optional<int> last;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::optional<int> assigned;
    double best = 0.0;
    for (const ObjectObs& o : world.frame(first_frame + static_cast<int>(i)).objects) {
      const double v = iou(pred[i], o.box);
      if (v > best) {
        best = v;
        assigned = o.id;
      }
    }
    if (!assigned) continue;
    if (last && *last != *assigned) ++switches;
    last = assigned;
  }
  return switches;
}

EvalReport evaluate(std::span<const BBox> pred, std::span<const BBox> gt, const EvalOptions& opts) {
  const VotResult vot = vot_metrics(pred, gt, opts.fail_iou, opts.skip_frames);
  const SuccessResult s = success_metrics(pred, gt, opts.precision_px, opts.norm_precision_threshold);
  EvalReport r;
  r.accuracy = vot.accuracy;
  r.robustness = vot.robustness;
  r.failures = vot.failures;
  r.eao_lite = eao_lite(pred, gt, opts.intervals, opts.fail_iou);
  r.auc = s.auc;
  r.precision = s.precision;
  r.norm_precision = s.norm_precision;
  r.ao = s.ao;
  r.sr50 = s.sr50;
  r.sr75 = s.sr75;
  return r;
}

EvalReport evaluate(std::span<const BBox> pred, const SimWorld& world, const EvalOptions& opts,
                    int first_frame) {
  check_span(pred.size(), world, first_frame);
  std::vector<BBox> gt;
  gt.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) gt.push_back(world.target_box(first_frame + static_cast<int>(i)));
  EvalReport r = evaluate(pred, gt, opts);
  r.id_switches = id_switches(pred, world, first_frame);
  return r;
}

}  // namespace cyclematch
