#pragma once

// Scores a completed image: how much of the target is still detected, how far
// the background drifted from the original, and how different the target
// region looks from the tight-mask completion ("afterimage").
//
//   total = background + lambda_a * afterimage + lambda_d * detect
//
// Higher totals mean better removal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/inpaint.hpp"
#include "aura/process.hpp"

namespace aura {

enum class DetectorKind { kNull, kResidual, kExternal };
enum class MetricKind { kL2, kPatchStats, kExternal };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kNull;
  double threshold = 0.15;
  int window = 7;
  std::string command;
  double timeout_seconds = 120.0;

  void validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
      throw std::invalid_argument("detector: threshold must be in (0,1]");
    }
    if (window < 1) throw std::invalid_argument("detector: window must be >= 1");
    if (kind == DetectorKind::kExternal && command.empty()) {
      throw std::invalid_argument("detector: external kind needs a command");
    }
  }
};

struct MetricSpec {
  MetricKind kind = MetricKind::kPatchStats;
  int window = 8;
  std::string command;
  double timeout_seconds = 120.0;

  void validate() const {
    if (window < 2) throw std::invalid_argument("metric: window must be >= 2");
    if (kind == MetricKind::kExternal && command.empty()) {
      throw std::invalid_argument("metric: external kind needs a command");
    }
  }
};

inline std::string to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::kNull: return "null";
    case DetectorKind::kResidual: return "residual";
    case DetectorKind::kExternal: return "external";
  }
  return "?";
}

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::kL2: return "l2";
    case MetricKind::kPatchStats: return "patch-stats";
    case MetricKind::kExternal: return "external";
  }
  return "?";
}

inline DetectorKind detector_kind_from_string(const std::string& s) {
  if (s == "null") return DetectorKind::kNull;
  if (s == "residual") return DetectorKind::kResidual;
  if (s == "external") return DetectorKind::kExternal;
  throw std::invalid_argument("unknown detector kind: " + s);
}

inline MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "l2") return MetricKind::kL2;
  if (s == "patch-stats") return MetricKind::kPatchStats;
  if (s == "external") return MetricKind::kExternal;
  throw std::invalid_argument("unknown metric kind: " + s);
}

inline void to_json(nlohmann::json& j, const DetectorSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"threshold", s.threshold},
                     {"window", s.window},
                     {"command", s.command},
                     {"timeout_seconds", s.timeout_seconds}};
}

inline void from_json(const nlohmann::json& j, DetectorSpec& s) {
  if (j.contains("kind")) s.kind = detector_kind_from_string(j.at("kind").get<std::string>());
  s.threshold = j.value("threshold", s.threshold);
  s.window = j.value("window", s.window);
  s.command = j.value("command", s.command);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
}

inline void to_json(nlohmann::json& j, const MetricSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"window", s.window},
                     {"command", s.command},
                     {"timeout_seconds", s.timeout_seconds}};
}

inline void from_json(const nlohmann::json& j, MetricSpec& s) {
  if (j.contains("kind")) s.kind = metric_kind_from_string(j.at("kind").get<std::string>());
  s.window = j.value("window", s.window);
  s.command = j.value("command", s.command);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
}

struct JudgeBreakdown {
  double background = 0.0;
  double afterimage = 0.0;
  double detect = 0.0;
  double total = 0.0;
  double lambda_a = 90000.0;
  double lambda_d = 0.5;

  static JudgeBreakdown combine(double background, double afterimage, double detect,
                                double lambda_a, double lambda_d) {
    return {background, afterimage, detect,
            background + lambda_a * afterimage + lambda_d * detect, lambda_a, lambda_d};
  }
};

inline void to_json(nlohmann::json& j, const JudgeBreakdown& b) {
  j = nlohmann::json{{"background", b.background}, {"afterimage", b.afterimage},
                     {"detect", b.detect},         {"total", b.total},
                     {"lambda_a", b.lambda_a},     {"lambda_d", b.lambda_d}};
}

namespace judge_detail {

inline std::chrono::milliseconds timeout_ms(double seconds) {
  return std::chrono::milliseconds(static_cast<long long>(seconds * 1000));
}

// img * L: zero everywhere except the region pixels.
inline Image mask_to_region(const Image& img, const HoleMask& region) {
  const auto b = region.bits();
  return apply_mask(img, KeepMask(region.height(), region.width(), {b.begin(), b.end()}));
}

// Per-channel (mean, std, mean gradient magnitude) over one window. Gradients
// are forward differences that stay inside the window.
struct WindowStats {
  double mean;
  double stddev;
  double gradient;
};

inline WindowStats window_stats(const Image& img, int c, int y0, int x0, int y1, int x1) {
  double sum = 0.0;
  double sq = 0.0;
  double grad = 0.0;
  const int n = (y1 - y0) * (x1 - x0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double v = img.at(y, x, c);
      sum += v;
      sq += v * v;
      const double gx = x + 1 < x1 ? img.at(y, x + 1, c) - v : 0.0;
      const double gy = y + 1 < y1 ? img.at(y + 1, x, c) - v : 0.0;
      grad += std::sqrt(gx * gx + gy * gy);
    }
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sq / n - mean * mean);
  return {mean, std::sqrt(var), grad / n};
}

}  // namespace judge_detail

// Sum of squared differences of per-window (mean, std, gradient) triples over
// the non-overlapping window tiling, restricted to windows that intersect
// `region`. Both images are zeroed outside `region` first.
inline double patch_stats_distance(const Image& a, const Image& b, const HoleMask& region,
                                   int window) {
  require_same_size(a.size(), b.size(), "patch_stats_distance");
  require_same_size(a.size(), region.size(), "patch_stats_distance");
  if (a.channels() != b.channels()) throw DimensionError("patch_stats_distance: channels");
  const Image ma = judge_detail::mask_to_region(a, region);
  const Image mb = judge_detail::mask_to_region(b, region);
  double d = 0.0;
  for (int y0 = 0; y0 < a.height(); y0 += window) {
    for (int x0 = 0; x0 < a.width(); x0 += window) {
      const int y1 = std::min(a.height(), y0 + window);
      const int x1 = std::min(a.width(), x0 + window);
      bool hits = false;
      for (int y = y0; y < y1 && !hits; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (region.at(y, x)) {
            hits = true;
            break;
          }
        }
      }
      if (!hits) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const auto sa = judge_detail::window_stats(ma, c, y0, x0, y1, x1);
        const auto sb = judge_detail::window_stats(mb, c, y0, x0, y1, x1);
        const double dm = sa.mean - sb.mean;
        const double ds = sa.stddev - sb.stddev;
        const double dg = sa.gradient - sb.gradient;
        d += dm * dm + ds * ds + dg * dg;
      }
    }
  }
  return d;
}

// Binary detection map S of the residual detector: pixels of `target` whose
// window-mean absolute difference (averaged over channels) between
// `completed` and `original` exceeds the threshold.
inline HoleMask residual_detections(const Image& completed, const Image& original,
                                    const HoleMask& target, const DetectorSpec& det) {
  const int h = completed.height();
  const int w = completed.width();
  const int c = completed.channels();
  // summed-area table of the per-pixel residual
  std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      double r = 0.0;
      for (int k = 0; k < c; ++k) r += std::abs(completed.at(y, x, k) - original.at(y, x, k));
      row += r / c;
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  const int before = det.window / 2;
  const int after = det.window - 1 - before;
  HoleMask s(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!target.at(y, x)) continue;
      const int y0 = std::max(0, y - before);
      const int y1 = std::min(h, y + after + 1);
      const int x0 = std::max(0, x - before);
      const int x1 = std::min(w, x + after + 1);
      const double sum = sat[static_cast<std::size_t>(y1) * (w + 1) + x1] -
                         sat[static_cast<std::size_t>(y0) * (w + 1) + x1] -
                         sat[static_cast<std::size_t>(y1) * (w + 1) + x0] +
                         sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
      const double mean = sum / ((y1 - y0) * (x1 - x0));
      s.set(y, x, mean > det.threshold);
    }
  }
  return s;
}

inline HoleMask external_detections(const Image& completed, const DetectorSpec& det) {
  TempDir dir;
  save_image(dir.path() / "input.png", completed);
  const auto res =
      run_command(det.command, dir.path().string(), judge_detail::timeout_ms(det.timeout_seconds));
  if (!res.ok()) throw OracleError("external detector failed: " + res.diagnostics());
  HoleMask s;
  try {
    s = load_hole_mask(dir.path() / "detections.pgm");
  } catch (const std::exception& e) {
    throw OracleError(std::string("external detector output unreadable: ") + e.what());
  }
  if (s.size() != completed.size()) {
    throw OracleError("external detector output has size " + to_string(s.size()));
  }
  return s;
}

// -A(S(completed)) / A(L).
inline double j_detect(const Image& completed, const HoleMask& target, const DetectorSpec& det,
                       const Image& original) {
  require_same_size(completed.size(), target.size(), "j_detect");
  require_same_size(completed.size(), original.size(), "j_detect");
  const std::size_t a = area(target);
  if (a == 0) throw std::invalid_argument("j_detect: target mask is empty");
  switch (det.kind) {
    case DetectorKind::kNull:
      return 0.0;
    case DetectorKind::kResidual:
      return -static_cast<double>(area(residual_detections(completed, original, target, det))) /
             static_cast<double>(a);
    case DetectorKind::kExternal:
      return -static_cast<double>(area(external_detections(completed, det))) /
             static_cast<double>(a);
  }
  return 0.0;
}

// Negative squared-L2 distance between the two images outside the target,
// normalized by the background pixel count.
inline double j_background(const Image& original, const Image& completed,
                           const HoleMask& target) {
  require_same_size(original.size(), completed.size(), "j_background");
  require_same_size(original.size(), target.size(), "j_background");
  const std::size_t a = area(target);
  if (a == target.pixel_count()) {
    throw std::invalid_argument("j_background: target covers the whole image");
  }
  const int c = original.channels();
  double sum = 0.0;
  for (std::size_t i = 0; i < target.pixel_count(); ++i) {
    if (target.at_index(i)) continue;
    for (int k = 0; k < c; ++k) {
      const double d = original.at_index(i, k) - completed.at_index(i, k);
      sum += d * d;
    }
  }
  return -sum / static_cast<double>(target.pixel_count() - a);
}

inline double external_metric(const Image& a, const Image& b, const MetricSpec& metric) {
  TempDir dir;
  save_image(dir.path() / "a.png", a);
  save_image(dir.path() / "b.png", b);
  const auto res = run_command(metric.command, dir.path().string(),
                               judge_detail::timeout_ms(metric.timeout_seconds));
  if (!res.ok()) throw OracleError("external metric failed: " + res.diagnostics());
  try {
    std::size_t used = 0;
    const double v = std::stod(res.out, &used);
    const auto rest = res.out.find_first_not_of(" \t\r\n", used);
    if (rest != std::string::npos || !std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(res.out);
    }
    return v;
  } catch (const std::exception&) {
    throw OracleError("external metric printed '" + res.out + "', expected one real >= 0");
  }
}

// Dissimilarity D(query * L, seg * L) / A(L).
inline double j_afterimage(const Image& completed_query, const Image& completed_seg,
                           const HoleMask& target, const MetricSpec& metric) {
  require_same_size(completed_query.size(), completed_seg.size(), "j_afterimage");
  require_same_size(completed_query.size(), target.size(), "j_afterimage");
  const std::size_t a = area(target);
  if (a == 0) throw std::invalid_argument("j_afterimage: target mask is empty");
  double d = 0.0;
  switch (metric.kind) {
    case MetricKind::kL2: {
      const int c = completed_query.channels();
      for (std::size_t i = 0; i < target.pixel_count(); ++i) {
        if (!target.at_index(i)) continue;
        for (int k = 0; k < c; ++k) {
          const double diff = completed_query.at_index(i, k) - completed_seg.at_index(i, k);
          d += diff * diff;
        }
      }
      break;
    }
    case MetricKind::kPatchStats:
      d = patch_stats_distance(completed_query, completed_seg, target, metric.window);
      break;
    case MetricKind::kExternal:
      d = external_metric(judge_detail::mask_to_region(completed_query, target),
                          judge_detail::mask_to_region(completed_seg, target), metric);
      break;
  }
  return d / static_cast<double>(a);
}

// Spelled-out form of the judge for callers that manage their own cache.
inline JudgeBreakdown judge(const Image& original, const KeepMask& keep, const HoleMask& target,
                            const InpainterSpec& inpainter, const DetectorSpec& det,
                            const MetricSpec& metric, double lambda_a, double lambda_d,
                            const Image& cached_seg_completion) {
  require_same_size(original.size(), keep.size(), "judge");
  require_same_size(original.size(), target.size(), "judge");
  require_same_size(original.size(), cached_seg_completion.size(), "judge");
  const Image completed = complete(original, keep, inpainter);
  return JudgeBreakdown::combine(j_background(original, completed, target),
                                 j_afterimage(completed, cached_seg_completion, target, metric),
                                 j_detect(completed, target, det, original), lambda_a, lambda_d);
}

struct JudgeOracles {
  InpainterSpec inpainter;
  DetectorSpec detector;
  MetricSpec metric;
  double lambda_a = 90000.0;
  double lambda_d = 0.5;
};

// Judge bound to one (image, target) pair. The tight-mask completion is
// computed once at construction and shared read-only by every evaluation.
class Judge {
 public:
  Judge(Image original, HoleMask target, JudgeOracles oracles)
      : original_(std::move(original)), target_(std::move(target)), oracles_(std::move(oracles)) {
    require_same_size(original_.size(), target_.size(), "Judge");
    if (area(target_) == 0) throw std::invalid_argument("Judge: target mask is empty");
    oracles_.inpainter.validate();
    oracles_.detector.validate();
    oracles_.metric.validate();
    seg_completion_ = complete(original_, complement(target_), oracles_.inpainter);
  }

  JudgeBreakdown operator()(const KeepMask& keep) const {
    return judge(original_, keep, target_, oracles_.inpainter, oracles_.detector,
                 oracles_.metric, oracles_.lambda_a, oracles_.lambda_d, seg_completion_);
  }

  // Scores a hole-sense mask by evaluating its complement.
  JudgeBreakdown score_holes(const HoleMask& holes) const { return (*this)(complement(holes)); }

  const Image& original() const { return original_; }
  const HoleMask& target() const { return target_; }
  const Image& seg_completion() const { return seg_completion_; }
  const JudgeOracles& oracles() const { return oracles_; }

 private:
  Image original_;
  HoleMask target_;
  JudgeOracles oracles_;
  Image seg_completion_;
};

}  // namespace aura
