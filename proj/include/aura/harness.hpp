#pragma once

// Synthetic removal scenes with known ground truth, the dilation baseline
// sweep, and the AURA-vs-baseline benchmark.
//
// A scene is a background image, a textured rectangular object pasted on it,
// and a segmentation mask that under-covers the object by `halo` pixels on
// every side. The un-masked ring of object pixels is what a tight mask leaves
// behind as an afterimage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/config.hpp"
#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/judge.hpp"
#include "aura/metrics.hpp"
#include "aura/pipeline.hpp"
#include "aura/rng.hpp"

namespace aura {

enum class BackgroundKind { kSmooth, kTextured };

inline std::string to_string(BackgroundKind b) {
  return b == BackgroundKind::kSmooth ? "smooth" : "textured";
}

struct SceneSpec {
  int height = 128;
  int width = 128;
  BackgroundKind background = BackgroundKind::kSmooth;
  int object_height = 36;
  int object_width = 36;
  int halo = 2;
  std::uint64_t seed = 1;
  std::string name = "scene";
};

struct SyntheticScene {
  SceneSpec spec;
  Image ground_truth;
  Image composited;
  HoleMask true_object_mask;
  HoleMask provided_seg_mask;

  // Object pixels the segmentation misses.
  HoleMask ring() const {
    HoleMask r = true_object_mask;
    for (std::size_t i = 0; i < r.pixel_count(); ++i) {
      if (provided_seg_mask.at_index(i)) r.set_index(i, false);
    }
    return r;
  }
};

namespace harness_detail {

inline void box_blur(std::vector<double>& v, int h, int w, int radius) {
  std::vector<double> tmp(v.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      int n = 0;
      for (int d = -radius; d <= radius; ++d) {
        const int xx = std::clamp(x + d, 0, w - 1);
        s += v[static_cast<std::size_t>(y) * w + xx];
        ++n;
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s / n;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      int n = 0;
      for (int d = -radius; d <= radius; ++d) {
        const int yy = std::clamp(y + d, 0, h - 1);
        s += tmp[static_cast<std::size_t>(yy) * w + x];
        ++n;
      }
      v[static_cast<std::size_t>(y) * w + x] = s / n;
    }
  }
}

}  // namespace harness_detail

// Background: a per-channel low-frequency field (tilted plane plus a couple
// of long-wavelength sinusoids) with fine grain; the textured kind adds
// blurred noise on top.
// Object: a two-color checkerboard with 4 px cells and mild noise, colors
// chosen far from the local background.
inline SyntheticScene make_scene(const SceneSpec& spec) {
  if (spec.object_height <= 0 || spec.object_width <= 0 || spec.object_height > spec.height ||
      spec.object_width > spec.width) {
    throw std::invalid_argument("make_scene: object does not fit in the image");
  }
  if (spec.halo < 0) throw std::invalid_argument("make_scene: halo must be >= 0");
  const int h = spec.height;
  const int w = spec.width;
  Xoshiro256 rng(spec.seed);

  Image gt(h, w, 3);
  auto g = gt.mutable_data();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  // per-pixel sensor grain; without it the smooth kind is almost exactly
  // harmonic and any diffusion fill reproduces it for free
  constexpr double kGrain = 0.025;
  std::vector<std::vector<double>> noise;
  if (spec.background == BackgroundKind::kTextured) {
    for (int c = 0; c < 3; ++c) {
      std::vector<double> n(static_cast<std::size_t>(h) * w);
      for (auto& v : n) v = rng.uniform_real(-1.0, 1.0);
      harness_detail::box_blur(n, h, w, 1);
      double mx = 0;
      for (double v : n) mx = std::max(mx, std::abs(v));
      for (auto& v : n) v /= mx;
      noise.push_back(std::move(n));
    }
  }
  for (int c = 0; c < 3; ++c) {
    const double base = rng.uniform_real(0.35, 0.65);
    const double gx = rng.uniform_real(-0.15, 0.15);
    const double gy = rng.uniform_real(-0.15, 0.15);
    const double a1 = rng.uniform_real(0.04, 0.08);
    const double f1 = rng.uniform_real(0.6, 1.4);
    const double p1 = rng.uniform_real(0.0, kTwoPi);
    const double a2 = rng.uniform_real(0.03, 0.06);
    const double f2 = rng.uniform_real(0.6, 1.4);
    const double p2 = rng.uniform_real(0.0, kTwoPi);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = static_cast<double>(x) / w;
        const double v = static_cast<double>(y) / h;
        double val = base + gx * (u - 0.5) + gy * (v - 0.5) + a1 * std::sin(kTwoPi * f1 * u + p1) +
                     a2 * std::sin(kTwoPi * f2 * v + p2);
        if (!noise.empty()) val += 0.12 * noise[c][static_cast<std::size_t>(y) * w + x];
        val += rng.uniform_real(-kGrain, kGrain);
        g[(static_cast<std::size_t>(y) * w + x) * 3 + c] = std::clamp(val, 0.0, 1.0);
      }
    }
  }

  const int margin_y = std::min(12, (h - spec.object_height) / 2);
  const int margin_x = std::min(12, (w - spec.object_width) / 2);
  const int oy = static_cast<int>(rng.uniform_int(margin_y, h - spec.object_height - margin_y));
  const int ox = static_cast<int>(rng.uniform_int(margin_x, w - spec.object_width - margin_x));

  // Object colors: each channel pushed toward the end of [0,1] opposite the
  // background mean, so the object contrasts in every channel.
  double bg_mean[3] = {0, 0, 0};
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) bg_mean[c] += gt.at_index(i, c);
  }
  double color_a[3];
  double color_b[3];
  for (int c = 0; c < 3; ++c) {
    bg_mean[c] /= static_cast<double>(gt.pixel_count());
    const bool high = bg_mean[c] < 0.5 ? true : false;
    const double far = high ? rng.uniform_real(0.85, 0.98) : rng.uniform_real(0.02, 0.15);
    const double near = high ? rng.uniform_real(0.55, 0.7) : rng.uniform_real(0.3, 0.45);
    color_a[c] = far;
    color_b[c] = rng.uniform01() < 0.5 ? near : far;
  }
  // at least one channel must differ between the two checker colors
  color_b[0] = bg_mean[0] < 0.5 ? 0.6 : 0.4;

  Image comp = gt;
  auto d = comp.mutable_data();
  HoleMask truth(h, w);
  for (int y = oy; y < oy + spec.object_height; ++y) {
    for (int x = ox; x < ox + spec.object_width; ++x) {
      const bool cell = (((y - oy) / 4) + ((x - ox) / 4)) % 2 == 0;
      for (int c = 0; c < 3; ++c) {
        const double v = (cell ? color_a[c] : color_b[c]) + rng.uniform_real(-0.03, 0.03);
        d[(static_cast<std::size_t>(y) * w + x) * 3 + c] = std::clamp(v, 0.0, 1.0);
      }
      truth.set(y, x, true);
    }
  }
  SyntheticScene s{spec, std::move(gt), std::move(comp), truth, erode(truth, spec.halo)};
  if (area(s.provided_seg_mask) == 0) {
    throw std::invalid_argument("make_scene: halo erodes the whole object");
  }
  return s;
}

// The fixed 10-scene suite: backgrounds alternate smooth/textured, halos cycle
// through 1, 2, 4, object sides vary from 30 to 52 px on a 128x128 frame. `halo_override`
// replaces every halo (0 gives perfect segmentation). `seed_offset` shifts
// every scene seed for repeated runs.
inline std::vector<SceneSpec> scene_suite(std::optional<int> halo_override = std::nullopt,
                                          std::uint64_t seed_offset = 0) {
  constexpr int kHalos[10] = {1, 2, 4, 2, 1, 4, 2, 1, 4, 2};
  constexpr int kHeights[10] = {36, 32, 44, 48, 30, 40, 52, 34, 38, 42};
  constexpr int kWidths[10] = {36, 42, 32, 40, 50, 38, 35, 46, 48, 30};
  std::vector<SceneSpec> out;
  for (int i = 0; i < 10; ++i) {
    SceneSpec s;
    s.background = i % 2 == 0 ? BackgroundKind::kSmooth : BackgroundKind::kTextured;
    s.halo = halo_override.value_or(kHalos[i]);
    s.object_height = kHeights[i];
    s.object_width = kWidths[i];
    s.seed = 1000 + 17 * static_cast<std::uint64_t>(i) + seed_offset;
    s.name = "scene" + std::to_string(i) + "_" + to_string(s.background) + "_halo" +
             std::to_string(s.halo);
    out.push_back(s);
  }
  return out;
}

// Judge weights for the built-in metrics, used by the benchmark. Each is about
// twice the suite-wide ratio of background error to afterimage distance for
// the true object mask (0.025 for l2, 1.6 for patch stats). The large default
// weight only makes sense for a learned perceptual distance.
inline double calibrated_lambda_a(MetricKind metric) {
  switch (metric) {
    case MetricKind::kL2: return 0.05;
    case MetricKind::kPatchStats: return 3.0;
    case MetricKind::kExternal: return 90000.0;
  }
  return 90000.0;
}

inline PipelineConfig bench_config(MetricKind metric = MetricKind::kPatchStats) {
  PipelineConfig c;
  c.metric.kind = metric;
  c.lambda_a = calibrated_lambda_a(metric);
  c.inpainter.kind = InpainterKind::kDiffusionFill;
  c.detector.kind = DetectorKind::kNull;
  return c;
}

struct RemovalRow {
  std::string scene;
  std::string mask;
  double psnr = 0.0;
  double ssim = 0.0;
  double l2 = 0.0;       // vs ground truth, whole image
  double ring_l2 = 0.0;  // vs ground truth, object pixels missed by the segmentation
  JudgeBreakdown judge;
  double hole_fraction = 0.0;
};

struct RemovalReport {
  std::vector<RemovalRow> rows;
};

inline RemovalRow score_removal(const SyntheticScene& scene, const std::string& name,
                                const HoleMask& holes, const Image& completed,
                                const JudgeBreakdown& score) {
  RemovalRow r;
  r.scene = scene.spec.name;
  r.mask = name;
  r.psnr = psnr(completed, scene.ground_truth);
  r.ssim = ssim(completed, scene.ground_truth);
  r.l2 = l2_energy(completed, scene.ground_truth);
  r.ring_l2 = l2_energy(completed, scene.ground_truth, scene.ring());
  r.judge = score;
  r.hole_fraction = static_cast<double>(area(holes)) / holes.pixel_count();
  return r;
}

// Dilated segmentation masks, one row per kernel size in the order given.
inline RemovalReport baseline_sweep(const SyntheticScene& scene, const std::vector<int>& kernel_sizes,
                                    const Judge& judge) {
  RemovalReport rep;
  for (int k : kernel_sizes) {
    const HoleMask holes = dilate(scene.provided_seg_mask, k);
    const Image completed = complete(scene.composited, complement(holes), judge.oracles().inpainter);
    rep.rows.push_back(
        score_removal(scene, "kernel_" + std::to_string(k), holes, completed, judge(complement(holes))));
  }
  return rep;
}

struct AuraRun {
  RemovalRow row;
  AuraResult result;
};

inline AuraRun run_aura(const SyntheticScene& scene, const PipelineConfig& cfg,
                        const ProgressFn& progress = {}) {
  AuraRun run;
  run.result = run_aura(scene.composited, scene.provided_seg_mask, cfg, progress);
  const auto& sel = run.result.candidates.selected();
  run.row = score_removal(scene, "aura", sel.mask, run.result.completed, sel.score);
  return run;
}

inline void write_report_csv(const std::filesystem::path& path, const RemovalReport& rep) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scene,mask,psnr_db,ssim,l2,ring_l2,judge_background,judge_afterimage,judge_detect,"
         "judge_total,hole_fraction\n";
  out << std::setprecision(10);
  for (const auto& r : rep.rows) {
    out << r.scene << ',' << r.mask << ',' << r.psnr << ',' << r.ssim << ',' << r.l2 << ','
        << r.ring_l2 << ',' << r.judge.background << ',' << r.judge.afterimage << ','
        << r.judge.detect << ',' << r.judge.total << ',' << r.hole_fraction << '\n';
  }
}

inline std::string format_report_table(const RemovalReport& rep) {
  std::ostringstream os;
  os << std::left << std::setw(30) << "scene" << std::setw(11) << "mask" << std::right
     << std::setw(8) << "PSNR" << std::setw(8) << "SSIM" << std::setw(11) << "L2"
     << std::setw(11) << "ring L2" << std::setw(12) << "J total" << std::setw(8) << "hole%"
     << '\n';
  os << std::fixed;
  for (const auto& r : rep.rows) {
    os << std::left << std::setw(30) << r.scene << std::setw(11) << r.mask << std::right
       << std::setprecision(2) << std::setw(8) << r.psnr << std::setprecision(4) << std::setw(8)
       << r.ssim << std::setprecision(2) << std::setw(11) << r.l2 << std::setw(11) << r.ring_l2
       << std::setprecision(5) << std::setw(12) << r.judge.total << std::setprecision(2)
       << std::setw(8) << 100.0 * r.hole_fraction << '\n';
  }
  return os.str();
}

// Outcome of the dominance check over a set of benchmarked scenes.
struct DominanceSummary {
  double aura_mean_total = 0.0;
  std::vector<std::pair<int, double>> baseline_mean_totals;  // (kernel, mean total)
  int psnr_wins = 0;  // scenes where AURA PSNR >= kernel-0 PSNR
  int scenes = 0;
  bool judge_dominates = false;
  bool psnr_ok = false;

  bool holds() const { return judge_dominates && psnr_ok; }
};

// (a) AURA's mean judge total exceeds every baseline's; (b) AURA PSNR is at
// least the kernel-0 PSNR on at least 80% of scenes.
inline DominanceSummary check_dominance(const RemovalReport& rep, const std::vector<int>& kernels) {
  DominanceSummary s;
  std::vector<std::string> scenes;
  for (const auto& r : rep.rows) {
    if (std::find(scenes.begin(), scenes.end(), r.scene) == scenes.end()) scenes.push_back(r.scene);
  }
  s.scenes = static_cast<int>(scenes.size());
  auto mean_total = [&](const std::string& mask) {
    double t = 0;
    int n = 0;
    for (const auto& r : rep.rows) {
      if (r.mask == mask) {
        t += r.judge.total;
        ++n;
      }
    }
    return n ? t / n : 0.0;
  };
  s.aura_mean_total = mean_total("aura");
  s.judge_dominates = true;
  for (int k : kernels) {
    const double m = mean_total("kernel_" + std::to_string(k));
    s.baseline_mean_totals.emplace_back(k, m);
    if (!(s.aura_mean_total > m)) s.judge_dominates = false;
  }
  for (const auto& name : scenes) {
    const RemovalRow* aura = nullptr;
    const RemovalRow* k0 = nullptr;
    for (const auto& r : rep.rows) {
      if (r.scene != name) continue;
      if (r.mask == "aura") aura = &r;
      if (r.mask == "kernel_0") k0 = &r;
    }
    if (aura && k0 && aura->psnr >= k0->psnr) ++s.psnr_wins;
  }
  s.psnr_ok = 5 * s.psnr_wins >= 4 * s.scenes;
  return s;
}

struct BenchOptions {
  int scenes = 10;
  int seeds = 3;
  std::vector<int> kernel_sizes = {0, 10, 20, 30, 40};
  std::optional<int> halo;
  PipelineConfig config = bench_config();
  std::optional<std::filesystem::path> artifact_dir;
  std::function<void(const std::string&)> log;
};

// Runs baselines and AURA on the first `scenes` suite scenes for `seeds`
// seed offsets. Rows are ordered by (seed, scene, baselines..., aura).
inline RemovalReport run_bench(const BenchOptions& opts) {
  RemovalReport rep;
  if (opts.scenes < 1 || opts.scenes > 10) throw std::invalid_argument("bench: scenes must be in [1,10]");
  if (opts.seeds < 1) throw std::invalid_argument("bench: seeds must be >= 1");
  for (int s = 0; s < opts.seeds; ++s) {
    auto suite = scene_suite(opts.halo, static_cast<std::uint64_t>(s) * 100000);
    for (int i = 0; i < opts.scenes; ++i) {
      auto spec = suite[static_cast<std::size_t>(i)];
      if (opts.seeds > 1) spec.name += "_s" + std::to_string(s);
      const auto scene = make_scene(spec);
      PipelineConfig cfg = opts.config;
      cfg.seed = opts.config.seed + static_cast<std::uint64_t>(s);
      const Judge judge(scene.composited, scene.provided_seg_mask, cfg.oracles());
      auto base = baseline_sweep(scene, opts.kernel_sizes, judge);
      auto aura = run_aura(scene, cfg);
      for (auto& r : base.rows) rep.rows.push_back(std::move(r));
      rep.rows.push_back(aura.row);
      if (opts.artifact_dir) {
        const auto dir = *opts.artifact_dir / spec.name;
        write_generate_artifacts(dir, aura.result, scene.provided_seg_mask, cfg);
        save_image(dir / "ground_truth.png", scene.ground_truth);
        save_image(dir / "input.png", scene.composited);
        save_mask(dir / "seg_mask.pgm", scene.provided_seg_mask);
      }
      if (opts.log) {
        std::ostringstream os;
        os << spec.name << ": aura P=" << aura.result.candidates.selected().percentile
           << " total=" << aura.row.judge.total << " psnr=" << aura.row.psnr;
        opts.log(os.str());
      }
    }
  }
  return rep;
}

}  // namespace aura
