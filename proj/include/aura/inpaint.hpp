#pragma once

// The object remover: fills the holes of a keep-masked image. Every backend's
// output is composited with the original on keep pixels, so only holes ever
// carry synthesized content.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/process.hpp"

namespace aura {

enum class InpainterKind { kMeanFill, kDiffusionFill, kExternal };

struct InpainterSpec {
  InpainterKind kind = InpainterKind::kDiffusionFill;
  double tolerance = 1e-4;
  int max_iterations = 10000;
  std::string command;  // external only
  double timeout_seconds = 120.0;

  void validate() const {
    if (!(tolerance > 0)) throw std::invalid_argument("inpainter: tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("inpainter: max_iterations must be >= 1");
    if (kind == InpainterKind::kExternal && command.empty()) {
      throw std::invalid_argument("inpainter: external backend needs a command");
    }
    if (!(timeout_seconds > 0)) throw std::invalid_argument("inpainter: timeout must be > 0");
  }
};

inline std::string to_string(InpainterKind k) {
  switch (k) {
    case InpainterKind::kMeanFill: return "mean";
    case InpainterKind::kDiffusionFill: return "diffusion";
    case InpainterKind::kExternal: return "external";
  }
  return "?";
}

inline InpainterKind inpainter_kind_from_string(const std::string& s) {
  if (s == "mean" || s == "mean-fill") return InpainterKind::kMeanFill;
  if (s == "diffusion" || s == "diffusion-fill") return InpainterKind::kDiffusionFill;
  if (s == "external") return InpainterKind::kExternal;
  throw std::invalid_argument("unknown inpainter kind: " + s);
}

inline void to_json(nlohmann::json& j, const InpainterSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"tolerance", s.tolerance},
                     {"max_iterations", s.max_iterations},
                     {"command", s.command},
                     {"timeout_seconds", s.timeout_seconds}};
}

inline void from_json(const nlohmann::json& j, InpainterSpec& s) {
  if (j.contains("kind")) s.kind = inpainter_kind_from_string(j.at("kind").get<std::string>());
  s.tolerance = j.value("tolerance", s.tolerance);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.command = j.value("command", s.command);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
}

namespace inpaint_detail {

inline std::vector<double> keep_mean(const Image& img, const KeepMask& keep) {
  const int c = img.channels();
  std::vector<double> sum(c, 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < keep.pixel_count(); ++i) {
    if (!keep.at_index(i)) continue;
    for (int k = 0; k < c; ++k) sum[k] += img.at_index(i, k);
    ++n;
  }
  for (auto& s : sum) s /= static_cast<double>(n);
  return sum;
}

// Working buffer for the diffusion solver. Values may be anything at hole
// pixels; only keep pixels are read as boundary data.
struct Grid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> keep;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

// Per-channel range of keep pixels that touch a hole (4-neighborhood).
inline void boundary_range(const Grid& g, std::vector<double>& lo, std::vector<double>& hi) {
  lo.assign(g.channels, std::numeric_limits<double>::infinity());
  hi.assign(g.channels, -std::numeric_limits<double>::infinity());
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * g.width + x;
      if (!g.keep[i]) continue;
      const bool touches = (x > 0 && !g.keep[i - 1]) || (x + 1 < g.width && !g.keep[i + 1]) ||
                           (y > 0 && !g.keep[i - g.width]) ||
                           (y + 1 < g.height && !g.keep[i + g.width]);
      if (!touches) continue;
      for (int k = 0; k < g.channels; ++k) {
        lo[k] = std::min(lo[k], g.values[i * g.channels + k]);
        hi[k] = std::max(hi[k], g.values[i * g.channels + k]);
      }
    }
  }
}

// Red-black SOR on the 4-neighbor discrete Laplace equation over hole pixels,
// keep pixels as Dirichlet data. Border pixels average only the neighbors
// that exist. Stops once the largest update of a sweep is below `tolerance`.
// The sweep order is fixed, so the result is deterministic.
inline constexpr double kSorOmega = 1.85;

inline void relax(Grid& g, double tolerance, int max_iterations) {
  const int w = g.width;
  const int c = g.channels;
  std::vector<std::uint32_t> holes;
  for (int color = 0; color < 2; ++color) {
    for (std::size_t i = 0; i < g.pixels(); ++i) {
      const int y = static_cast<int>(i / w);
      const int x = static_cast<int>(i % w);
      if (!g.keep[i] && (x + y) % 2 == color) holes.push_back(static_cast<std::uint32_t>(i));
    }
  }
  if (holes.empty()) return;

  // neighbor lists, flattened 4 per hole; UINT32_MAX marks a missing neighbor
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> nbr(holes.size() * 4, kNone);
  std::vector<double> inv_count(holes.size());
  for (std::size_t h = 0; h < holes.size(); ++h) {
    const std::uint32_t i = holes[h];
    const int y = static_cast<int>(i / w);
    const int x = static_cast<int>(i % w);
    int n = 0;
    if (y > 0) nbr[h * 4 + n++] = i - w;
    if (x > 0) nbr[h * 4 + n++] = i - 1;
    if (x + 1 < w) nbr[h * 4 + n++] = i + 1;
    if (y + 1 < g.height) nbr[h * 4 + n++] = i + w;
    inv_count[h] = 1.0 / n;
  }

  std::vector<double> lo;
  std::vector<double> hi;
  boundary_range(g, lo, hi);
  for (int it = 0; it < max_iterations; ++it) {
    double max_update = 0.0;
    for (std::size_t h = 0; h < holes.size(); ++h) {
      const std::size_t base = static_cast<std::size_t>(holes[h]) * c;
      for (int k = 0; k < c; ++k) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) {
          const std::uint32_t q = nbr[h * 4 + j];
          if (q == kNone) break;
          s += g.values[static_cast<std::size_t>(q) * c + k];
        }
        const double delta = kSorOmega * (s * inv_count[h] - g.values[base + k]);
        g.values[base + k] += delta;
        max_update = std::max(max_update, std::abs(delta));
      }
    }
    if (max_update < tolerance) break;
  }
  // over-relaxation can leave the last sweep a hair outside the boundary range
  for (std::uint32_t i : holes) {
    for (int k = 0; k < c; ++k) {
      double& v = g.values[static_cast<std::size_t>(i) * c + k];
      v = std::clamp(v, lo[k], hi[k]);
    }
  }
}

// Coarse-to-fine initial guess: solve a 2x-downsampled problem, seed the fine
// holes with it, clamp to the boundary range, then iterate at full
// resolution. The fixed point is the same as without it; the pyramid only
// shortens the iteration count on large holes.
inline void diffuse(Grid& g, double tolerance, int max_iterations) {
  std::size_t hole_count = 0;
  for (auto k : g.keep) hole_count += k ? 0 : 1;
  if (hole_count == 0) return;

  const int c = g.channels;
  if (g.height >= 8 && g.width >= 8 && hole_count > 16) {
    Grid coarse;
    coarse.height = (g.height + 1) / 2;
    coarse.width = (g.width + 1) / 2;
    coarse.channels = c;
    coarse.values.assign(coarse.pixels() * c, 0.0);
    coarse.keep.assign(coarse.pixels(), 0);
    for (int cy = 0; cy < coarse.height; ++cy) {
      for (int cx = 0; cx < coarse.width; ++cx) {
        int n = 0;
        const std::size_t ci = static_cast<std::size_t>(cy) * coarse.width + cx;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int y = 2 * cy + dy;
            const int x = 2 * cx + dx;
            if (y >= g.height || x >= g.width) continue;
            const std::size_t i = static_cast<std::size_t>(y) * g.width + x;
            if (!g.keep[i]) continue;
            for (int k = 0; k < c; ++k) coarse.values[ci * c + k] += g.values[i * c + k];
            ++n;
          }
        }
        if (n > 0) {
          coarse.keep[ci] = 1;
          for (int k = 0; k < c; ++k) coarse.values[ci * c + k] /= n;
        }
      }
    }
    diffuse(coarse, tolerance, max_iterations);

    std::vector<double> lo;
    std::vector<double> hi;
    boundary_range(g, lo, hi);
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * g.width + x;
        if (g.keep[i]) continue;
        const std::size_t ci = static_cast<std::size_t>(y / 2) * coarse.width + x / 2;
        for (int k = 0; k < c; ++k) {
          g.values[i * c + k] = std::clamp(coarse.values[ci * c + k], lo[k], hi[k]);
        }
      }
    }
  } else {
    std::vector<double> lo;
    std::vector<double> hi;
    boundary_range(g, lo, hi);
    for (std::size_t i = 0; i < g.pixels(); ++i) {
      if (g.keep[i]) continue;
      for (int k = 0; k < c; ++k) g.values[i * c + k] = 0.5 * (lo[k] + hi[k]);
    }
  }
  relax(g, tolerance, max_iterations);
}

inline Image external_fill(const Image& img, const KeepMask& keep, const InpainterSpec& spec) {
  TempDir dir;
  save_image(dir.path() / "input.png", apply_mask(img, keep));
  save_mask(dir.path() / "keep.pgm", keep);
  const auto res = run_command(
      spec.command, dir.path().string(),
      std::chrono::milliseconds(static_cast<long long>(spec.timeout_seconds * 1000)));
  if (!res.ok()) {
    throw OracleError("external inpainter failed: " + res.diagnostics());
  }
  Image out;
  try {
    out = load_image(dir.path() / "output.png");
  } catch (const std::exception& e) {
    throw OracleError(std::string("external inpainter output unreadable: ") + e.what());
  }
  if (out.size() != img.size()) {
    throw OracleError("external inpainter output has size " + to_string(out.size()) +
                      ", expected " + to_string(img.size()));
  }
  if (out.channels() == img.channels()) return out;
  // Channel count mismatch: replicate gray or average RGB.
  Image conv(img.height(), img.width(), img.channels());
  auto d = conv.mutable_data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (img.channels() == 3) {
      for (int k = 0; k < 3; ++k) d[i * 3 + k] = out.at_index(i, 0);
    } else {
      d[i] = (out.at_index(i, 0) + out.at_index(i, 1) + out.at_index(i, 2)) / 3.0;
    }
  }
  return conv;
}

}  // namespace inpaint_detail

// Fills the keep=0 pixels of `img` and returns the composited result.
inline Image complete(const Image& img, const KeepMask& keep, const InpainterSpec& spec) {
  require_same_size(img.size(), keep.size(), "complete");
  if (area(keep) == 0) {
    throw std::invalid_argument("complete: keep mask has no visible pixels");
  }
  const int c = img.channels();
  Image out;
  switch (spec.kind) {
    case InpainterKind::kMeanFill: {
      out = img;
      const auto mean = inpaint_detail::keep_mean(img, keep);
      auto d = out.mutable_data();
      for (std::size_t i = 0; i < keep.pixel_count(); ++i) {
        if (keep.at_index(i)) continue;
        for (int k = 0; k < c; ++k) d[i * c + k] = mean[k];
      }
      break;
    }
    case InpainterKind::kDiffusionFill: {
      inpaint_detail::Grid g{img.height(), img.width(), c,
                             std::vector<double>(img.data().begin(), img.data().end()),
                             std::vector<std::uint8_t>(keep.bits().begin(), keep.bits().end())};
      inpaint_detail::diffuse(g, spec.tolerance, spec.max_iterations);
      out = img;
      auto d = out.mutable_data();
      for (std::size_t i = 0; i < g.values.size(); ++i) d[i] = std::clamp(g.values[i], 0.0, 1.0);
      break;
    }
    case InpainterKind::kExternal:
      out = inpaint_detail::external_fill(img, keep, spec);
      break;
  }
  // Composite: keep pixels are the original, bit for bit.
  auto d = out.mutable_data();
  for (std::size_t i = 0; i < keep.pixel_count(); ++i) {
    if (!keep.at_index(i)) continue;
    for (int k = 0; k < c; ++k) d[i * c + k] = img.at_index(i, k);
  }
  return out;
}

}  // namespace aura
