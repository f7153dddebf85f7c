#pragma once

// Random keep-mask generation: start from the complement of the target
// segmentation and punch a few filled disks into it. The first patches are
// anchored on the target; the rest land anywhere on (or just off) the image.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/rng.hpp"

namespace aura {

struct SamplerConfig {
  int n_samples = 2000;
  int patch_count_min = 3;
  int patch_count_max = 5;
  int anchored_patch_count = 3;
  int radius_min = 10;
  int radius_max = 40;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_samples <= 0) throw std::invalid_argument("sampler: n_samples must be positive");
    if (patch_count_min <= 0 || patch_count_max <= 0 || anchored_patch_count <= 0) {
      throw std::invalid_argument("sampler: patch counts must be positive");
    }
    if (patch_count_min > patch_count_max) {
      throw std::invalid_argument("sampler: patch_count_min > patch_count_max");
    }
    if (anchored_patch_count > patch_count_min) {
      throw std::invalid_argument("sampler: anchored_patch_count > patch_count_min");
    }
    if (radius_min <= 0 || radius_max <= 0 || radius_min > radius_max) {
      throw std::invalid_argument("sampler: invalid radius range");
    }
  }

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

inline void to_json(nlohmann::json& j, const SamplerConfig& c) {
  j = nlohmann::json{{"n_samples", c.n_samples},
                     {"patch_count_min", c.patch_count_min},
                     {"patch_count_max", c.patch_count_max},
                     {"anchored_patch_count", c.anchored_patch_count},
                     {"radius_min", c.radius_min},
                     {"radius_max", c.radius_max},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SamplerConfig& c) {
  c.n_samples = j.value("n_samples", c.n_samples);
  c.patch_count_min = j.value("patch_count_min", c.patch_count_min);
  c.patch_count_max = j.value("patch_count_max", c.patch_count_max);
  c.anchored_patch_count = j.value("anchored_patch_count", c.anchored_patch_count);
  c.radius_min = j.value("radius_min", c.radius_min);
  c.radius_max = j.value("radius_max", c.radius_max);
  c.seed = j.value("seed", c.seed);
}

// Holes every pixel whose center (x, y) lies within distance r of (cx, cy).
inline void punch_disk(KeepMask& mask, double cx, double cy, double r) {
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(cy + r)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(cx + r)));
  const double r2 = r * r;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - cy;
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      if (dx * dx + dy * dy <= r2) mask.set(y, x, false);
    }
  }
}

namespace sampler_detail {

inline KeepMask draw(const HoleMask& target, const Region& target_pixels, const SamplerConfig& cfg,
                     Xoshiro256& rng) {
  KeepMask mask = complement(target);
  const int w = target.width();
  const int h = target.height();
  const auto patches = rng.uniform_int(cfg.patch_count_min, cfg.patch_count_max);
  for (std::int64_t j = 0; j < patches; ++j) {
    // The radius is drawn first; both center rules below depend on it.
    const double r = static_cast<double>(rng.uniform_int(cfg.radius_min, cfg.radius_max));
    double cx;
    double cy;
    if (j < cfg.anchored_patch_count) {
      const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(target_pixels.count()) - 1);
      const auto idx = target_pixels.indices()[static_cast<std::size_t>(pick)];
      const double ax = static_cast<double>(idx % static_cast<std::uint32_t>(w));
      const double ay = static_cast<double>(idx / static_cast<std::uint32_t>(w));
      cx = rng.uniform_real(ax - r, ax + r);
      cy = rng.uniform_real(ay - r, ay + r);
    } else {
      cx = rng.uniform_real(-r, w + r);
      cy = rng.uniform_real(-r, h + r);
    }
    punch_disk(mask, cx, cy, r);
  }
  return mask;
}

inline constexpr int kMaxRedraws = 10000;

}  // namespace sampler_detail

// One draw. `target_pixels` must be Region::of(target); it is passed in so
// batch generation does not rebuild it per mask.
// A draw that holes every pixel leaves the inpainter nothing to work from; it
// is discarded and redrawn from the same stream.
inline KeepMask sample_mask(const HoleMask& target, const Region& target_pixels,
                            const SamplerConfig& cfg, Xoshiro256& rng) {
  if (target_pixels.empty()) {
    throw std::invalid_argument("sample_mask: target mask is empty");
  }
  if (target_pixels.count() == target.pixel_count()) {
    throw std::invalid_argument("sample_mask: target covers the whole image");
  }
  for (int attempt = 0; attempt < sampler_detail::kMaxRedraws; ++attempt) {
    KeepMask mask = sampler_detail::draw(target, target_pixels, cfg, rng);
    if (area(mask) > 0) return mask;
  }
  throw std::invalid_argument("sample_mask: every draw holes the whole image; radii too large for it");
}

inline KeepMask sample_mask(const HoleMask& target, const SamplerConfig& cfg,
                            Xoshiro256& rng) {
  return sample_mask(target, Region::of(target), cfg, rng);
}

// The N masks of one run. Masks are regenerated on demand from their
// per-index stream, so a batch costs O(H*W) memory regardless of N and
// mask(i) is identical no matter which thread asks for it.
class MaskBatch {
 public:
  MaskBatch(HoleMask target, SamplerConfig cfg)
      : target_(std::move(target)), pixels_(Region::of(target_)), cfg_(cfg) {
    cfg_.validate();
    if (pixels_.empty()) throw std::invalid_argument("MaskBatch: target mask is empty");
  }

  std::size_t size() const { return static_cast<std::size_t>(cfg_.n_samples); }
  Size image_size() const { return target_.size(); }
  std::uint64_t seed() const { return cfg_.seed; }
  const SamplerConfig& config() const { return cfg_; }
  const HoleMask& target() const { return target_; }

  KeepMask at(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("MaskBatch index");
    auto rng = Xoshiro256::for_stream(cfg_.seed, i);
    return sample_mask(target_, pixels_, cfg_, rng);
  }

  std::vector<KeepMask> materialize() const {
    std::vector<KeepMask> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i));
    return out;
  }

 private:
  HoleMask target_;
  Region pixels_;
  SamplerConfig cfg_;
};

inline MaskBatch sample_batch(const HoleMask& target, const SamplerConfig& cfg) {
  return MaskBatch(target, cfg);
}

// Writes mask_00000.pgm ... plus manifest.json (seed, config, target size).
inline void dump_batch(const MaskBatch& batch, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "mask_%05zu.pgm", i);
    save_mask(dir / name, batch.at(i));
  }
  nlohmann::json manifest{{"seed", batch.seed()},
                          {"config", batch.config()},
                          {"height", batch.image_size().height},
                          {"width", batch.image_size().width},
                          {"count", batch.size()}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace aura
