#pragma once

// Importance map: for every pixel x, the expected judge score over masks that
// hole x,
//
//   phi(x) = E[ J(R(I * M)) | M(x) = 0 ]
//          = sum_m J(m) (1 - m(x)) P[m] / sum_m (1 - m(x)) P[m].
//
// This conditions on the pixel being *hidden*, the dual of keep-conditioned
// saliency where the expectation is taken over M(x) = 1. The Monte-Carlo
// estimate replaces P[m] with the empirical distribution of a sampled batch.
//
// Pixels that no sample ever holes get a sentinel one below the smallest
// estimated value, so they rank last.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/judge.hpp"
#include "aura/parallel.hpp"

namespace aura {

struct ImportanceMap {
  Size size{};
  std::vector<double> values;
  std::vector<std::uint32_t> coverage;
  std::size_t samples = 0;

  // Optional diagnostics, empty unless the accumulator had them.
  std::vector<double> std_error;   // NaN where coverage < 2
  std::vector<double> background;  // per-component conditional means
  std::vector<double> afterimage;
  std::vector<double> detect;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * size.width + x]; }

  // Mean standard error over pixels with coverage >= 2; a scalar summary of
  // estimator noise that shrinks as the batch grows.
  double mean_std_error() const {
    double s = 0.0;
    std::size_t n = 0;
    for (double v : std_error) {
      if (std::isnan(v)) continue;
      s += v;
      ++n;
    }
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }
};

struct ScoredSample {
  KeepMask mask;
  JudgeBreakdown score;
};

// Running sums for the Monte-Carlo estimate. Merging is elementwise addition;
// see estimate_importance for the fixed order in which merges happen.
class ImportanceAccumulator {
 public:
  ImportanceAccumulator() = default;
  ImportanceAccumulator(Size size, bool with_components)
      : size_(size),
        sum_(size.pixels(), 0.0),
        sum_sq_(size.pixels(), 0.0),
        coverage_(size.pixels(), 0),
        components_(with_components) {
    if (with_components) {
      bg_.assign(size.pixels(), 0.0);
      af_.assign(size.pixels(), 0.0);
      det_.assign(size.pixels(), 0.0);
    }
  }

  Size size() const { return size_; }
  std::size_t samples() const { return samples_; }
  std::span<const double> sums() const { return sum_; }
  std::span<const std::uint32_t> coverage() const { return coverage_; }

  void add(const KeepMask& mask, double total) { add_impl(mask, total, nullptr); }
  void add(const KeepMask& mask, const JudgeBreakdown& score) { add_impl(mask, score.total, &score); }

  void merge(const ImportanceAccumulator& other) {
    require_same_size(size_, other.size_, "ImportanceAccumulator::merge");
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      sum_[i] += other.sum_[i];
      sum_sq_[i] += other.sum_sq_[i];
      coverage_[i] += other.coverage_[i];
    }
    if (components_ && other.components_) {
      for (std::size_t i = 0; i < sum_.size(); ++i) {
        bg_[i] += other.bg_[i];
        af_[i] += other.af_[i];
        det_[i] += other.det_[i];
      }
    } else {
      components_ = false;
    }
    samples_ += other.samples_;
  }

  ImportanceMap finalize() const {
    if (samples_ == 0) throw std::invalid_argument("finalize: no samples accumulated");
    ImportanceMap map;
    map.size = size_;
    map.samples = samples_;
    map.coverage = coverage_;
    map.values.assign(sum_.size(), 0.0);
    map.std_error.assign(sum_.size(), std::numeric_limits<double>::quiet_NaN());
    if (components_) {
      map.background.assign(sum_.size(), 0.0);
      map.afterimage.assign(sum_.size(), 0.0);
      map.detect.assign(sum_.size(), 0.0);
    }
    bool any = false;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      const std::uint32_t n = coverage_[i];
      if (n == 0) continue;
      any = true;
      const double mean = sum_[i] / n;
      map.values[i] = mean;
      lowest = std::min(lowest, mean);
      if (n >= 2) {
        const double var = std::max(0.0, (sum_sq_[i] - sum_[i] * mean) / (n - 1));
        map.std_error[i] = std::sqrt(var / n);
      }
      if (components_) {
        map.background[i] = bg_[i] / n;
        map.afterimage[i] = af_[i] / n;
        map.detect[i] = det_[i] / n;
      }
    }
    if (!any) throw std::invalid_argument("finalize: no pixel was ever masked");
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      if (coverage_[i] == 0) map.values[i] = lowest - 1.0;
    }
    return map;
  }

 private:
  void add_impl(const KeepMask& mask, double total, const JudgeBreakdown* score) {
    require_same_size(size_, mask.size(), "ImportanceAccumulator::add");
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) continue;
      sum_[i] += total;
      sum_sq_[i] += total * total;
      coverage_[i] += 1;
    }
    if (components_) {
      if (score == nullptr) {
        components_ = false;
        bg_.clear();
        af_.clear();
        det_.clear();
      } else {
        for (std::size_t i = 0; i < bits.size(); ++i) {
          if (bits[i]) continue;
          bg_[i] += score->background;
          af_[i] += score->afterimage;
          det_[i] += score->detect;
        }
      }
    }
    ++samples_;
  }

  Size size_{};
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::vector<std::uint32_t> coverage_;
  std::vector<double> bg_;
  std::vector<double> af_;
  std::vector<double> det_;
  bool components_ = false;
  std::size_t samples_ = 0;
};

// Free-function spellings of the accumulator operations.
inline ImportanceAccumulator& accumulate(ImportanceAccumulator& acc, const ScoredSample& s) {
  acc.add(s.mask, s.score);
  return acc;
}
inline ImportanceMap finalize(const ImportanceAccumulator& acc) { return acc.finalize(); }

// Anything indexable that yields keep-masks: MaskBatch, MaskList.
template <typename S>
concept MaskSource = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.at(i) } -> std::convertible_to<KeepMask>;
  { s.image_size() } -> std::convertible_to<Size>;
};

class MaskList {
 public:
  explicit MaskList(std::span<const KeepMask> masks) : masks_(masks) {
    if (masks_.empty()) throw std::invalid_argument("MaskList: no masks");
    for (const auto& m : masks_) require_same_size(m.size(), masks_[0].size(), "MaskList");
  }
  std::size_t size() const { return masks_.size(); }
  const KeepMask& at(std::size_t i) const { return masks_[i]; }
  Size image_size() const { return masks_[0].size(); }

 private:
  std::span<const KeepMask> masks_;
};

// A scorer maps a keep-mask to either a JudgeBreakdown or a bare total.
template <typename F>
concept MaskScorer = requires(const F& f, const KeepMask& m) {
  requires std::same_as<std::decay_t<decltype(f(m))>, JudgeBreakdown> ||
               std::convertible_to<decltype(f(m)), double>;
};

namespace importance_detail {

// Samples are accumulated in fixed-size blocks, each block in index order.
// Block partials are then combined by a binary-counter pairwise tree in block
// order. The block size and tree shape depend only on the sample count, so
// the floating-point result is identical for every worker count.
inline constexpr std::size_t kBlockSize = 16;

class TreeReducer {
 public:
  explicit TreeReducer(std::size_t blocks) : pending_(blocks) {}

  void push(std::size_t block, ImportanceAccumulator acc) {
    std::lock_guard lock(mu_);
    pending_[block] = std::move(acc);
    while (cursor_ < pending_.size() && pending_[cursor_]) {
      stack_.push_back({0, std::move(*pending_[cursor_])});
      pending_[cursor_].reset();
      ++cursor_;
      while (stack_.size() >= 2 && stack_[stack_.size() - 1].level == stack_[stack_.size() - 2].level) {
        auto right = std::move(stack_.back());
        stack_.pop_back();
        stack_.back().acc.merge(right.acc);
        stack_.back().level += 1;
      }
    }
  }

  ImportanceAccumulator finish() {
    std::lock_guard lock(mu_);
    if (cursor_ != pending_.size() || stack_.empty()) {
      throw std::logic_error("TreeReducer: incomplete reduction");
    }
    ImportanceAccumulator acc = std::move(stack_.back().acc);
    stack_.pop_back();
    while (!stack_.empty()) {
      stack_.back().acc.merge(acc);
      acc = std::move(stack_.back().acc);
      stack_.pop_back();
    }
    return acc;
  }

 private:
  struct Node {
    int level;
    ImportanceAccumulator acc;
  };
  std::mutex mu_;
  std::vector<std::optional<ImportanceAccumulator>> pending_;
  std::vector<Node> stack_;
  std::size_t cursor_ = 0;
};

template <typename F>
constexpr bool returns_breakdown =
    std::same_as<std::decay_t<std::invoke_result_t<const F&, const KeepMask&>>, JudgeBreakdown>;

}  // namespace importance_detail

struct EstimateOptions {
  int workers = 1;
  // Called after each finished block with the number of samples done so far.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Scores every mask of `source` (concurrently when workers > 1), folds the
// results and finalizes. Same source and scorer give a bit-identical map for
// any worker count.
template <MaskSource Source, MaskScorer Scorer>
ImportanceAccumulator accumulate_importance(const Source& source, const Scorer& scorer,
                                            const EstimateOptions& opts = {}) {
  using importance_detail::kBlockSize;
  const std::size_t n = source.size();
  if (n == 0) throw std::invalid_argument("estimate_importance: empty batch");
  const Size size = source.image_size();
  constexpr bool components = importance_detail::returns_breakdown<Scorer>;
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  importance_detail::TreeReducer reducer(blocks);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  parallel_for(blocks, opts.workers, [&](std::size_t b) {
    ImportanceAccumulator acc(size, components);
    const std::size_t end = std::min(n, (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      const KeepMask& mask = source.at(i);
      acc.add(mask, scorer(mask));
    }
    reducer.push(b, std::move(acc));
    const std::size_t finished = done.fetch_add(end - b * kBlockSize) + (end - b * kBlockSize);
    if (opts.progress) {
      std::lock_guard lock(progress_mu);
      opts.progress(finished, n);
    }
  });
  return reducer.finish();
}

template <MaskSource Source, MaskScorer Scorer>
ImportanceMap estimate_importance(const Source& source, const Scorer& scorer,
                                  const EstimateOptions& opts = {}) {
  return accumulate_importance(source, scorer, opts).finalize();
}

struct WeightedMask {
  KeepMask mask;
  double probability;
};

// Direct evaluation of the conditional expectation over an enumerated mask
// family. Test oracle for the Monte-Carlo path; not meant for real images.
template <MaskScorer Scorer>
ImportanceMap exact_importance(std::span<const WeightedMask> family, const Scorer& scorer) {
  if (family.empty()) throw std::invalid_argument("exact_importance: empty family");
  const Size size = family[0].mask.size();
  std::vector<double> num(size.pixels(), 0.0);
  std::vector<double> den(size.pixels(), 0.0);
  std::vector<std::uint32_t> cover(size.pixels(), 0);
  for (const auto& wm : family) {
    require_same_size(size, wm.mask.size(), "exact_importance");
    double j;
    if constexpr (importance_detail::returns_breakdown<Scorer>) {
      j = scorer(wm.mask).total;
    } else {
      j = static_cast<double>(scorer(wm.mask));
    }
    for (std::size_t i = 0; i < size.pixels(); ++i) {
      if (wm.mask.at_index(i)) continue;
      num[i] += j * wm.probability;
      den[i] += wm.probability;
      cover[i] += 1;
    }
  }
  ImportanceMap map;
  map.size = size;
  map.samples = family.size();
  map.coverage = cover;
  map.values.assign(size.pixels(), 0.0);
  double lowest = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < size.pixels(); ++i) {
    if (den[i] > 0.0) {
      map.values[i] = num[i] / den[i];
      lowest = std::min(lowest, map.values[i]);
      any = true;
    }
  }
  for (std::size_t i = 0; i < size.pixels(); ++i) {
    if (!(den[i] > 0.0)) map.values[i] = any ? lowest - 1.0 : 0.0;
  }
  return map;
}

// ---------------------------------------------------------------------------
// Serialization
//
// Binary grid, little-endian:
//   char[8]  magic "AURAIMP1"
//   uint32   height
//   uint32   width
//   uint32   sample count N
//   uint64   seed
//   float32  values[height * width], row-major

inline constexpr char kImportanceMagic[8] = {'A', 'U', 'R', 'A', 'I', 'M', 'P', '1'};

struct ImportanceGrid {
  Size size{};
  std::uint32_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<float> values;
};

namespace importance_detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw IoError("truncated importance grid");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace importance_detail

inline void write_importance(const std::filesystem::path& path, const ImportanceMap& map,
                             std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kImportanceMagic, sizeof(kImportanceMagic));
  importance_detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(map.size.height));
  importance_detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(map.size.width));
  importance_detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(map.samples));
  importance_detail::put_le<std::uint64_t>(os, seed);
  for (double v : map.values) importance_detail::put_le<float>(os, static_cast<float>(v));
  if (!os) throw IoError("write failed for " + path.string());
}

inline ImportanceGrid read_importance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kImportanceMagic, sizeof(magic)) != 0) {
    throw IoError("not an importance grid: " + path.string());
  }
  ImportanceGrid g;
  g.size.height = static_cast<int>(importance_detail::get_le<std::uint32_t>(is));
  g.size.width = static_cast<int>(importance_detail::get_le<std::uint32_t>(is));
  g.samples = importance_detail::get_le<std::uint32_t>(is);
  g.seed = importance_detail::get_le<std::uint64_t>(is);
  g.values.resize(g.size.pixels());
  for (auto& v : g.values) v = importance_detail::get_le<float>(is);
  return g;
}

// Heatmap colormap: piecewise-linear through five RGB stops at t = 0, 0.25,
// 0.5, 0.75, 1 (black, violet, red, orange, white), where t is the min-max
// normalized importance.
inline constexpr double kHeatStops[5][3] = {
    {0.0, 0.0, 0.0}, {0.35, 0.0, 0.55}, {0.85, 0.1, 0.1}, {1.0, 0.7, 0.0}, {1.0, 1.0, 1.0}};

struct HeatmapLegend {
  double min = 0.0;
  double max = 0.0;
};

inline void to_json(nlohmann::json& j, const HeatmapLegend& l) {
  j = nlohmann::json{{"min", l.min},
                     {"max", l.max},
                     {"colormap", "piecewise-linear black,violet,red,orange,white at 0,.25,.5,.75,1"}};
}

// Min and max over the float32 values exactly as written to the binary grid.
inline HeatmapLegend heatmap_legend(const ImportanceMap& map) {
  HeatmapLegend l{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double v : map.values) {
    const double f = static_cast<float>(v);
    l.min = std::min(l.min, f);
    l.max = std::max(l.max, f);
  }
  return l;
}

inline Image heatmap(const ImportanceMap& map) {
  const auto legend = heatmap_legend(map);
  const double span = legend.max - legend.min;
  Image img(map.size.height, map.size.width, 3);
  auto d = img.mutable_data();
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double f = static_cast<float>(map.values[i]);
    const double t = span > 0 ? (f - legend.min) / span : 0.0;
    const double pos = std::clamp(t, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(pos));
    const double u = pos - k;
    for (int c = 0; c < 3; ++c) {
      d[i * 3 + c] = std::clamp(kHeatStops[k][c] + u * (kHeatStops[k + 1][c] - kHeatStops[k][c]), 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace aura
