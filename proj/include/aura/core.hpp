#pragma once

// Image and binary-mask value types shared by every stage of the pipeline.
//
// Two mask polarities exist and they are distinct types:
//   KeepMask: 1 = pixel visible to the inpainter, 0 = hole.
//   HoleMask: 1 = pixel belongs to the region of interest, 0 = background.
// Converting between them always goes through complement().

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aura {

// Raised when two grids that must agree in size do not. This is a caller bug.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Size {
  int height = 0;
  int width = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Size&, const Size&) = default;
};

inline std::string to_string(Size s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width);
}

inline void require_same_size(Size a, Size b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size mismatch " + to_string(a) +
                         " vs " + to_string(b));
  }
}

// H x W x C grid of intensities in [0,1], stored row-major with interleaved
// channels.
class Image {
 public:
  Image() = default;

  Image(int height, int width, int channels, double fill = 0.0)
      : size_{height, width}, channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {
    check_shape();
    check_values();
  }

  Image(int height, int width, int channels, std::vector<double> data)
      : size_{height, width}, channels_(channels), data_(std::move(data)) {
    check_shape();
    if (data_.size() != size_.pixels() * channels_) {
      throw std::invalid_argument("Image: data length does not match H*W*C");
    }
    check_values();
  }

  int height() const { return size_.height; }
  int width() const { return size_.width; }
  int channels() const { return channels_; }
  Size size() const { return size_; }
  std::size_t pixel_count() const { return size_.pixels(); }
  bool empty() const { return data_.empty(); }

  double at(int y, int x, int c = 0) const { return data_[offset(y, x, c)]; }
  double at_index(std::size_t pixel, int c = 0) const {
    return data_[pixel * channels_ + c];
  }

  std::span<const double> data() const { return data_; }

  // Mutable access for builders. Callers are responsible for keeping values in
  // [0,1]; validate() re-checks.
  std::span<double> mutable_data() { return data_; }
  double& mutable_at(int y, int x, int c = 0) { return data_[offset(y, x, c)]; }

  void validate() const { check_values(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * channels_ + c;
  }

  void check_shape() const {
    if (size_.height <= 0 || size_.width <= 0) {
      throw std::invalid_argument("Image: dimensions must be positive");
    }
    if (channels_ != 1 && channels_ != 3) {
      throw std::invalid_argument("Image: channels must be 1 or 3");
    }
  }

  void check_values() const {
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw std::invalid_argument("Image: intensity outside [0,1]");
      }
    }
  }

  Size size_{};
  int channels_ = 0;
  std::vector<double> data_;
};

struct KeepTag {};
struct HoleTag {};

template <typename Polarity>
class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int height, int width, bool fill = false)
      : size_{height, width}, bits_(size_.pixels(), fill ? 1 : 0) {
    if (height <= 0 || width <= 0) {
      throw std::invalid_argument("mask dimensions must be positive");
    }
  }

  BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
      : size_{height, width}, bits_(std::move(bits)) {
    if (height <= 0 || width <= 0) {
      throw std::invalid_argument("mask dimensions must be positive");
    }
    if (bits_.size() != size_.pixels()) {
      throw std::invalid_argument("mask: bit count does not match H*W");
    }
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("mask: values must be 0 or 1");
    }
  }

  static BinaryMask ones(Size s) { return BinaryMask(s.height, s.width, true); }
  static BinaryMask zeros(Size s) { return BinaryMask(s.height, s.width, false); }

  int height() const { return size_.height; }
  int width() const { return size_.width; }
  Size size() const { return size_; }
  std::size_t pixel_count() const { return bits_.size(); }

  bool at(int y, int x) const {
    return bits_[static_cast<std::size_t>(y) * size_.width + x] != 0;
  }
  bool at_index(std::size_t i) const { return bits_[i] != 0; }

  void set(int y, int x, bool v) {
    bits_[static_cast<std::size_t>(y) * size_.width + x] = v ? 1 : 0;
  }
  void set_index(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Size size_{};
  std::vector<std::uint8_t> bits_;
};

using KeepMask = BinaryMask<KeepTag>;
using HoleMask = BinaryMask<HoleTag>;

template <typename P>
struct OppositePolarity;
template <>
struct OppositePolarity<KeepTag> {
  using type = HoleTag;
};
template <>
struct OppositePolarity<HoleTag> {
  using type = KeepTag;
};

// Bitwise NOT that also flips the polarity type.
template <typename P>
BinaryMask<typename OppositePolarity<P>::type> complement(
    const BinaryMask<P>& mask) {
  std::vector<std::uint8_t> bits(mask.pixel_count());
  auto src = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = src[i] ? 0 : 1;
  return {mask.height(), mask.width(), std::move(bits)};
}

// Number of 1-bits.
template <typename P>
std::size_t area(const BinaryMask<P>& mask) {
  std::size_t n = 0;
  for (auto b : mask.bits()) n += b;
  return n;
}

template <typename P>
bool is_subset(const BinaryMask<P>& a, const BinaryMask<P>& b) {
  require_same_size(a.size(), b.size(), "is_subset");
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && !y[i]) return false;
  }
  return true;
}

template <typename P>
BinaryMask<P> mask_union(const BinaryMask<P>& a, const BinaryMask<P>& b) {
  require_same_size(a.size(), b.size(), "mask_union");
  BinaryMask<P> out = a;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (b.at_index(i)) out.set_index(i, true);
  }
  return out;
}

// Pixel-wise product I * M: pixels where keep=0 become 0 in every channel.
inline Image apply_mask(const Image& img, const KeepMask& keep) {
  require_same_size(img.size(), keep.size(), "apply_mask");
  Image out = img;
  auto data = out.mutable_data();
  const int c = img.channels();
  for (std::size_t i = 0; i < keep.pixel_count(); ++i) {
    if (!keep.at_index(i)) {
      for (int k = 0; k < c; ++k) data[i * c + k] = 0.0;
    }
  }
  return out;
}

// Side of the square structuring element used for a given kernel size.
inline int dilation_side(int kernel_size) {
  if (kernel_size <= 0) return 1;
  return 2 * ((kernel_size + 1) / 2) + 1;
}

// Morphological dilation by a centered square of side dilation_side(k).
// Separable: a horizontal then vertical running-window max.
inline HoleMask dilate(const HoleMask& mask, int kernel_size) {
  if (kernel_size < 0) throw std::invalid_argument("dilate: kernel_size < 0");
  const int r = dilation_side(kernel_size) / 2;
  if (r == 0) return mask;

  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> horiz(mask.pixel_count(), 0);
  for (int y = 0; y < h; ++y) {
    std::vector<int> prefix(w + 1, 0);
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.at(y, x) ? 1 : 0);
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - r);
      const int hi = std::min(w - 1, x + r);
      horiz[static_cast<std::size_t>(y) * w + x] = (prefix[hi + 1] - prefix[lo]) > 0;
    }
  }
  std::vector<std::uint8_t> out(mask.pixel_count(), 0);
  std::vector<int> prefix(h + 1, 0);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      prefix[y + 1] = prefix[y] + horiz[static_cast<std::size_t>(y) * w + x];
    }
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - r);
      const int hi = std::min(h - 1, y + r);
      out[static_cast<std::size_t>(y) * w + x] = (prefix[hi + 1] - prefix[lo]) > 0;
    }
  }
  return {h, w, std::move(out)};
}

// Erosion by a centered square of half-width `radius` (Chebyshev distance).
// Pixels outside the image count as background.
inline HoleMask erode(const HoleMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("erode: radius < 0");
  if (radius == 0) return mask;
  // erode(m) = not dilate(not m), with the outside treated as background
  const int h = mask.height();
  const int w = mask.width();
  HoleMask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y - radius < 0 || y + radius >= h || x - radius < 0 || x + radius >= w) {
        continue;
      }
      bool all = true;
      for (int dy = -radius; dy <= radius && all; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (!mask.at(y + dy, x + dx)) {
            all = false;
            break;
          }
        }
      }
      out.set(y, x, all);
    }
  }
  return out;
}

// Sorted, duplicate-free set of row-major pixel indices.
class Region {
 public:
  Region() = default;
  Region(Size size, std::vector<std::uint32_t> indices)
      : size_(size), indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
      throw std::invalid_argument("Region: duplicate pixel index");
    }
    if (!indices_.empty() && indices_.back() >= size_.pixels()) {
      throw std::invalid_argument("Region: pixel index out of bounds");
    }
  }

  template <typename P>
  static Region of(const BinaryMask<P>& mask) {
    std::vector<std::uint32_t> idx;
    for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
      if (mask.at_index(i)) idx.push_back(static_cast<std::uint32_t>(i));
    }
    Region r;
    r.size_ = mask.size();
    r.indices_ = std::move(idx);
    return r;
  }

  HoleMask to_hole_mask() const {
    HoleMask m(size_.height, size_.width);
    for (auto i : indices_) m.set_index(i, true);
    return m;
  }

  Size size() const { return size_; }
  std::span<const std::uint32_t> indices() const { return indices_; }
  std::size_t count() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }

 private:
  Size size_{};
  std::vector<std::uint32_t> indices_;
};

}  // namespace aura
