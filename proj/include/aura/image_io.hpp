#pragma once

// PNG (8-bit gray / RGB) and netpbm (PGM/PPM) reading and writing.
// 8-bit samples map to intensities by v/255 on load and round(v*255) on save.
// Masks are single-channel files where a sample > 127 is a 1-bit.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aura/core.hpp"

namespace aura {

// Unreadable, malformed or unsupported input files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

inline std::uint8_t to_byte(double v) {
  const double s = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(s);
}

struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  int maxval = 255;
  std::vector<std::uint32_t> samples;
};

inline Raster read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Raster r;
  r.height = static_cast<int>(image.height);
  r.width = static_cast<int>(image.width);
  r.channels = color ? 3 : 1;
  r.samples.assign(buffer.begin(), buffer.end());
  return r;
}

inline void write_png(const std::filesystem::path& path, int height, int width,
                      int channels, const std::vector<std::uint8_t>& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

// Next whitespace-delimited token of a netpbm header, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline int pnm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed netpbm file " + path.string());
  }
}

inline Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  Raster r;
  bool ascii = true;
  if (magic == "P2") {
    r.channels = 1;
  } else if (magic == "P3") {
    r.channels = 3;
  } else if (magic == "P5") {
    r.channels = 1;
    ascii = false;
  } else if (magic == "P6") {
    r.channels = 3;
    ascii = false;
  } else {
    throw IoError("unsupported netpbm magic '" + magic + "' in " + path.string());
  }
  r.width = pnm_int(in, path);
  r.height = pnm_int(in, path);
  r.maxval = pnm_int(in, path);
  if (r.width <= 0 || r.height <= 0 || r.maxval <= 0 || r.maxval > 65535) {
    throw IoError("bad netpbm header in " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  r.samples.resize(n);
  if (ascii) {
    for (auto& s : r.samples) {
      const int v = pnm_int(in, path);
      if (v > r.maxval) throw IoError("sample exceeds maxval in " + path.string());
      s = static_cast<std::uint32_t>(v);
    }
  } else {
    const int bytes = r.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError("truncated netpbm file " + path.string());
    }
    for (std::size_t i = 0; i < n; ++i) {
      r.samples[i] = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      if (r.samples[i] > static_cast<std::uint32_t>(r.maxval)) {
        throw IoError("sample exceeds maxval in " + path.string());
      }
    }
  }
  return r;
}

inline Raster read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IoError("unsupported image format: " + path.string());
}

inline void write_pnm_ascii(const std::filesystem::path& path, int height, int width,
                            int channels, const std::vector<std::uint8_t>& bytes) {
  std::ostringstream os;
  os << (channels == 3 ? "P3" : "P2") << '\n' << width << ' ' << height << "\n255\n";
  const std::size_t per_row = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    for (std::size_t i = 0; i < per_row; ++i) {
      if (i) os << ' ';
      os << static_cast<int>(bytes[y * per_row + i]);
    }
    os << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << os.str();
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_raster(const std::filesystem::path& path, int height, int width,
                         int channels, const std::vector<std::uint8_t>& bytes) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, height, width, channels, bytes);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if (ext == ".pgm" && channels != 1) throw IoError("PGM requires one channel");
    if (ext == ".ppm" && channels != 3) throw IoError("PPM requires three channels");
    write_pnm_ascii(path, height, width, channels, bytes);
  } else {
    throw IoError("unsupported image format: " + path.string());
  }
}

}  // namespace io_detail

inline Image load_image(const std::filesystem::path& path) {
  const auto r = io_detail::read_raster(path);
  std::vector<double> data(r.samples.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<double>(r.samples[i]) / r.maxval;
  }
  return Image(r.height, r.width, r.channels, std::move(data));
}

inline void save_image(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes(img.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = io_detail::to_byte(img.data()[i]);
  }
  io_detail::write_raster(path, img.height(), img.width(), img.channels(), bytes);
}

namespace io_detail {

inline std::vector<std::uint8_t> load_mask_bits(const std::filesystem::path& path,
                                                int& height, int& width) {
  const auto r = read_raster(path);
  height = r.height;
  width = r.width;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(r.height) * r.width);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    double sum = 0;
    for (int c = 0; c < r.channels; ++c) sum += r.samples[i * r.channels + c];
    const double byte = std::round(sum / r.channels * 255.0 / r.maxval);
    bits[i] = byte > 127 ? 1 : 0;
  }
  return bits;
}

}  // namespace io_detail

template <typename P>
BinaryMask<P> load_mask(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  auto bits = io_detail::load_mask_bits(path, h, w);
  return BinaryMask<P>(h, w, std::move(bits));
}

inline HoleMask load_hole_mask(const std::filesystem::path& path) {
  return load_mask<HoleTag>(path);
}
inline KeepMask load_keep_mask(const std::filesystem::path& path) {
  return load_mask<KeepTag>(path);
}

template <typename P>
void save_mask(const std::filesystem::path& path, const BinaryMask<P>& mask) {
  std::vector<std::uint8_t> bytes(mask.pixel_count());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.at_index(i) ? 255 : 0;
  io_detail::write_raster(path, mask.height(), mask.width(), 1, bytes);
}

}  // namespace aura
