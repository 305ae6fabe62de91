#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/grid.hpp"
#include "chseg/metrics.hpp"

namespace chseg {

/// Decoded image before resizing: row-major samples scaled to [0, 1].
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> gray;  // height rows of width samples
};

/// A normalized grayscale image on a pixel grid. Field row i is image row i.
struct ImageRecord {
  std::string id;
  ScalarField pixels;
  std::string source_path;
  std::size_t original_width = 0;
  std::size_t original_height = 0;
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

inline RawImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.string().c_str()) == 0) {
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  // Alpha, if present, is composited onto black.
  const png_color black{0, 0, 0};
  if (png_image_finish_read(&img, &black, buf.data(), 0, nullptr) == 0) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  RawImage out{img.width, img.height, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
  for (std::size_t k = 0; k < out.gray.size(); ++k) {
    if (color) {
      out.gray[k] = luma(buf[3 * k], buf[3 * k + 1], buf[3 * k + 2]) / 255.0;
    } else {
      out.gray[k] = buf[k] / 255.0;
    }
  }
  return out;
}

inline RawImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError("unsupported PGM variant '" + magic + "' in " + path.string());
  auto next_int = [&]() -> long {
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      long v = -1;
      if (!(in >> v)) throw IoError("malformed PGM header in " + path.string());
      return v;
    }
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0) throw IoError("zero-dimension image " + path.string());
  if (maxval <= 0 || maxval > 65535) throw IoError("bad PGM maxval in " + path.string());
  in.get();  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raster(n * bytes);
  if (!in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()))) {
    throw IoError("truncated PGM raster in " + path.string());
  }
  RawImage out{static_cast<std::size_t>(w), static_cast<std::size_t>(h), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned v = bytes == 1 ? raster[k] : (unsigned{raster[2 * k]} << 8) | raster[2 * k + 1];
    out.gray[k] = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
  }
  return out;
}

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace detail

/// Decodes a PNG (8/16-bit gray, RGB, with or without alpha) or binary PGM
/// and converts it to gray by luma.
inline RawImage read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read " + path.string());
  const std::string ext = detail::lower_extension(path);
  RawImage raw;
  if (ext == ".png") {
    raw = detail::read_png(path);
  } else if (ext == ".pgm") {
    raw = detail::read_pgm(path);
  } else {
    throw IoError("unsupported image format '" + ext + "' for " + path.string());
  }
  if (raw.width == 0 || raw.height == 0) throw IoError("zero-dimension image " + path.string());
  return raw;
}

/// Bilinear resampling with corner alignment: output corners coincide with
/// input corners.
inline std::vector<double> resize_bilinear(const std::vector<double>& src, std::size_t in_rows, std::size_t in_cols,
                                           std::size_t out_rows, std::size_t out_cols) {
  std::vector<double> dst(out_rows * out_cols);
  auto coord = [](std::size_t o, std::size_t n_out, std::size_t n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return static_cast<double>(o) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  };
  for (std::size_t r = 0; r < out_rows; ++r) {
    const double y = coord(r, out_rows, in_rows);
    const auto y0 = std::min(static_cast<std::size_t>(y), in_rows - 1);
    const std::size_t y1 = std::min(y0 + 1, in_rows - 1);
    const double wy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_cols; ++c) {
      const double x = coord(c, out_cols, in_cols);
      const auto x0 = std::min(static_cast<std::size_t>(x), in_cols - 1);
      const std::size_t x1 = std::min(x0 + 1, in_cols - 1);
      const double wx = x - static_cast<double>(x0);
      const double top = (1.0 - wx) * src[y0 * in_cols + x0] + wx * src[y0 * in_cols + x1];
      const double bot = (1.0 - wx) * src[y1 * in_cols + x0] + wx * src[y1 * in_cols + x1];
      dst[r * out_cols + c] = (1.0 - wy) * top + wy * bot;
    }
  }
  return dst;
}

/// Loads an image as a [0, 1] field of rows x cols pixels, resampled
/// bilinearly when the file differs. A zero dimension keeps the file's.
/// Grid points are `spacing` length units apart.
inline ImageRecord load_image_dims(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                                   double spacing = 1.0) {
  const RawImage raw = read_image(path);
  if (rows == 0) rows = raw.height;
  if (cols == 0) cols = raw.width;
  std::vector<double> px = (rows == raw.height && cols == raw.width)
                               ? raw.gray
                               : resize_bilinear(raw.gray, raw.height, raw.width, rows, cols);
  for (double& v : px) v = std::clamp(v, 0.0, 1.0);
  ImageRecord rec;
  rec.id = path.stem().string();
  rec.pixels = ScalarField(GridSpec::with_spacing(rows, cols, spacing), std::move(px));
  rec.source_path = path.string();
  rec.original_width = raw.width;
  rec.original_height = raw.height;
  return rec;
}

/// Square target_size x target_size variant (0 keeps the original size).
inline ImageRecord load_image(const std::filesystem::path& path, std::size_t target_size, double spacing = 1.0) {
  return load_image_dims(path, target_size, target_size, spacing);
}

/// n standard normal variates from a seeded std::mt19937_64.
///
/// Each pair of 64-bit draws becomes two uniforms u = (x >> 11) 2^-53, which
/// the Box-Muller transform maps to sqrt(-2 ln(1 - u1)) (cos, sin)(2 pi u2).
/// Both the engine and this mapping are fully specified, so a seed gives the
/// same sequence on every conforming platform.
inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  std::vector<double> z(n);
  for (std::size_t k = 0; k < n; k += 2) {
    const double u1 = static_cast<double>(rng() >> 11) * scale;
    const double u2 = static_cast<double>(rng() >> 11) * scale;
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z[k] = r * std::cos(theta);
    if (k + 1 < n) z[k + 1] = r * std::sin(theta);
  }
  return z;
}

/// f' = clamp(f + sigma z, 0, 1). sigma == 0 returns the image unchanged.
inline ImageRecord add_gaussian_noise(const ImageRecord& img, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  ImageRecord out = img;
  if (spec.sigma == 0.0) return out;
  const auto z = gaussian_noise(out.pixels.size(), spec.seed);
  for (std::size_t k = 0; k < z.size(); ++k) out.pixels[k] = std::clamp(out.pixels[k] + spec.sigma * z[k], 0.0, 1.0);
  return out;
}

/// 64-bit FNV-1a of a string; used to derive per-image seeds.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t image_seed(std::string_view id, std::uint64_t seed) { return fnv1a(id) ^ seed; }

/// bit = (u >= level).
inline BinaryMask threshold(const ScalarField& u, double level = 0.5) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("threshold level must lie in (0, 1)");
  BinaryMask m(u.nx(), u.ny());
  for (std::size_t i = 0; i < u.nx(); ++i) {
    for (std::size_t j = 0; j < u.ny(); ++j) m.set(i, j, u(i, j) >= level);
  }
  return m;
}

/// Writes 8-bit gray samples (row-major, `rows` x `cols`) as PNG.
inline void write_gray_png(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                           const std::vector<std::uint8_t>& samples) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(cols);
  img.height = static_cast<png_uint_32>(rows);
  img.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&img, path.string().c_str(), 0, samples.data(), 0, nullptr) == 0) {
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

/// Writes a [0, 1] field as an 8-bit gray PNG (round to nearest).
inline void save_field_png(const ScalarField& f, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(f[k], 0.0, 1.0) * 255.0));
  }
  write_gray_png(path, f.nx(), f.ny(), px);
}

/// 8-bit gray PNG with foreground 255 and background 0.
inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) px[k] = mask[k] ? 255 : 0;
  write_gray_png(path, mask.nx(), mask.ny(), px);
}

/// Reads a mask image through the same resize path as load_image and
/// binarizes it at 0.5. Zero dimensions keep the file's size.
inline BinaryMask load_mask(const std::filesystem::path& path, std::size_t rows = 0, std::size_t cols = 0) {
  const ImageRecord rec = load_image_dims(path, rows, cols);
  BinaryMask m(rec.pixels.nx(), rec.pixels.ny());
  for (std::size_t k = 0; k < rec.pixels.size(); ++k) {
    m.set(k / rec.pixels.ny(), k % rec.pixels.ny(), rec.pixels[k] >= 0.5);
  }
  return m;
}

}  // namespace chseg
