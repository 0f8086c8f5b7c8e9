#pragma once

// File codecs: single-channel PFM ("Pf") depth/relative maps, 16-bit
// millimetre PNG depth, point CSVs and colour-mapped PNG previews.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <csetjmp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/detail/turbo_lut.hpp"
#include "dtof/dtof_sim.hpp"
#include "dtof/error.hpp"

namespace dtof::io {

// ---------------------------------------------------------------------------
// Generic helpers

inline std::string extension_of(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError(IoError::Kind::kWriteFailed, "failed writing " + path);
}

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// PFM

struct FloatImage {
  int height = 0;
  int width = 0;
  std::vector<float> values;  // row-major, top row first
};

inline FloatImage decode_pfm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  };
  auto token = [&]() -> std::string {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  const auto malformed = [&](const std::string& why) {
    return IoError(IoError::Kind::kMalformedHeader, name + ": malformed PFM header: " + why);
  };

  const std::string magic = token();
  if (magic == "PF") {
    throw IoError(IoError::Kind::kUnsupportedChannels,
                  name + ": PFM has 3 channels, only single-channel depth is supported");
  }
  if (magic != "Pf") throw malformed("expected 'Pf' magic");
  int width = 0, height = 0;
  double scale = 0.0;
  const std::string ws = token(), hs = token(), ss = token();
  if (std::from_chars(ws.data(), ws.data() + ws.size(), width).ec != std::errc{} || width <= 0 ||
      std::from_chars(hs.data(), hs.data() + hs.size(), height).ec != std::errc{} || height <= 0)
    throw malformed("bad dimensions");
  if (std::from_chars(ss.data(), ss.data() + ss.size(), scale).ec != std::errc{} || scale == 0.0 ||
      !std::isfinite(scale))
    throw malformed("bad scale");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw malformed("missing separator after scale");
  ++pos;

  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count * 4) {
    throw IoError(IoError::Kind::kTruncatedPayload,
                  name + ": PFM payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(count * 4));
  }
  FloatImage img{height, width, std::vector<float>(count)};
  for (int file_row = 0; file_row < height; ++file_row) {
    const int row = height - 1 - file_row;  // PFM stores the bottom row first
    for (int col = 0; col < width; ++col) {
      const std::uint8_t* b = &bytes[pos + (static_cast<std::size_t>(file_row) * width + col) * 4];
      const std::uint32_t u = little ? (std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                                        std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24)
                                     : (std::uint32_t{b[3]} | std::uint32_t{b[2]} << 8 |
                                        std::uint32_t{b[1]} << 16 | std::uint32_t{b[0]} << 24);
      float f;
      std::memcpy(&f, &u, sizeof f);
      img.values[static_cast<std::size_t>(row) * width + col] = f;
    }
  }
  return img;
}

/// Little-endian, bottom-to-top rows, scale -1.
inline std::vector<std::uint8_t> encode_pfm(int height, int width, const std::vector<float>& values) {
  const std::string header = "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + values.size() * 4);
  for (int row = height - 1; row >= 0; --row) {
    for (int col = 0; col < width; ++col) {
      std::uint32_t u;
      const float f = values[static_cast<std::size_t>(row) * width + col];
      std::memcpy(&u, &f, sizeof u);
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNG (libpng, classic API; the setjmp frames hold only trivial locals)

struct PngImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // packed rows, 16-bit samples big-endian
  std::vector<png_bytep> rows;
};

namespace detail {

struct PngMessage {
  char text[256] = {0};
};

inline void png_error_to_buffer(png_structp png, png_const_charp msg) {
  auto* m = static_cast<PngMessage*>(png_get_error_ptr(png));
  if (m) std::snprintf(m->text, sizeof m->text, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

/// Returns false and fills `msg` on failure.
inline bool png_read_raw(std::FILE* fp, PngImage* img, PngMessage* msg) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, msg, png_error_to_buffer, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  img->width = static_cast<int>(png_get_image_width(png, info));
  img->height = static_cast<int>(png_get_image_height(png, info));
  img->channels = png_get_channels(png, info);
  img->bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  img->bytes.resize(stride * static_cast<std::size_t>(img->height));
  img->rows.resize(static_cast<std::size_t>(img->height));
  for (int r = 0; r < img->height; ++r) img->rows[static_cast<std::size_t>(r)] = img->bytes.data() + stride * r;
  png_read_image(png, img->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool png_write_raw(std::FILE* fp, PngImage* img, int color_type, PngMessage* msg) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, msg, png_error_to_buffer, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img->width), static_cast<png_uint_32>(img->height),
               img->bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, img->rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};

}  // namespace detail

inline PngImage read_png(const std::string& path) {
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path);
  unsigned char sig[8] = {0};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError(IoError::Kind::kMalformedHeader, path + ": not a PNG file");
  std::rewind(fp.get());
  PngImage img;
  detail::PngMessage msg;
  if (!detail::png_read_raw(fp.get(), &img, &msg)) {
    const std::string why = msg.text;
    const bool truncated = why.find("EOF") != std::string::npos || why.find("end of") != std::string::npos ||
                           why.find("Read Error") != std::string::npos || why.find("Not enough") != std::string::npos;
    throw IoError(truncated ? IoError::Kind::kTruncatedPayload : IoError::Kind::kMalformedHeader,
                  path + ": " + (why.empty() ? std::string("PNG decode failed") : why));
  }
  return img;
}

inline void write_png(const std::string& path, PngImage img, int color_type) {
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError(IoError::Kind::kOpenFailed, "cannot open " + path + " for writing");
  const std::size_t stride = img.bytes.size() / static_cast<std::size_t>(img.height);
  img.rows.resize(static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) img.rows[static_cast<std::size_t>(r)] = img.bytes.data() + stride * r;
  detail::PngMessage msg;
  if (!detail::png_write_raw(fp.get(), &img, color_type, &msg))
    throw IoError(IoError::Kind::kWriteFailed, path + ": " + msg.text);
  if (std::fflush(fp.get()) != 0) throw IoError(IoError::Kind::kWriteFailed, "failed writing " + path);
}

inline std::vector<std::uint16_t> png_gray16(const PngImage& img, const std::string& path) {
  if (img.channels != 1)
    throw IoError(IoError::Kind::kUnsupportedChannels,
                  path + ": PNG has " + std::to_string(img.channels) + " channels, expected 1");
  std::vector<std::uint16_t> out(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = img.bit_depth == 16
                 ? static_cast<std::uint16_t>(img.bytes[2 * i] << 8 | img.bytes[2 * i + 1])
                 : img.bytes[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense maps

inline DenseDepthMap read_dense_depth(const std::string& path) {
  const std::string ext = extension_of(path);
  if (ext == "pfm") {
    const FloatImage img = decode_pfm(read_file(path), path);
    std::vector<double> v(img.values.begin(), img.values.end());
    return DenseDepthMap::from_values(img.height, img.width, v);
  }
  if (ext == "png") {
    const PngImage img = read_png(path);
    if (img.bit_depth != 16)
      throw IoError(IoError::Kind::kUnsupportedFormat,
                    path + ": depth PNG must be 16-bit millimetres, got " + std::to_string(img.bit_depth) + "-bit");
    const std::vector<std::uint16_t> mm = png_gray16(img, path);
    DenseDepthMap map(img.height, img.width);
    for (std::size_t i = 0; i < mm.size(); ++i)
      if (mm[i] != 0) map.set(i, mm[i] / 1000.0);
    return map;
  }
  throw IoError(IoError::Kind::kUnsupportedFormat, path + ": unsupported depth format (use .pfm or .png)");
}

/// PFM keeps float32 precision; PNG stores rounded millimetres (0 = invalid).
inline void write_dense_depth(const std::string& path, const DenseDepthMap& map) {
  const std::string ext = extension_of(path);
  if (ext == "pfm") {
    std::vector<float> v(map.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = map.valid(i) ? static_cast<float>(map[i]) : 0.0f;
    const auto bytes = encode_pfm(map.height(), map.width(), v);
    write_file(path, bytes.data(), bytes.size());
    return;
  }
  if (ext == "png") {
    PngImage img;
    img.height = map.height();
    img.width = map.width();
    img.channels = 1;
    img.bit_depth = 16;
    img.bytes.resize(map.size() * 2);
    for (std::size_t i = 0; i < map.size(); ++i) {
      long mm = 0;
      if (map.valid(i)) {
        mm = std::lround(map[i] * 1000.0);
        if (mm > 65535)
          throw DataError(path + ": depth " + format_double(map[i]) + " m exceeds the 16-bit millimetre range");
        mm = std::max(mm, 1L);  // keep tiny valid depths distinguishable from the invalid sentinel
      }
      img.bytes[2 * i] = static_cast<std::uint8_t>(mm >> 8);
      img.bytes[2 * i + 1] = static_cast<std::uint8_t>(mm & 0xff);
    }
    write_png(path, std::move(img), PNG_COLOR_TYPE_GRAY);
    return;
  }
  throw IoError(IoError::Kind::kUnsupportedFormat, path + ": unsupported depth format (use .pfm or .png)");
}

/// Relative maps: PFM floats or raw 16-bit PNG values.
inline RelativeDepthMap read_relative_depth(const std::string& path, Orientation orientation) {
  const std::string ext = extension_of(path);
  if (ext == "pfm") {
    const FloatImage img = decode_pfm(read_file(path), path);
    return RelativeDepthMap(img.height, img.width, std::vector<double>(img.values.begin(), img.values.end()),
                            orientation);
  }
  if (ext == "png") {
    const PngImage img = read_png(path);
    const std::vector<std::uint16_t> raw = png_gray16(img, path);
    return RelativeDepthMap(img.height, img.width, std::vector<double>(raw.begin(), raw.end()), orientation);
  }
  throw IoError(IoError::Kind::kUnsupportedFormat, path + ": unsupported relative depth format (use .pfm or .png)");
}

inline void write_relative_depth(const std::string& path, const RelativeDepthMap& rel) {
  if (extension_of(path) != "pfm")
    throw IoError(IoError::Kind::kUnsupportedFormat, path + ": relative depth is written as .pfm");
  std::vector<float> v(rel.values().begin(), rel.values().end());
  const auto bytes = encode_pfm(rel.height(), rel.width(), v);
  write_file(path, bytes.data(), bytes.size());
}

/// Nonzero (PNG) or positive (PFM) pixels are inside the mask.
inline PixelMask read_mask(const std::string& path) {
  const std::string ext = extension_of(path);
  if (ext == "png") {
    const PngImage img = read_png(path);
    const std::vector<std::uint16_t> raw = png_gray16(img, path);
    PixelMask mask(img.height, img.width, false);
    for (std::size_t i = 0; i < raw.size(); ++i) mask.set(i, raw[i] != 0);
    return mask;
  }
  if (ext == "pfm") {
    const FloatImage img = decode_pfm(read_file(path), path);
    PixelMask mask(img.height, img.width, false);
    for (std::size_t i = 0; i < img.values.size(); ++i) mask.set(i, img.values[i] > 0.0f);
    return mask;
  }
  throw IoError(IoError::Kind::kUnsupportedFormat, path + ": unsupported mask format (use .png or .pfm)");
}

/// 8-bit mask, 255 inside.
inline void write_mask(const std::string& path, const PixelMask& mask) {
  PngImage img;
  img.height = mask.height();
  img.width = mask.width();
  img.channels = 1;
  img.bit_depth = 8;
  img.bytes.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) img.bytes[i] = mask[i] ? 255 : 0;
  write_png(path, std::move(img), PNG_COLOR_TYPE_GRAY);
}

// ---------------------------------------------------------------------------
// Point CSV: header `row,col,depth_m[,label]`, rows in row-major order.

struct PointRecords {
  std::vector<DepthPoint> points;  // row-major; r and p unset
  std::vector<PointLabel> labels;  // empty when the file has no label column
  bool has_labels = false;
};

inline bool parse_label(std::string_view s, PointLabel& out) {
  if (s == "clean") out = PointLabel::kClean;
  else if (s == "error") out = PointLabel::kError;
  else if (s == "shifted") out = PointLabel::kShifted;
  else return false;
  return true;
}

inline PointRecords parse_points(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  auto bad = [&](std::size_t line_no, const std::string& why) {
    return IoError(IoError::Kind::kBadRecord, name + ":" + std::to_string(line_no) + ": " + why);
  };
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw IoError(IoError::Kind::kMalformedHeader, name + ": empty file, missing header");
  strip_cr(line);
  PointRecords rec;
  if (line == "row,col,depth_m,label") rec.has_labels = true;
  else if (line != "row,col,depth_m")
    throw IoError(IoError::Kind::kMalformedHeader,
                  name + ": bad header '" + line + "', expected 'row,col,depth_m[,label]'");

  std::vector<std::size_t> line_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::size_t expected = rec.has_labels ? 4 : 3;
    if (fields.size() != expected)
      throw bad(line_no, "expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
    DepthPoint pt;
    auto parse_int = [&](std::string_view f, int& v) {
      const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
      return r.ec == std::errc{} && r.ptr == f.data() + f.size();
    };
    if (!parse_int(fields[0], pt.row) || !parse_int(fields[1], pt.col))
      throw bad(line_no, "non-numeric pixel coordinate");
    const auto dr = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), pt.d);
    if (dr.ec != std::errc{} || dr.ptr != fields[2].data() + fields[2].size())
      throw bad(line_no, "non-numeric depth '" + std::string(fields[2]) + "'");
    if (pt.row < 0 || pt.col < 0) throw bad(line_no, "negative pixel coordinate");
    if (!(std::isfinite(pt.d) && pt.d > 0.0)) throw bad(line_no, "depth must be finite and positive");
    if (rec.has_labels) {
      PointLabel label;
      if (!parse_label(fields[3], label)) throw bad(line_no, "unknown label '" + std::string(fields[3]) + "'");
      rec.labels.push_back(label);
    }
    rec.points.push_back(pt);
    line_of.push_back(line_no);
  }

  std::vector<std::size_t> order(rec.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return SparsePointSet::row_major_less(rec.points[a], rec.points[b]);
  });
  PointRecords sorted;
  sorted.has_labels = rec.has_labels;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const DepthPoint& pt = rec.points[order[k]];
    if (k > 0) {
      const DepthPoint& prev = sorted.points.back();
      if (prev.row == pt.row && prev.col == pt.col)
        throw bad(line_of[order[k]], "duplicate coordinate (" + std::to_string(pt.row) + ", " +
                                         std::to_string(pt.col) + "), first seen on line " +
                                         std::to_string(line_of[order[k - 1]]));
    }
    sorted.points.push_back(pt);
    if (rec.has_labels) sorted.labels.push_back(rec.labels[order[k]]);
  }
  return sorted;
}

inline PointRecords read_points(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return parse_points(std::string(bytes.begin(), bytes.end()), path);
}

inline std::string format_points(const SparsePointSet& pts, const std::vector<PointLabel>* labels = nullptr) {
  if (labels && labels->size() != pts.size())
    throw DataError("label count " + std::to_string(labels->size()) + " does not match point count " +
                    std::to_string(pts.size()));
  std::string out = labels ? "row,col,depth_m,label\n" : "row,col,depth_m\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const DepthPoint& pt = pts[i];
    out += std::to_string(pt.row) + "," + std::to_string(pt.col) + "," + format_double(pt.d);
    if (labels) {
      out += ",";
      out += to_string((*labels)[i]);
    }
    out += "\n";
  }
  return out;
}

inline void write_points(const std::string& path, const SparsePointSet& pts,
                         const std::vector<PointLabel>* labels = nullptr) {
  const std::string text = format_points(pts, labels);
  write_file(path, text.data(), text.size());
}

// ---------------------------------------------------------------------------
// Colour previews

/// RGB bytes: linear map of [lo, hi] through the turbo table, invalid pixels black.
inline std::vector<std::uint8_t> colorize_rgb(const DenseDepthMap& map, double lo, double hi) {
  if (!(lo < hi)) throw DataError("colorize: range minimum must be below the maximum");
  std::vector<std::uint8_t> rgb(map.size() * 3, 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.valid(i)) continue;
    const double t = std::clamp((map[i] - lo) / (hi - lo), 0.0, 1.0);
    const auto idx = static_cast<std::size_t>(std::lround(t * 255.0));
    for (int c = 0; c < 3; ++c) rgb[3 * i + static_cast<std::size_t>(c)] = dtof::detail::kTurboLut[idx][static_cast<std::size_t>(c)];
  }
  return rgb;
}

inline void colorize(const DenseDepthMap& map, double lo, double hi, const std::string& path) {
  PngImage img;
  img.height = map.height();
  img.width = map.width();
  img.channels = 3;
  img.bit_depth = 8;
  img.bytes = colorize_rgb(map, lo, hi);
  write_png(path, std::move(img), PNG_COLOR_TYPE_RGB);
}

}  // namespace dtof::io
