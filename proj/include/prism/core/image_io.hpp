#ifndef PRISM_CORE_IMAGE_IO_HPP
#define PRISM_CORE_IMAGE_IO_HPP

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"

namespace prism {

namespace detail {

inline std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(clamp_unit(v) * 255.0));
}

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (char& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e;
}

inline void skip_pnm_space(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw ParseError("unsupported PNM magic '" + magic + "' in " + path.string());
  int w = 0, h = 0, maxval = 0;
  skip_pnm_space(in);
  in >> w;
  skip_pnm_space(in);
  in >> h;
  skip_pnm_space(in);
  in >> maxval;
  in.get();
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw ParseError("bad PNM header in " + path.string());
  const int c = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * c);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ParseError("truncated PNM data in " + path.string());
  Image img(h, w, c);
  auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) d[i] = buf[i] / 255.0;
  return img;
}

inline void write_pnm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << "\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<std::uint8_t> buf(img.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(img.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  Image img(static_cast<int>(png.height), static_cast<int>(png.width), color ? 3 : 1);
  auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) d[i] = buf[i] / 255.0;
  return img;
}

inline void write_png(const Image& img, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(img.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(img.data()[i]);
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
}

}  // namespace detail

/// Reads 8-bit PNG (gray/RGB; alpha dropped) or binary PGM/PPM by extension.
inline Image read_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return detail::read_pnm(path);
  throw IoError("unsupported image extension '" + ext + "'");
}

inline void write_image(const Image& img, const std::filesystem::path& path) {
  detail::require(!img.empty(), "write_image: empty image");
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::write_png(img, path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    if (ext == ".pgm" && img.channels() != 1) return detail::write_pnm(to_gray(img), path);
    return detail::write_pnm(img, path);
  }
  throw IoError("unsupported image extension '" + ext + "'");
}

inline DepthMap read_depth(const std::filesystem::path& path) {
  Image img = read_image(path);
  if (img.channels() != 1) img = to_gray(img);
  DepthMap d(img.height(), img.width());
  std::copy(img.data().begin(), img.data().end(), d.data().begin());
  return d;
}

inline void write_depth(const DepthMap& depth, const std::filesystem::path& path) {
  Image img(depth.height(), depth.width(), 1);
  std::copy(depth.data().begin(), depth.data().end(), img.data().begin());
  detail::write_pnm(img, path);
}

/// Rounds every intensity to the nearest 8-bit level, as a save/load cycle would.
inline Image quantize8(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = detail::to_byte(v) / 255.0;
  return out;
}

}  // namespace prism

#endif
