#include "d2d/image.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "d2d/error.hpp"

namespace d2d {
namespace {

int read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) fail(ErrorKind::Format, path.string() + ": malformed PNM header");
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > (1 << 24)) fail(ErrorKind::Format, path.string() + ": PNM header value too large");
    c = in.get();
  }
  // Exactly one whitespace byte separates the header from the raster.
  return static_cast<int>(value);
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  char magic[2];
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    fail(ErrorKind::Format, path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
  Image img;
  img.channels = magic[1] == '5' ? 1 : 3;
  img.width = read_pnm_int(in, path);
  img.height = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (img.width <= 0 || img.height <= 0) fail(ErrorKind::Format, path.string() + ": empty image");
  if (maxval <= 0 || maxval > 255) fail(ErrorKind::Format, path.string() + ": only 8-bit PNM is supported");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
    fail(ErrorKind::Format, path.string() + ": PNM raster truncated");
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::Io, path.string() + ": cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Io, "libpng initialisation failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, path.string() + ": malformed PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  const auto color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, path.string() + ": unsupported PNG channel layout");
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  return has_png_signature(path) ? load_png(path) : load_pnm(path);
}

Grid<float> to_gray(const Image& image) {
  Grid<float> gray(image.height, image.width);
  auto out = gray.values();
  if (image.channels == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.pixels[i];
    return gray;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto* p = &image.pixels[i * image.channels];
    out[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return gray;
}

void save_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& gray) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << "P5\n" << gray.cols() << ' ' << gray.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.values().data()),
            static_cast<std::streamsize>(gray.size()));
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

void save_ppm(const std::filesystem::path& path, const Image& rgb) {
  if (rgb.channels != 3) fail(ErrorKind::Validation, "save_ppm expects 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << "P6\n" << rgb.width << ' ' << rgb.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.pixels.data()),
            static_cast<std::streamsize>(rgb.pixels.size()));
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    fail(ErrorKind::Validation, "save_png expects 1 or 3 channels");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(image.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, path.string() + ": PNG encoding failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.pixels.data() +
                                    static_cast<std::size_t>(y) * image.width * image.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace d2d
