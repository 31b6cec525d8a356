#include "dynrf/io_image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dynrf::io {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t quantize(double v) {
  const double c = std::min(1.0, std::max(0.0, v));
  return uint8_t(std::lround(c * 255.0));
}

// Reads an 8-bit PNG as `channels`-interleaved rows (1 = gray, 3 = rgb).
std::vector<uint8_t> read_png(const std::filesystem::path& path, int channels, int& width,
                              int& height) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("png: cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: failed to read " + path.string());
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  width = int(png_get_image_width(png, info));
  height = int(png_get_image_height(png, info));
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (channels == 3 && (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA))
    png_set_gray_to_rgb(png);
  if (channels == 1 && (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
                        color_type == PNG_COLOR_TYPE_PALETTE))
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  std::vector<uint8_t> data(size_t(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = data.data() + size_t(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return data;
}

void write_png(const std::filesystem::path& path, const std::vector<uint8_t>& data, int width,
               int height, int channels) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("png: cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: failed to write " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(data.data() + size_t(y) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_png_rgb(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<uint8_t> data = read_png(path, 3, w, h);
  Image img(w, h);
  for (size_t i = 0; i < data.size(); ++i) img.data[i] = data[i] / 255.0;
  return img;
}

void save_png_rgb(const Image& image, const std::filesystem::path& path) {
  std::vector<uint8_t> data(image.data.size());
  for (size_t i = 0; i < data.size(); ++i) data[i] = quantize(image.data[i]);
  write_png(path, data, image.width, image.height, 3);
}

GridU8 load_png_mask(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<uint8_t> data = read_png(path, 1, w, h);
  GridU8 mask(w, h);
  for (size_t i = 0; i < data.size(); ++i) mask.data[i] = data[i] != 0 ? 1 : 0;
  return mask;
}

void save_png_mask(const GridU8& mask, const std::filesystem::path& path) {
  std::vector<uint8_t> data(mask.data.size());
  for (size_t i = 0; i < data.size(); ++i) data[i] = mask.data[i] ? 255 : 0;
  write_png(path, data, mask.width, mask.height, 1);
}

GridD load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pfm: cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf") throw std::runtime_error("pfm: expected grayscale 'Pf' in " + path.string());
  if (width <= 0 || height <= 0 || scale >= 0.0)
    throw std::runtime_error("pfm: bad header in " + path.string());
  in.get();  // single whitespace after the header

  std::vector<float> row(width);
  GridD grid(width, height);
  for (int y = height - 1; y >= 0; --y) {  // PFM rows run bottom-up
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(sizeof(float)) * width);
    if (!in) throw std::runtime_error("pfm: truncated data in " + path.string());
    for (int x = 0; x < width; ++x) grid.at(x, y) = double(row[x]);
  }
  return grid;
}

void save_pfm(const GridD& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pfm: cannot write " + path.string());
  out << "Pf\n" << grid.width << " " << grid.height << "\n-1.0\n";
  std::vector<float> row(grid.width);
  for (int y = grid.height - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width; ++x) row[x] = float(grid.at(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(sizeof(float)) * grid.width);
  }
  if (!out) throw std::runtime_error("pfm: write failed for " + path.string());
}

void snap_to_float(GridD& grid) {
  for (double& v : grid.data) v = double(float(v));
}

}  // namespace dynrf::io
