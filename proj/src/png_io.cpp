#include "subseg/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "subseg/error.hpp"

namespace subseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw io_error("cannot open " + path.string());
  return f;
}

struct Raw {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit samples big-endian
  std::size_t rowbytes = 0;
};

// Decodes with only palette expansion and sub-byte gray expansion applied.
Raw decode(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw io_error("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw io_error("libpng initialisation failed");
  }
  Raw raw;
  std::vector<png_bytep> rows;
  volatile bool failed = false;
  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    const int ct = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (ct == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (ct == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    raw.bit_depth = png_get_bit_depth(png, info);
    raw.color_type = png_get_color_type(png, info);
    raw.rowbytes = png_get_rowbytes(png, info);
    raw.bytes.resize(raw.rowbytes * raw.height);
    rows.resize(raw.height);
    for (int y = 0; y < raw.height; ++y) rows[y] = raw.bytes.data() + raw.rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (failed) throw io_error("corrupt PNG: " + path.string());
  return raw;
}

void encode(const std::filesystem::path& path, int width, int height, int depth, int color_type,
            const std::uint8_t* bytes, std::size_t rowbytes) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(bytes + rowbytes * y);
  }
  volatile bool failed = false;
  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  if (failed) throw io_error("failed writing PNG: " + path.string());
  if (std::fflush(file.get()) != 0) throw io_error("failed writing PNG: " + path.string());
}

std::uint16_t sample(const Raw& raw, int y, std::size_t i) {
  const std::uint8_t* row = raw.bytes.data() + raw.rowbytes * y;
  if (raw.bit_depth == 16) return static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
  return row[i];
}

}  // namespace

RgbImage read_rgb_png(const std::filesystem::path& path) {
  const Raw raw = decode(path);
  const int channels = (raw.color_type & PNG_COLOR_MASK_COLOR ? 3 : 1) +
                       (raw.color_type & PNG_COLOR_MASK_ALPHA ? 1 : 0);
  RgbImage img(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      auto s = [&](int c) {
        const std::uint16_t v = sample(raw, y, static_cast<std::size_t>(x) * channels + c);
        return static_cast<std::uint8_t>(raw.bit_depth == 16 ? v >> 8 : v);
      };
      if (channels >= 3) {
        img.set(x, y, {s(0), s(1), s(2)});
      } else {
        const std::uint8_t g = s(0);
        img.set(x, y, {g, g, g});
      }
    }
  }
  return img;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& img) {
  encode(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, img.data.data(),
         static_cast<std::size_t>(img.width) * 3);
}

GrayImage read_gray8_png(const std::filesystem::path& path) {
  const Raw raw = decode(path);
  if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 8) {
    throw data_error("expected an 8-bit grayscale PNG: " + path.string());
  }
  GrayImage img{raw.width, raw.height, {}};
  img.data.resize(static_cast<std::size_t>(raw.width) * raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      img.data[static_cast<std::size_t>(y) * raw.width + x] =
          static_cast<std::uint8_t>(sample(raw, y, x));
    }
  }
  return img;
}

void write_gray8_png(const std::filesystem::path& path, const GrayImage& img) {
  encode(path, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, img.data.data(),
         static_cast<std::size_t>(img.width));
}

Gray16Image read_gray16_png(const std::filesystem::path& path) {
  const Raw raw = decode(path);
  if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 16) {
    throw data_error("expected a 16-bit grayscale PNG: " + path.string());
  }
  Gray16Image img{raw.width, raw.height, {}};
  img.data.resize(static_cast<std::size_t>(raw.width) * raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      img.data[static_cast<std::size_t>(y) * raw.width + x] = sample(raw, y, x);
    }
  }
  return img;
}

void write_gray16_png(const std::filesystem::path& path, const Gray16Image& img) {
  std::vector<std::uint8_t> bytes(img.data.size() * 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 0xff);
  }
  encode(path, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, bytes.data(),
         static_cast<std::size_t>(img.width) * 2);
}

}  // namespace subseg
