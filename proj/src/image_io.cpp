#include "xclick/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include "xclick/error.hpp"

namespace xclick {

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
  for (auto& p : planes_) p.assign(pixel_count(), 0.0f);
}

void RgbImage::set(int x, int y, float r, float g, float b) noexcept {
  const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
  planes_[0][i] = r;
  planes_[1][i] = g;
  planes_[2][i] = b;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

void write_png_impl(png_structp png, png_infop info, const PngData& data) {
  int color = 0;
  switch (data.channels) {
    case 1: color = PNG_COLOR_TYPE_GRAY; break;
    case 2: color = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color = PNG_COLOR_TYPE_RGB; break;
    case 4: color = PNG_COLOR_TYPE_RGBA; break;
    default: throw Error(ErrorCode::InvalidArgument, "unsupported channel count");
  }
  png_set_IHDR(png, info, static_cast<png_uint_32>(data.width),
               static_cast<png_uint_32>(data.height), data.bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_samples = static_cast<std::size_t>(data.width) * data.channels;
  const std::size_t bytes = data.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(row_samples * bytes);
  for (int y = 0; y < data.height; ++y) {
    const std::uint16_t* src = data.samples.data() + static_cast<std::size_t>(y) * row_samples;
    for (std::size_t i = 0; i < row_samples; ++i) {
      if (bytes == 2) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

void check_png_data(const PngData& data) {
  if (data.width <= 0 || data.height <= 0 ||
      data.samples.size() != static_cast<std::size_t>(data.width) * data.height * data.channels) {
    throw Error(ErrorCode::InvalidArgument, "PNG sample buffer does not match dimensions");
  }
  if (data.bit_depth != 8 && data.bit_depth != 16) {
    throw Error(ErrorCode::InvalidArgument, "PNG bit depth must be 8 or 16");
  }
}

RgbImage load_jpeg(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  struct ErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
  };
  jpeg_decompress_struct cinfo{};
  ErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = [](j_common_ptr c) {
    auto* e = reinterpret_cast<ErrorMgr*>(c->err);
    (*c->err->format_message)(c, e->message);
    std::longjmp(e->jump, 1);
  };
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::Parse, path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  RgbImage image(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
  std::vector<JSAMPLE> row(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (int x = 0; x < image.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(x) * 3;
      image.set(x, y, row[i] / 255.0f, row[i + 1] / 255.0f, row[i + 2] / 255.0f);
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return image;
}

}  // namespace

PngData read_png(const std::filesystem::path& path, bool expand_palette) {
  FilePtr file = open_file(path, "rb");
  std::string message = "malformed PNG";
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::Internal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngData data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Parse, path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    if (expand_palette) {
      png_set_palette_to_rgb(png);
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    } else if (depth < 8) {
      png_set_packing(png);
    }
  } else if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // host order (little endian) samples
  png_read_update_info(png, info);

  data.width = static_cast<int>(png_get_image_width(png, info));
  data.height = static_cast<int>(png_get_image_height(png, info));
  data.channels = png_get_channels(png, info);
  data.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(data.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(data.height));
  for (int y = 0; y < data.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(data.width) * data.height * data.channels;
  data.samples.resize(n);
  if (data.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      data.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
  } else {
    std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(n), data.samples.begin());
  }
  return data;
}

void write_png(const std::filesystem::path& path, const PngData& data) {
  check_png_data(data);
  FilePtr file = open_file(path, "wb");
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  write_png_impl(png, info, data);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> encode_png(const PngData& data) {
  check_png_data(data);
  std::vector<std::uint8_t> out;
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG encode: " + message);
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep bytes, png_size_t len) {
        auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        sink->insert(sink->end(), bytes, bytes + len);
      },
      [](png_structp) {});
  write_png_impl(png, info, data);
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "no such image: " + path.string());
  if (!has_png_signature(path)) return load_jpeg(path);

  const PngData png = read_png(path);
  const float scale = png.bit_depth == 16 ? 65535.0f : 255.0f;
  RgbImage image(png.width, png.height);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
      if (png.channels <= 2) {
        const float v = png.samples[i] / scale;
        image.set(x, y, v, v, v);
      } else {
        image.set(x, y, png.samples[i] / scale, png.samples[i + 1] / scale,
                  png.samples[i + 2] / scale);
      }
    }
  }
  return image;
}

void save_image(const std::filesystem::path& path, const RgbImage& image) {
  PngData png{image.width(), image.height(), 3, 8, {}};
  png.samples.resize(image.pixel_count() * 3);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(image.plane(c)[i], 0.0f, 1.0f);
      png.samples[i * 3 + static_cast<std::size_t>(c)] =
          static_cast<std::uint16_t>(v * 255.0f + 0.5f);
    }
  }
  write_png(path, png);
}

namespace {

PngData mask_to_png(const BinaryMask& mask) {
  PngData png{mask.width(), mask.height(), 1, 8, {}};
  png.samples.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    switch (mask[i]) {
      case Label::Background: png.samples[i] = 0; break;
      case Label::Object: png.samples[i] = 255; break;
      case Label::Ignore: png.samples[i] = 128; break;
    }
  }
  return png;
}

}  // namespace

BinaryMask load_mask(const std::filesystem::path& path) {
  const PngData png = read_png(path);
  const int max_value = png.bit_depth == 16 ? 65535 : 255;
  BinaryMask mask(png.width, png.height);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    // First channel only; anything brighter than mid-gray is object.
    const int v = png.samples[i * static_cast<std::size_t>(png.channels)] * 255 / max_value;
    mask[i] = v == 128 ? Label::Ignore : (v > 128 ? Label::Object : Label::Background);
  }
  return mask;
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  write_png(path, mask_to_png(mask));
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
  return encode_png(mask_to_png(mask));
}

}  // namespace xclick
