#include "ccseg/image_io.hpp"

#include <png.h>

#include <cstring>

#include <spdlog/spdlog.h>

#include "ccseg/error.hpp"

namespace ccseg {

namespace {

struct PngImage {
  png_image img;
  PngImage() {
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

void begin_read(PngImage& p, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file '" + path.string() + "'");
  if (!png_image_begin_read_from_file(&p.img, path.string().c_str())) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + p.img.message);
  }
}

void finish_write(PngImage& p, const std::filesystem::path& path, const void* data) {
  if (!png_image_write_to_file(&p.img, path.string().c_str(), 0, data, 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + p.img.message);
  }
}

}  // namespace

Tensor image_to_tensor(const RgbImage& image) {
  Tensor t({3, image.height, image.width});
  const std::size_t n = image.width * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      t[c * n + i] = static_cast<double>(image.rgb[i * 3 + c]) / 255.0 - 0.5;
    }
  }
  return t;
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
  PngImage p;
  begin_read(p, path);
  p.img.format = PNG_FORMAT_RGB;
  RgbImage out(p.img.width, p.img.height);
  if (!png_image_finish_read(&p.img, nullptr, out.rgb.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + p.img.message);
  }
  return out;
}

void write_rgb_png(const RgbImage& image, const std::filesystem::path& path) {
  PngImage p;
  p.img.width = static_cast<png_uint_32>(image.width);
  p.img.height = static_cast<png_uint_32>(image.height);
  p.img.format = PNG_FORMAT_RGB;
  finish_write(p, path, image.rgb.data());
}

LabelMapRead read_labelmap(const std::filesystem::path& path) {
  PngImage p;
  begin_read(p, path);
  if (p.img.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_COLORMAP)) {
    throw IoError("label map '" + path.string() + "' is not single-channel grayscale");
  }
  if (p.img.format & PNG_FORMAT_FLAG_LINEAR) {
    throw IoError("label map '" + path.string() + "' is not 8-bit");
  }
  p.img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(p.img));
  if (!png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + p.img.message);
  }
  LabelMapRead out;
  out.map = InstanceLabelMap(p.img.width, p.img.height);
  std::copy(buf.begin(), buf.end(), out.map.labels.begin());
  out.remapped = normalize_labels(out.map);
  if (out.remapped) spdlog::warn("{}: instance labels were not contiguous; renumbered", path.string());
  return out;
}

void write_labelmap(const InstanceLabelMap& map, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf(map.labels.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (map.labels[i] > 255) {
      throw ContractViolation("write_labelmap: label " + std::to_string(map.labels[i]) +
                              " does not fit an 8-bit PNG (max 255 instances)");
    }
    buf[i] = static_cast<std::uint8_t>(map.labels[i]);
  }
  PngImage p;
  p.img.width = static_cast<png_uint_32>(map.width);
  p.img.height = static_cast<png_uint_32>(map.height);
  p.img.format = PNG_FORMAT_GRAY;
  finish_write(p, path, buf.data());
}

}  // namespace ccseg
