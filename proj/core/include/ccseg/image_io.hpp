#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ccseg/label_map.hpp"
#include "ccseg/tensor.hpp"

namespace ccseg {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return rgb.data() + (y * width + x) * 3; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return rgb.data() + (y * width + x) * 3;
  }
  bool operator==(const RgbImage&) const = default;
};

// [3,H,W] tensor with values v/255 - 0.5.
Tensor image_to_tensor(const RgbImage& image);

RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const RgbImage& image, const std::filesystem::path& path);

struct LabelMapRead {
  InstanceLabelMap map;
  bool remapped = false;  // labels were not contiguous and got renumbered
};

// 8-bit single-channel PNG, 0 background, ids 1..N.
LabelMapRead read_labelmap(const std::filesystem::path& path);
void write_labelmap(const InstanceLabelMap& map, const std::filesystem::path& path);

}  // namespace ccseg
