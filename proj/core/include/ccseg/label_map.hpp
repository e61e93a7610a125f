#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ccseg {

struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // 0 or 1, row-major

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, 0) {}

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool operator==(const BinaryMask&) const = default;
};

// 0 = background, 1..N = instances.
struct InstanceLabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> labels;

  InstanceLabelMap() = default;
  InstanceLabelMap(std::size_t w, std::size_t h) : width(w), height(h), labels(w * h, 0) {}

  std::uint16_t& at(std::size_t x, std::size_t y) { return labels[y * width + x]; }
  std::uint16_t at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }

  // Distinct nonzero labels, ascending.
  std::vector<std::uint16_t> instance_ids() const;
  BinaryMask mask_of(std::uint16_t id) const;
  bool is_background_only() const;
  bool operator==(const InstanceLabelMap&) const = default;
};

// Renumbers labels to {0..N} preserving order; returns true if anything changed.
bool normalize_labels(InstanceLabelMap& map);

}  // namespace ccseg
