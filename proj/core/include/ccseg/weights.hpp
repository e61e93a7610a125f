#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ccseg/tensor.hpp"

namespace ccseg {

// Named tensors, as stored in a CCSEG1 weights file.
//
// Layout (little-endian):
//   "CCSEG1"           6 bytes
//   version            u16 (= 1)
//   entry count        u32
//   per entry, in ascending name order:
//     name length      u32
//     name             utf-8 bytes
//     rank             u32
//     extents          rank x u32
//     payload          volume x float32
class WeightStore {
 public:
  static constexpr std::uint16_t kVersion = 1;

  void insert(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return entries_.contains(name); }
  // Throws LoadError naming `name` when absent.
  const Tensor& get(const std::string& name) const;
  std::size_t erase_prefix(const std::string& prefix);
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Tensor>& entries() const { return entries_; }

  std::vector<std::uint8_t> encode() const;
  static WeightStore decode(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static WeightStore load(const std::filesystem::path& path);

  bool operator==(const WeightStore&) const = default;

 private:
  std::map<std::string, Tensor> entries_;
};

}  // namespace ccseg
