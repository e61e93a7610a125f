#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ccseg {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Value type: copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 [C,H,W] accessors; unchecked.
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  // Same data, new extents. Volume must match.
  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

bool all_finite(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Cross-correlation (no kernel flip) with zero padding.
// input [C_in,H,W], kernel [C_out,C_in,kH,kW], bias [C_out] or empty.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
              std::size_t stride = 1, std::size_t padding = 0);

// Numerically stable softmax along `axis`.
Tensor softmax_axis(const Tensor& x, std::size_t axis);

// Align-corners-false bilinear resampling of [C,H,W].
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);

enum class Activation { kRelu, kSigmoid, kTanh };
Tensor activation(const Tensor& x, Activation kind);
void activation_inplace(Tensor& x, Activation kind);

Tensor matmul(const Tensor& a, const Tensor& b);

// Channel concatenation of two [C,H,W] maps with equal spatial extents.
Tensor concat_channels(const Tensor& a, const Tensor& b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor& operator+=(Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

}  // namespace ccseg
