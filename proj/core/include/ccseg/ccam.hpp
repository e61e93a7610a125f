#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ccseg/rng.hpp"
#include "ccseg/tensor.hpp"

namespace ccseg::attention {

// Recurrent criss-cross attention hyperparameters.
struct AttentionConfig {
  std::size_t channels = 0;
  std::size_t reduction = 8;   // query/key channel shrink
  std::size_t recurrence = 2;  // stacked criss-cross passes
  bool share_weights = true;   // one projection set reused by every pass

  std::size_t key_channels() const;
  void validate() const;
};

// 1x1 projection: weight [out,in,1,1], bias [out].
struct Projection {
  Tensor weight;
  Tensor bias;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
};

struct PassWeights {
  Projection query;
  Projection key;
  Projection value;
};

struct CCWeights {
  std::vector<PassWeights> passes;  // size 1 when shared, else `recurrence`
  Projection fusion;                // [C, 2C] over concat(input, context)

  const PassWeights& pass(std::size_t r) const {
    return passes.size() == 1 ? passes.front() : passes[r];
  }

  // Visits every tensor with a stable dotted name, e.g. "pass0.query.weight".
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
};

// Gaussian init with small random biases: He for value and fusion, query and key
// scaled so affinities have unit variance on unit-variance input.
CCWeights random_weights(const AttentionConfig& cfg, Rng& rng);
// Same shapes, every entry zero.
CCWeights zero_weights(const AttentionConfig& cfg);
// Zeroes value and fusion projections, which turns the module into an identity map.
void zero_value_and_fusion(CCWeights& w);
void validate_weights(const AttentionConfig& cfg, const CCWeights& w);

struct Position {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Position&) const = default;
};

// Per-position scores over the criss-cross set of u = (i, j): slots [0, W) walk
// row i left to right, then slots [W, W+H-1) walk column j top to bottom,
// skipping row i so u appears once.
class AffinityMap {
 public:
  AffinityMap() = default;
  AffinityMap(std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t span() const { return height_ + width_ - 1; }
  std::size_t positions() const { return height_ * width_; }

  std::span<double> row(std::size_t u) { return {values_.data() + u * span(), span()}; }
  std::span<const double> row(std::size_t u) const {
    return {values_.data() + u * span(), span()};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Flat index (y*W + x) of the position occupying `slot` for u = (i, j).
  std::size_t neighbor(std::size_t i, std::size_t j, std::size_t slot) const {
    if (slot < width_) return i * width_ + slot;
    std::size_t y = slot - width_;
    if (y >= i) ++y;
    return y * width_ + j;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

std::size_t affinity_entry_count(std::size_t height, std::size_t width);

AffinityMap cc_affinity(const Tensor& query, const Tensor& key);
AffinityMap normalize_affinity(const AffinityMap& logits);
// sum_{v in row/col(u)} A(u,v) * value_v + residual_u
Tensor cc_aggregate(const AffinityMap& weights, const Tensor& value, const Tensor& residual);

Tensor rcca_forward(const Tensor& x, const CCWeights& w, const AttentionConfig& cfg);

struct CCGradients {
  Tensor input;
  CCWeights weights;
};

CCGradients rcca_backward(const Tensor& x, const CCWeights& w, const AttentionConfig& cfg,
                          const Tensor& upstream);

// Output positions whose value moves when channel 0 of `perturbed` is bumped by 1e-3.
std::vector<Position> influence_map(const AttentionConfig& cfg, const CCWeights& w,
                                    const Tensor& x, Position perturbed, std::size_t passes);

inline constexpr double kInfluenceDelta = 1e-3;
inline constexpr double kInfluenceTolerance = 1e-12;

}  // namespace ccseg::attention
