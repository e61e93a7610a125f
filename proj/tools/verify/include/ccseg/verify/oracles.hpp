#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccseg/ccam.hpp"
#include "ccseg/label_map.hpp"
#include "ccseg/metrics.hpp"
#include "ccseg/rng.hpp"

// Slow, obviously-correct reference implementations used to cross-check the
// optimized code paths.
namespace ccseg::verify {

double oracle_dsc(const BinaryMask& a, const BinaryMask& b);
BinaryMask oracle_boundary(const BinaryMask& mask);
// Minimum over all set pixels of the Euclidean distance; O(N * P).
metrics::DistanceMap oracle_distance(const BinaryMask& points);
// Pairwise boundary distances, no distance transform.
double oracle_nsd(const BinaryMask& a, const BinaryMask& b, double tau);
// Enumerates every partial one-to-one assignment over pairs with positive Dice.
metrics::Matching oracle_match(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

// Full (HW x HW) attention with every pair outside the criss-cross set masked out.
Tensor dense_attention(const Tensor& x, const attention::CCWeights& w,
                       const attention::AttentionConfig& cfg);

// Counts (u, v) pairs sharing a row or a column.
std::size_t brute_affinity_entries(std::size_t height, std::size_t width);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_group;
  std::size_t groups = 0;
};

// Central differences of sum(upstream * rcca_forward) against rcca_backward.
// Error per group: max |analytic - numeric| / max(group scale, 1e-3 * largest group
// scale), where a group's scale is max(|analytic|, |numeric|) over its entries.
GradientCheck gradient_check(const Tensor& x, const attention::CCWeights& w,
                             const attention::AttentionConfig& cfg, const Tensor& upstream,
                             double epsilon);

// Random test inputs.
BinaryMask random_mask(std::size_t width, std::size_t height, Rng& rng);
InstanceLabelMap random_labels(std::size_t width, std::size_t height, std::size_t instances,
                               Rng& rng);
// Jittered copy: instances shifted, some dropped, some added.
InstanceLabelMap perturb_labels(const InstanceLabelMap& labels, Rng& rng);
Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0);

}  // namespace ccseg::verify
