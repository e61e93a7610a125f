#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "ccseg/ccam.hpp"
#include "ccseg/error.hpp"
#include "ccseg/verify/oracles.hpp"

namespace ccseg::attention {
namespace {

using verify::random_tensor;

std::vector<double> flatten(const CCWeights& w) {
  std::vector<double> out;
  w.for_each([&](const std::string&, const Tensor& t) {
    out.insert(out.end(), t.storage().begin(), t.storage().end());
  });
  return out;
}

std::set<Position> criss_cross(std::size_t h, std::size_t w, Position p) {
  std::set<Position> s;
  for (std::size_t x = 0; x < w; ++x) s.insert({p.row, x});
  for (std::size_t y = 0; y < h; ++y) s.insert({y, p.col});
  return s;
}

std::set<Position> as_set(const std::vector<Position>& v) { return {v.begin(), v.end()}; }

TEST(AttentionConfig, KeyChannelsAndValidation) {
  EXPECT_EQ((AttentionConfig{64, 8, 2, true}.key_channels()), 8u);
  EXPECT_EQ((AttentionConfig{4, 8, 2, true}.key_channels()), 1u);
  EXPECT_THROW((AttentionConfig{0, 8, 2, true}.validate()), ConfigError);
  EXPECT_THROW((AttentionConfig{4, 8, 0, true}.validate()), ConfigError);
}

TEST(AffinityCount, Examples) {
  EXPECT_EQ(affinity_entry_count(8, 8), 960u);
  EXPECT_EQ(affinity_entry_count(1, 1), 1u);
  EXPECT_EQ(affinity_entry_count(2, 3), 24u);
  EXPECT_EQ(affinity_entry_count(4, 5), 160u);
  for (std::size_t h = 1; h <= 7; ++h)
    for (std::size_t w = 1; w <= 7; ++w)
      EXPECT_EQ(affinity_entry_count(h, w), verify::brute_affinity_entries(h, w));
}

TEST(AffinityCount, RatioToDenseShrinks) {
  double prev = 2.0;
  for (std::size_t n = 1; n <= 128; ++n) {
    const double ratio = static_cast<double>(affinity_entry_count(n, n)) /
                         static_cast<double>(n * n * n * n);
    EXPECT_DOUBLE_EQ(ratio, static_cast<double>(2 * n - 1) / static_cast<double>(n * n));
    EXPECT_LT(ratio, prev);
    prev = ratio;
  }
  EXPECT_LT(static_cast<double>(affinity_entry_count(64, 64)) / (4096.0 * 4096.0), 0.04);
}

TEST(CcAffinity, LayoutAndDotProducts) {
  Rng rng(21);
  const Tensor q = random_tensor({3, 4, 5}, rng), k = random_tensor({3, 4, 5}, rng);
  const AffinityMap a = cc_affinity(q, k);
  ASSERT_EQ(a.span(), 8u);
  ASSERT_EQ(a.values().size(), 160u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const std::size_t u = i * 5 + j;
      std::set<std::size_t> seen;
      for (std::size_t s = 0; s < a.span(); ++s) {
        const std::size_t v = a.neighbor(i, j, s);
        seen.insert(v);
        const std::size_t vy = v / 5, vx = v % 5;
        EXPECT_TRUE(vy == i || vx == j);
        if (s < 5) {
          EXPECT_EQ(vy, i);
          EXPECT_EQ(vx, s);
        }
        double dot = 0.0;
        for (std::size_t c = 0; c < 3; ++c) dot += q.at(c, i, j) * k.at(c, vy, vx);
        EXPECT_DOUBLE_EQ(a.row(u)[s], dot);
      }
      EXPECT_EQ(seen.size(), a.span());
    }
}

TEST(CcAffinity, ColumnSlotsTopToBottom) {
  const AffinityMap a(4, 3);
  // u = (2,1): column slots visit rows 0, 1, 3.
  EXPECT_EQ(a.neighbor(2, 1, 3), 0 * 3 + 1u);
  EXPECT_EQ(a.neighbor(2, 1, 4), 1 * 3 + 1u);
  EXPECT_EQ(a.neighbor(2, 1, 5), 3 * 3 + 1u);
}

TEST(CcAffinity, DegenerateCases) {
  const AffinityMap z = cc_affinity(Tensor({2, 3, 3}), Tensor({2, 3, 3}));
  for (double v : z.values()) EXPECT_EQ(v, 0.0);

  const Tensor q({2, 1, 1}, {1.5, -2.0}), k({2, 1, 1}, {3.0, 0.5});
  const AffinityMap one = cc_affinity(q, k);
  ASSERT_EQ(one.values().size(), 1u);
  EXPECT_DOUBLE_EQ(one.values()[0], 3.5);

  EXPECT_THROW(cc_affinity(Tensor({2, 3, 3}), Tensor({2, 3, 4})), ContractViolation);
}

TEST(Normalize, ProbabilityVectors) {
  Rng rng(9);
  const AffinityMap a =
      normalize_affinity(cc_affinity(random_tensor({2, 5, 6}, rng, 5.0), random_tensor({2, 5, 6}, rng, 5.0)));
  for (std::size_t u = 0; u < a.positions(); ++u) {
    double sum = 0.0;
    for (double v : a.row(u)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CcAggregate, HandSummedTwoByTwo) {
  AffinityMap a(2, 2);
  const double third = 1.0 / 3.0;
  const std::vector<std::vector<double>> rows = {
      {0.5, 0.25, 0.25}, {third, third, third}, {third, third, third}, {0.2, 0.3, 0.5}};
  for (std::size_t u = 0; u < 4; ++u)
    std::copy(rows[u].begin(), rows[u].end(), a.row(u).begin());
  const Tensor v({1, 2, 2}, {1, 2, 3, 4});
  const Tensor x({1, 2, 2}, 10.0);
  const Tensor out = cc_aggregate(a, v, x);
  EXPECT_NEAR(out[0], 10.0 + 0.5 * 1 + 0.25 * 2 + 0.25 * 3, 1e-14);
  EXPECT_NEAR(out[1], 10.0 + (1 + 2 + 4) / 3.0, 1e-14);
  EXPECT_NEAR(out[2], 10.0 + (3 + 4 + 1) / 3.0, 1e-14);
  EXPECT_NEAR(out[3], 10.0 + 0.2 * 3 + 0.3 * 4 + 0.5 * 2, 1e-14);
}

TEST(CcAggregate, UniformOnConstantAndSelfPointMass) {
  Rng rng(10);
  const Tensor x = random_tensor({3, 4, 5}, rng);
  AffinityMap uniform(4, 5);
  for (auto& v : uniform.values()) v = 1.0 / 8.0;
  const Tensor out = cc_aggregate(uniform, Tensor({3, 4, 5}, 2.5), x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], x[i] + 2.5, 1e-14);

  AffinityMap self(4, 5);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) self.row(i * 5 + j)[j] = 1.0;
  EXPECT_EQ(cc_aggregate(self, Tensor({3, 4, 5}), x), x);

  // Point mass elsewhere picks that value.
  AffinityMap far(4, 5);
  for (std::size_t u = 0; u < 20; ++u) far.row(u)[far.span() - 1] = 1.0;
  const Tensor v = random_tensor({3, 4, 5}, rng);
  const Tensor picked = cc_aggregate(far, v, Tensor({3, 4, 5}));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const std::size_t n = far.neighbor(i, j, far.span() - 1);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(picked.at(c, i, j), v.at(c, n / 5, n % 5));
    }
}

TEST(CcAggregate, RejectsUnnormalized) {
  AffinityMap a(2, 2);
  for (auto& v : a.values()) v = 0.4;
  EXPECT_THROW(cc_aggregate(a, Tensor({1, 2, 2}), Tensor({1, 2, 2})), ContractViolation);
}

TEST(RccaForward, ZeroValueAndFusionIsIdentity) {
  Rng rng(1);
  const AttentionConfig cfg{6, 2, 2, true};
  CCWeights w = random_weights(cfg, rng);
  zero_value_and_fusion(w);
  const Tensor x = random_tensor({6, 5, 7}, rng);
  EXPECT_EQ(rcca_forward(x, w, cfg), x);
}

TEST(RccaForward, SinglePixelFixedPoint) {
  Rng rng(2);
  const AttentionConfig cfg{3, 1, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  const Tensor x = random_tensor({3, 1, 1}, rng);
  // Softmax over one logit is 1, so every pass adds the value projection.
  Tensor h = x;
  for (int r = 0; r < 2; ++r) {
    Tensor next = h;
    for (std::size_t o = 0; o < 3; ++o) {
      double v = w.pass(0).value.bias[o];
      for (std::size_t c = 0; c < 3; ++c) v += w.pass(0).value.weight[o * 3 + c] * h[c];
      next[o] = v + h[o];
    }
    h = next;
  }
  Tensor want = x;
  for (std::size_t o = 0; o < 3; ++o) {
    double f = w.fusion.bias[o];
    for (std::size_t c = 0; c < 3; ++c) f += w.fusion.weight[o * 6 + c] * x[c];
    for (std::size_t c = 0; c < 3; ++c) f += w.fusion.weight[o * 6 + 3 + c] * h[c];
    want[o] += f;
  }
  EXPECT_LE(max_abs_diff(rcca_forward(x, w, cfg), want), 1e-12);
}

TEST(RccaForward, MatchesDenseMaskedAttention) {
  Rng rng(7);
  const AttentionConfig cfg{4, 2, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  const Tensor x = random_tensor({4, 6, 6}, rng);
  EXPECT_LE(max_abs_diff(rcca_forward(x, w, cfg), verify::dense_attention(x, w, cfg)), 1e-10);
}

TEST(RccaForward, UnsharedPassesMatchDense) {
  Rng rng(17);
  const AttentionConfig cfg{3, 1, 3, false};
  const CCWeights w = random_weights(cfg, rng);
  ASSERT_EQ(w.passes.size(), 3u);
  const Tensor x = random_tensor({3, 5, 4}, rng);
  EXPECT_LE(max_abs_diff(rcca_forward(x, w, cfg), verify::dense_attention(x, w, cfg)), 1e-10);
}

TEST(RccaForward, ChannelMismatch) {
  Rng rng(3);
  const AttentionConfig cfg{4, 2, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  EXPECT_THROW(rcca_forward(Tensor({3, 4, 4}), w, cfg), ContractViolation);
}

TEST(RccaBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  const AttentionConfig cfg{2, 1, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  const Tensor x = random_tensor({2, 3, 3}, rng);
  const CCGradients g = rcca_backward(x, w, cfg, Tensor({2, 3, 3}));
  for (double v : g.input.storage()) EXPECT_EQ(v, 0.0);
  for (double v : flatten(g.weights)) EXPECT_EQ(v, 0.0);
}

TEST(RccaBackward, SumOfOutputsMatchesFiniteDifferences) {
  Rng rng(5);
  const AttentionConfig cfg{2, 1, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  const Tensor x = random_tensor({2, 3, 3}, rng);
  const auto gc = verify::gradient_check(x, w, cfg, Tensor({2, 3, 3}, 1.0), 1e-5);
  EXPECT_GT(gc.groups, 1u);
  EXPECT_LE(gc.max_relative_error, 1e-4) << gc.worst_group;
}

TEST(RccaBackward, RandomConfigsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(100 + seed);
    const AttentionConfig cfg{1 + seed % 4, 2, 1 + seed % 3, seed % 2 == 0};
    const CCWeights w = random_weights(cfg, rng);
    const Tensor x = random_tensor({cfg.channels, 1 + seed % 4, 4 - seed % 3}, rng);
    const Tensor up = random_tensor(x.shape(), rng);
    const auto gc = verify::gradient_check(x, w, cfg, up, 1e-5);
    EXPECT_LE(gc.max_relative_error, 1e-4) << "seed " << seed << " " << gc.worst_group;
  }
}

TEST(RccaBackward, LinearInUpstream) {
  Rng rng(6);
  const AttentionConfig cfg{3, 2, 2, false};
  const CCWeights w = random_weights(cfg, rng);
  const Tensor x = random_tensor({3, 4, 3}, rng);
  const Tensor g1 = random_tensor({3, 4, 3}, rng), g2 = random_tensor({3, 4, 3}, rng);
  const CCGradients a = rcca_backward(x, w, cfg, g1), b = rcca_backward(x, w, cfg, g2);
  const CCGradients ab = rcca_backward(x, w, cfg, g1 + g2);
  EXPECT_LE(max_abs_diff(ab.input, a.input + b.input), 1e-9);
  const auto fa = flatten(a.weights), fb = flatten(b.weights), fab = flatten(ab.weights);
  ASSERT_EQ(fa.size(), fab.size());
  for (std::size_t i = 0; i < fab.size(); ++i) EXPECT_NEAR(fab[i], fa[i] + fb[i], 1e-9);
}

TEST(RccaBackward, ShapeMismatch) {
  Rng rng(7);
  const AttentionConfig cfg{2, 1, 2, true};
  const CCWeights w = random_weights(cfg, rng);
  EXPECT_THROW(rcca_backward(Tensor({2, 3, 3}), w, cfg, Tensor({2, 3, 4})), ContractViolation);
}

class Influence : public ::testing::Test {
 protected:
  static std::pair<CCWeights, Tensor> draw(const AttentionConfig& cfg, std::size_t h,
                                           std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    CCWeights weights = random_weights(cfg, rng);
    Tensor x = random_tensor({cfg.channels, h, w}, rng, 0.5);
    return {std::move(weights), std::move(x)};
  }
};

TEST_F(Influence, OnePassIsRowAndColumn) {
  const AttentionConfig cfg{4, 2, 2, true};
  const auto [w, x] = draw(cfg, 6, 6, 31);
  const auto got = as_set(influence_map(cfg, w, x, {2, 3}, 1));
  EXPECT_EQ(got.size(), 11u);
  EXPECT_EQ(got, criss_cross(6, 6, {2, 3}));
}

TEST_F(Influence, TwoPassesReachEverything) {
  const AttentionConfig cfg{4, 2, 2, true};
  const auto [w, x] = draw(cfg, 6, 6, 32);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      EXPECT_EQ(influence_map(cfg, w, x, {i, j}, 2).size(), 36u) << i << "," << j;
}

TEST_F(Influence, SingleRow) {
  const AttentionConfig cfg{3, 1, 1, true};
  const auto [w, x] = draw(cfg, 1, 7, 33);
  EXPECT_EQ(influence_map(cfg, w, x, {0, 0}, 1).size(), 7u);
}

TEST_F(Influence, RandomDrawsMatchStructure) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    Rng pick(500 + t);
    const std::size_t c = 2 + pick.uniform_index(3);
    const AttentionConfig cfg{c, 2, 2, true};
    const std::size_t h = 2 + pick.uniform_index(6), wd = 2 + pick.uniform_index(6);
    const Position p{pick.uniform_index(h), pick.uniform_index(wd)};
    const auto [w, x] = draw(cfg, h, wd, 600 + t);
    EXPECT_EQ(as_set(influence_map(cfg, w, x, p, 1)), criss_cross(h, wd, p)) << "draw " << t;
    EXPECT_EQ(influence_map(cfg, w, x, p, 2).size(), h * wd) << "draw " << t;
  }
}

TEST_F(Influence, OutOfBounds) {
  const AttentionConfig cfg{2, 1, 2, true};
  const auto [w, x] = draw(cfg, 3, 3, 34);
  EXPECT_THROW(influence_map(cfg, w, x, {3, 0}, 1), ContractViolation);
}

TEST(Weights, ZeroWeightsShapes) {
  const AttentionConfig cfg{16, 8, 2, true};
  const CCWeights w = zero_weights(cfg);
  EXPECT_NO_THROW(validate_weights(cfg, w));
  EXPECT_EQ(w.pass(0).query.out_channels(), 2u);
  EXPECT_EQ(w.pass(1).value.out_channels(), 16u);
  EXPECT_EQ(w.fusion.in_channels(), 32u);
  std::vector<std::string> names;
  w.for_each([&](const std::string& n, const Tensor&) { names.push_back(n); });
  EXPECT_EQ(names.size(), 8u);
}

}  // namespace
}  // namespace ccseg::attention
