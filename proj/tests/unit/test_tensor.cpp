#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "ccseg/error.hpp"
#include "ccseg/rng.hpp"
#include "ccseg/tensor.hpp"
#include "ccseg/verify/oracles.hpp"

namespace ccseg {
namespace {

using verify::random_tensor;

// Direct windowed sum over a zero-padded input.
Tensor naive_conv(const Tensor& x, const Tensor& k, const std::vector<double>& bias,
                  std::size_t stride, std::size_t pad) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  Tensor out({cout, oh, ow});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double s = bias.empty() ? 0.0 : bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t dy = 0; dy < kh; ++dy)
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const long iy = static_cast<long>(y * stride + dy) - static_cast<long>(pad);
              const long ix = static_cast<long>(xx * stride + dx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w))
                continue;
              s += x.at(c, iy, ix) * k[((o * cin + c) * kh + dy) * kw + dx];
            }
        out.at(o, y, xx) = s;
      }
  return out;
}

TEST(Tensor, ConstructionChecksLength) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ContractViolation);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(t.reshaped({4, 2}), ContractViolation);
}

TEST(Conv2d, OnesKernelCenterAndCorner) {
  const Tensor x({1, 3, 3}, 1.0);
  const Tensor k({1, 1, 3, 3}, 1.0);
  const Tensor y = conv2d(x, k, std::vector<double>{0.0}, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3}));
  EXPECT_DOUBLE_EQ(y.at(0, 1, 1), 9.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0), 4.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1), 6.0);
}

TEST(Conv2d, IdentityKernel) {
  Rng rng(3);
  const Tensor x = random_tensor({1, 5, 7}, rng);
  const Tensor k({1, 1, 1, 1}, 1.0);
  EXPECT_EQ(conv2d(x, k, {}, 1, 0), x);
}

TEST(Conv2d, StrideTwoSubsamplesEvenIndices) {
  Tensor x({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
  const Tensor y = conv2d(x, Tensor({1, 1, 1, 1}, 1.0), {}, 2, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(y.storage(), (std::vector<double>{0, 2, 8, 10}));
}

TEST(Conv2d, MatchesWindowedSum) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cin = 1 + rng.uniform_index(3), cout = 1 + rng.uniform_index(3);
    const std::size_t kh = 1 + 2 * rng.uniform_index(2), kw = 1 + 2 * rng.uniform_index(2);
    const std::size_t stride = 1 + rng.uniform_index(2), pad = rng.uniform_index(2);
    const std::size_t h = kh + rng.uniform_index(6), w = kw + rng.uniform_index(6);
    const Tensor x = random_tensor({cin, h, w}, rng);
    const Tensor k = random_tensor({cout, cin, kh, kw}, rng);
    std::vector<double> b(cout);
    for (auto& v : b) v = rng.normal();
    const Tensor got = conv2d(x, k, b, stride, pad);
    const Tensor want = naive_conv(x, k, b, stride, pad);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LE(max_abs_diff(got, want), 1e-12);
  }
}

TEST(Conv2d, Linearity) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({3, 8, 8}, rng), y = random_tensor({3, 8, 8}, rng);
    const Tensor k = random_tensor({2, 3, 3, 3}, rng);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    const Tensor lhs = conv2d(a * x + b * y, k, {}, 1, 1);
    const Tensor rhs = a * conv2d(x, k, {}, 1, 1) + b * conv2d(y, k, {}, 1, 1);
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-9);
  }
}

TEST(Conv2d, Errors) {
  const Tensor x({2, 4, 4});
  EXPECT_THROW(conv2d(x, Tensor({1, 3, 3, 3}), {}, 1, 1), ContractViolation);
  EXPECT_THROW(conv2d(x, Tensor({1, 2, 2, 2}), {}, 1, 0), ContractViolation);
  EXPECT_THROW(conv2d(x, Tensor({1, 2, 3, 3}), std::vector<double>{0, 0}, 1, 1),
               ContractViolation);
  EXPECT_THROW(conv2d(x, Tensor({1, 2, 7, 7}), {}, 1, 0), ConfigError);
  EXPECT_THROW(conv2d(x, Tensor({1, 2, 1, 1}), {}, 0, 0), ConfigError);
}

TEST(Conv2d, Deterministic) {
  Rng rng(8);
  const Tensor x = random_tensor({4, 9, 9}, rng);
  const Tensor k = random_tensor({4, 4, 3, 3}, rng);
  EXPECT_EQ(conv2d(x, k, {}, 2, 1), conv2d(x, k, {}, 2, 1));
}

TEST(Softmax, Examples) {
  const Tensor u = softmax_axis(Tensor({3}, 0.0), 0);
  for (double v : u.storage()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  const Tensor p = softmax_axis(Tensor({3}, {std::log(1.0), std::log(2.0), std::log(7.0)}), 0);
  EXPECT_NEAR(p[0], 0.1, 1e-15);
  EXPECT_NEAR(p[1], 0.2, 1e-15);
  EXPECT_NEAR(p[2], 0.7, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  Rng rng(2);
  const Tensor x = random_tensor({6}, rng);
  Tensor shifted = x;
  for (auto& v : shifted.storage()) v += 123.25;
  EXPECT_LE(max_abs_diff(softmax_axis(x, 0), softmax_axis(shifted, 0)), 1e-14);
}

TEST(Softmax, SumsToOneAlongAxisAtLargeMagnitude) {
  Rng rng(13);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const Tensor x = random_tensor({4, 5, 6}, rng, 1e3);
    const Tensor y = softmax_axis(x, axis);
    ASSERT_TRUE(all_finite(y));
    const Shape& s = y.shape();
    const std::size_t inner = axis == 2 ? 1 : axis == 1 ? s[2] : s[1] * s[2];
    const std::size_t outer = y.size() / (s[axis] * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        double sum = 0.0;
        for (std::size_t a = 0; a < s[axis]; ++a) {
          const double v = y[(o * s[axis] + a) * inner + i];
          EXPECT_GE(v, 0.0);
          sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
  }
}

TEST(Softmax, InvalidAxis) {
  EXPECT_THROW(softmax_axis(Tensor({2, 2}), 2), ContractViolation);
  EXPECT_THROW(softmax_axis(Tensor({0}), 0), ContractViolation);
}

TEST(Bilinear, ConstantPreserved) {
  const Tensor x({2, 3, 5}, 5.0);
  for (auto [h, w] : {std::pair{1, 1}, {7, 2}, {6, 10}}) {
    const Tensor y = bilinear_resize(x, h, w);
    for (double v : y.storage()) EXPECT_NEAR(v, 5.0, 1e-12);
  }
}

TEST(Bilinear, IdentityAtSameSize) {
  Rng rng(4);
  const Tensor x = random_tensor({3, 4, 6}, rng);
  EXPECT_LE(max_abs_diff(bilinear_resize(x, 4, 6), x), 1e-15);
}

TEST(Bilinear, SampleCenters) {
  const Tensor y = bilinear_resize(Tensor({1, 1, 2}, {0.0, 1.0}), 1, 4);
  // Centers at source coordinates -0.25, 0.25, 0.75, 1.25, clamped at the borders.
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], 0.25);
  EXPECT_DOUBLE_EQ(y[2], 0.75);
  EXPECT_DOUBLE_EQ(y[3], 1.0);
}

TEST(Bilinear, RoundTripConstantAndRamp) {
  // Upsampling by an integer factor then decimating back is exact on interior
  // samples of a linear ramp; the clamped border columns are excluded.
  Tensor ramp({1, 8, 8});
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) ramp.at(0, y, x) = 0.5 * x - 0.25 * y;
  const Tensor back = bilinear_resize(bilinear_resize(ramp, 16, 16), 8, 8);
  for (std::size_t y = 1; y + 1 < 8; ++y)
    for (std::size_t x = 1; x + 1 < 8; ++x) EXPECT_NEAR(back.at(0, y, x), ramp.at(0, y, x), 1e-9);

  const Tensor c({1, 8, 8}, -2.0);
  EXPECT_LE(max_abs_diff(bilinear_resize(bilinear_resize(c, 13, 5), 8, 8), c), 1e-9);
}

TEST(Bilinear, ZeroExtent) {
  EXPECT_THROW(bilinear_resize(Tensor({1, 2, 2}), 0, 3), ContractViolation);
}

TEST(Activation, Examples) {
  EXPECT_DOUBLE_EQ(activation(Tensor({1}, 0.0), Activation::kSigmoid)[0], 0.5);
  EXPECT_DOUBLE_EQ(activation(Tensor({1}, 0.0), Activation::kTanh)[0], 0.0);
  EXPECT_EQ(activation(Tensor({2}, {-2.0, 3.0}), Activation::kRelu).storage(),
            (std::vector<double>{0.0, 3.0}));
}

TEST(Activation, BoundsAndMonotone) {
  Tensor x({201});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -10.0 + 0.1 * static_cast<double>(i);
  const Tensor s = activation(x, Activation::kSigmoid), t = activation(x, Activation::kTanh);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GT(s[i], 0.0);
    EXPECT_LT(s[i], 1.0);
    EXPECT_GT(t[i], -1.0);
    EXPECT_LT(t[i], 1.0);
    if (i > 0) {
      EXPECT_GT(s[i], s[i - 1]);
      EXPECT_GT(t[i], t[i - 1]);
    }
  }
}

TEST(Matmul, Examples) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(matmul(a, Tensor({2, 2}, {1, 0, 0, 1})), a);
  EXPECT_EQ(matmul(a, Tensor({2, 1}, {0, 1})).storage(), (std::vector<double>{2, 4}));
  Rng rng(1);
  const Tensor z = matmul(Tensor({3, 4}), random_tensor({4, 5}, rng));
  EXPECT_EQ(z, Tensor({3, 5}));
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ContractViolation);
}

TEST(Tensor, FiniteCheck) {
  Tensor t({2}, 1.0);
  EXPECT_TRUE(all_finite(t));
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(t));
}

}  // namespace
}  // namespace ccseg
