#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "ccseg/error.hpp"
#include "ccseg/pipeline.hpp"
#include "ccseg/verify/oracles.hpp"
#include "ccseg/weights.hpp"

namespace ccseg::pipeline {
namespace {

using verify::random_tensor;

Tensor random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = random_tensor({3, h, w}, rng, 0.25);
  return t;
}

Detection det(double conf, Box b, std::vector<double> coeffs = {}) {
  return {conf, b, std::move(coeffs)};
}

TEST(Variant, Names) {
  EXPECT_EQ(variant_name(Insertion::kNone), "Base YOLACT++");
  EXPECT_EQ(variant_name(Insertion::kBackbone), "CCAM-Backbone");
  EXPECT_EQ(variant_name(Insertion::kFpn), "CCAM-FPN");
  EXPECT_EQ(variant_name(Insertion::kBoth), "CCAM-Full");
  for (Insertion i : kAllInsertions) EXPECT_EQ(parse_insertion(variant_name(i)), i);
  EXPECT_EQ(parse_insertion("base"), Insertion::kNone);
  EXPECT_EQ(parse_insertion("full"), Insertion::kBoth);
  EXPECT_THROW(parse_insertion("sideways"), ConfigError);
}

TEST(Variant, Defaults) {
  const VariantSpec s;
  EXPECT_DOUBLE_EQ(s.display_confidence, 0.3);
  EXPECT_DOUBLE_EQ(s.pre_nms_confidence, 0.05);
  EXPECT_DOUBLE_EQ(s.nms_iou, 0.5);
  EXPECT_EQ(s.top_k, 200u);
  EXPECT_EQ(s.prototypes, 8u);
  EXPECT_EQ(s.attention_recurrence, 2u);
  EXPECT_EQ(s.anchors_per_position(0), 3u);
  VariantSpec bad;
  bad.anchor_scales[2].clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Anchors, SquareCenteredOnGrid) {
  const auto a = generate_anchors(16, 256, 256, {32}, {1.0});
  ASSERT_EQ(a.size(), 256u);
  const Box& b = a[3 * 16 + 5];  // row 3, column 5
  EXPECT_DOUBLE_EQ(b.x0, 5.5 * 16 - 16);
  EXPECT_DOUBLE_EQ(b.x1, 5.5 * 16 + 16);
  EXPECT_DOUBLE_EQ(b.y0, 3.5 * 16 - 16);
  EXPECT_DOUBLE_EQ(b.y1, 3.5 * 16 + 16);
}

TEST(Anchors, CeilGridForCoarseLevels) {
  // 96 / 64 and 96 / 128 leave partial cells; stride-2 convolutions still produce them
  EXPECT_EQ(generate_anchors(64, 96, 96, {32}, {1.0}).size(), 4u);
  EXPECT_EQ(generate_anchors(128, 96, 96, {32}, {1.0}).size(), 1u);
  EXPECT_EQ(generate_anchors(128, 64, 64, {32}, {1.0, 2.0}).size(), 2u);
}

TEST(Anchors, TotalAndClipping) {
  const VariantSpec s;
  std::size_t total = 0;
  for (std::size_t l = 0; l < kPyramidLevels; ++l) {
    const auto a = generate_anchors(pyramid_stride(l), 256, 256, s.anchor_scales[l], s.anchor_ratios);
    total += a.size();
    for (const Box& b : a) {
      EXPECT_GE(b.x0, 0.0);
      EXPECT_GE(b.y0, 0.0);
      EXPECT_LE(b.x1, 256.0);
      EXPECT_LE(b.y1, 256.0);
      EXPECT_LT(b.x0, b.x1);
      EXPECT_LT(b.y0, b.y1);
    }
  }
  EXPECT_EQ(total, 3u * (32 * 32 + 16 * 16 + 8 * 8 + 4 * 4 + 2 * 2));
  EXPECT_EQ(total, 4092u);
}

TEST(Anchors, RatiosAndErrors) {
  const auto a = generate_anchors(64, 256, 256, {64}, {1.0, 0.5, 2.0});
  // Position (1,1) is away from the border; all three keep area s^2.
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(a[(1 * 4 + 1) * 3 + r].area(), 64.0 * 64.0, 1e-9);
  EXPECT_THROW(generate_anchors(8, 64, 64, {}, {1.0}), ConfigError);
}

TEST(Decode, Parameterization) {
  const Box anchor{10, 20, 30, 60};
  const std::array<double, 4> zero{0, 0, 0, 0};
  EXPECT_EQ(decode_box(anchor, zero), anchor);

  const std::array<double, 4> dx{0.5, 0, 0, 0};
  const Box moved = decode_box(anchor, dx);
  EXPECT_DOUBLE_EQ(moved.x0, 20.0);
  EXPECT_DOUBLE_EQ(moved.x1, 40.0);

  // center (20, 40), size (20, 40); dy=-0.25, dw=ln 2, dh=ln 0.5
  const std::array<double, 4> r{0.0, -0.25, std::log(2.0), std::log(0.5)};
  const Box b = decode_box(anchor, r);
  EXPECT_NEAR(b.x0, 0.0, 1e-12);
  EXPECT_NEAR(b.x1, 40.0, 1e-12);
  EXPECT_NEAR(b.y0, 20.0, 1e-12);
  EXPECT_NEAR(b.y1, 40.0, 1e-12);

  EXPECT_THROW(decode_boxes({anchor}, {0, 0, 0}), ContractViolation);
}

TEST(Iou, Basic) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {2.5, 0, 12.5, 10}), 0.6);
}

TEST(FastNms, IdenticalBoxes) {
  const auto kept = fast_nms({det(0.8, {0, 0, 10, 10}), det(0.9, {0, 0, 10, 10})}, 0.5, 200);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].confidence, 0.9);
}

TEST(FastNms, DisjointSurvive) {
  const auto kept =
      fast_nms({det(0.5, {0, 0, 5, 5}), det(0.7, {10, 10, 15, 15}), det(0.6, {20, 0, 25, 5})}, 0.5, 200);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_DOUBLE_EQ(kept[0].confidence, 0.7);
  EXPECT_DOUBLE_EQ(kept[2].confidence, 0.5);
}

TEST(FastNms, ChainSuppressesThroughSuppressedBox) {
  // IoU(A,B) = IoU(B,C) = 0.6, IoU(A,C) = 1/3: sequential NMS would keep {A, C}.
  const Box a{0, 0, 10, 10}, b{2.5, 0, 12.5, 10}, c{5, 0, 15, 10};
  ASSERT_DOUBLE_EQ(iou(a, b), 0.6);
  ASSERT_DOUBLE_EQ(iou(b, c), 0.6);
  ASSERT_LT(iou(a, c), 0.5);
  const auto kept = fast_nms({det(0.7, c), det(0.9, a), det(0.8, b)}, 0.5, 200);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].box, a);
}

TEST(FastNms, TopK) {
  std::vector<Detection> d;
  for (int i = 0; i < 10; ++i) d.push_back(det(0.1 * i, {20.0 * i, 0, 20.0 * i + 5, 5}));
  const auto kept = fast_nms(d, 0.5, 4);
  ASSERT_EQ(kept.size(), 4u);
  EXPECT_DOUBLE_EQ(kept[3].confidence, 0.6);
}

Tensor indicator_prototypes() {
  // Two 8x8 prototypes: left half and right half.
  Tensor p({2, 8, 8});
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) p.at(x < 4 ? 0 : 1, y, x) = 1.0;
  return p;
}

TEST(Masks, SaturatedIndicator) {
  const Tensor p = indicator_prototypes();
  const Tensor prob = mask_probabilities(p, std::vector<double>{10.0, 0.0});
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_GT(prob[y * 8 + x], 0.999);
  const auto masks = assemble_masks(p, {det(0.9, {0, 0, 32, 32}, {10.0, 0.0})}, 32, 32);
  ASSERT_EQ(masks.size(), 1u);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) EXPECT_EQ(masks[0].at(x, y), x < 16 ? 1 : 0);
}

TEST(Masks, ZeroCoefficientsGiveEmptyMask) {
  const Tensor p = indicator_prototypes();
  const Tensor prob = mask_probabilities(p, std::vector<double>{0.0, 0.0});
  for (double v : prob.storage()) EXPECT_EQ(v, 0.5);
  const auto masks = assemble_masks(p, {det(0.9, {0, 0, 32, 32}, {0.0, 0.0})}, 32, 32);
  EXPECT_TRUE(masks[0].empty());
}

TEST(Masks, CroppedToBox) {
  const Tensor p = indicator_prototypes();
  const auto masks = assemble_masks(p, {det(0.9, {4, 8, 12, 20}, {10.0, 10.0})}, 32, 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      EXPECT_EQ(masks[0].at(x, y), (x >= 4 && x < 12 && y >= 8 && y < 20) ? 1 : 0) << x << "," << y;
}

TEST(Masks, LogitsLinearInCoefficients) {
  Rng rng(12);
  const Tensor p = random_tensor({5, 6, 7}, rng);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> c1(5), c2(5), c12(5);
    for (std::size_t j = 0; j < 5; ++j) {
      c1[j] = rng.uniform(-1, 1);
      c2[j] = rng.uniform(-1, 1);
      c12[j] = c1[j] + c2[j];
    }
    EXPECT_LE(max_abs_diff(mask_logits(p, c12), mask_logits(p, c1) + mask_logits(p, c2)), 1e-9);
  }
  EXPECT_THROW(mask_logits(p, std::vector<double>(4)), ContractViolation);
}

TEST(Paint, ConfidenceOrderAndDisjoint) {
  BinaryMask a(4, 1), b(4, 1);
  a.pixels = {1, 1, 1, 0};
  b.pixels = {0, 1, 1, 1};
  const FrameResult r = paint_instances({det(0.4, {0, 0, 3, 1}), det(0.8, {1, 0, 4, 1})}, {a, b}, 1, 4);
  EXPECT_EQ(r.labels.labels, (std::vector<std::uint16_t>{2, 1, 1, 1}));
  ASSERT_EQ(r.detections.size(), 2u);
  EXPECT_DOUBLE_EQ(r.detections[0].confidence, 0.8);
}

TEST(Paint, FullyOccludedInstanceDropped) {
  BinaryMask a(3, 1), b(3, 1);
  a.pixels = {1, 1, 1};
  b.pixels = {0, 1, 0};
  const FrameResult r = paint_instances({det(0.9, {0, 0, 3, 1}), det(0.5, {1, 0, 2, 1})}, {a, b}, 1, 3);
  EXPECT_EQ(r.labels.labels, (std::vector<std::uint16_t>{1, 1, 1}));
  EXPECT_EQ(r.detections.size(), 1u);
}

TEST(WeightsFile, ByteLayout) {
  WeightStore s;
  s.insert("a", Tensor({2}, {1.0, -2.0}));
  const auto bytes = s.encode();
  const std::vector<std::uint8_t> want = {'C', 'C', 'S', 'E', 'G', '1', 1, 0, 1, 0, 0, 0,
                                          1,   0,   0,   0,   'a', 1,   0, 0, 0, 2, 0, 0,
                                          0,   0,   0,   0x80, 0x3F, 0, 0, 0, 0xC0};
  EXPECT_EQ(bytes, want);
}

TEST(WeightsFile, RoundTrip) {
  const VariantSpec spec;
  const WeightStore w = init_weights(spec, 5);
  EXPECT_EQ(WeightStore::decode(w.encode()), w);
  const auto path = std::filesystem::temp_directory_path() / "ccseg_test_weights.bin";
  w.save(path);
  EXPECT_EQ(WeightStore::load(path), w);
  std::filesystem::remove(path);
}

TEST(WeightsFile, Corruption) {
  WeightStore s;
  s.insert("x", Tensor({3}, 1.0));
  auto bytes = s.encode();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(WeightStore::decode(bad_magic), LoadError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(WeightStore::decode(truncated), LoadError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(WeightStore::decode(trailing), LoadError);
  EXPECT_THROW(s.insert("x", Tensor({1})), ContractViolation);
  EXPECT_THROW(WeightStore::load("/nonexistent/weights.bin"), IoError);
}

TEST(WeightsFile, InitIsSeeded) {
  const VariantSpec spec;
  EXPECT_EQ(init_weights(spec, 9), init_weights(spec, 9));
  EXPECT_NE(init_weights(spec, 9), init_weights(spec, 10));
}

class Model : public ::testing::Test {
 protected:
  static const WeightStore& weights() {
    static const WeightStore w = init_weights(VariantSpec{}, 42);
    return w;
  }
  static VariantSpec spec(Insertion i) {
    VariantSpec s;
    s.insertion = i;
    return s;
  }
};

TEST_F(Model, ShapeContractAt256) {
  const Tensor img = random_image(256, 256, 1);
  for (Insertion ins : kAllInsertions) {
    SCOPED_TRACE(variant_name(ins));
    const SegmentationModel m(spec(ins), weights());
    const FeatureMaps f = m.extract_features(img);
    const std::array<std::size_t, 3> cw = {32, 64, 128};
    for (std::size_t l = 0; l < kBackboneLevels; ++l) {
      const std::size_t side = 256 / (8u << l);
      EXPECT_EQ(f.backbone[l].shape(), (Shape{cw[l], side, side}));
    }
    for (std::size_t l = 0; l < kPyramidLevels; ++l) {
      const std::size_t side = 256 / pyramid_stride(l);
      EXPECT_EQ(f.pyramid[l].shape(), (Shape{32, side, side}));
      EXPECT_TRUE(all_finite(f.pyramid[l]));
    }
    const Tensor protos = m.protonet_forward(f.pyramid[0]);
    EXPECT_EQ(protos.shape(), (Shape{8, 64, 64}));
    for (double v : protos.storage()) EXPECT_GE(v, 0.0);
    const LevelPredictions p3 = m.head_forward(f.pyramid[0]);
    EXPECT_EQ(p3.slots(), 3072u);
    EXPECT_EQ(p3.coefficients.size(), 3072u * 8);
    for (double c : p3.coefficients) {
      EXPECT_GT(c, -1.0);
      EXPECT_LT(c, 1.0);
    }
  }
}

TEST_F(Model, IndivisibleExtents) {
  const SegmentationModel m(spec(Insertion::kNone), weights());
  EXPECT_THROW(m.extract_features(random_image(96, 100, 2)), ConfigError);
}

TEST_F(Model, ZeroWeightsHead) {
  WeightStore zero;
  for (const auto& [name, t] : weights().entries()) zero.insert(name, Tensor(t.shape()));
  const SegmentationModel m(spec(Insertion::kNone), zero);
  const FeatureMaps f = m.extract_features(random_image(64, 64, 3));
  EXPECT_EQ(m.protonet_forward(f.pyramid[0]), Tensor({8, 16, 16}));
  const LevelPredictions p = m.head_forward(f.pyramid[1]);
  for (std::size_t s = 0; s < p.slots(); ++s)
    for (std::size_t c = 1; c < p.classes; ++c)
      EXPECT_EQ(p.class_logits[s * p.classes + c], p.class_logits[s * p.classes]);
}

TEST_F(Model, ZeroedAttentionMatchesBase) {
  WeightStore zw = weights();
  zero_attention(zw);
  const Tensor img = random_image(128, 128, 4);
  const FrameResult base = SegmentationModel(spec(Insertion::kNone), zw).infer(img);
  for (Insertion ins : {Insertion::kBackbone, Insertion::kFpn, Insertion::kBoth}) {
    const SegmentationModel m(spec(ins), zw);
    EXPECT_EQ(m.infer(img), base) << variant_name(ins);
  }
  const FeatureMaps fb = SegmentationModel(spec(Insertion::kNone), zw).extract_features(img);
  const FeatureMaps fa = SegmentationModel(spec(Insertion::kBackbone), zw).extract_features(img);
  for (std::size_t l = 0; l < kPyramidLevels; ++l) EXPECT_EQ(fa.pyramid[l], fb.pyramid[l]);
}

TEST_F(Model, BaseIgnoresAttentionTensors) {
  WeightStore stripped = weights();
  EXPECT_GT(stripped.erase_prefix("attn."), 0u);
  const Tensor img = random_image(128, 128, 5);
  EXPECT_EQ(SegmentationModel(spec(Insertion::kNone), stripped).infer(img),
            SegmentationModel(spec(Insertion::kNone), weights()).infer(img));
}

TEST_F(Model, MissingAttentionTensorNamed) {
  WeightStore w = weights();
  w.erase_prefix(pyramid_attention_prefix(2));
  try {
    SegmentationModel m(spec(Insertion::kFpn), w);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("attn.fpn.p5."), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(SegmentationModel(spec(Insertion::kBackbone), w));
}

TEST_F(Model, SuppressedDetectionsGiveEmptyMap) {
  WeightStore w = weights();
  suppress_detections(w, spec(Insertion::kBoth));
  const FrameResult r = infer_frame(random_image(128, 128, 6), SegmentationModel(spec(Insertion::kBoth), w));
  EXPECT_TRUE(r.detections.empty());
  EXPECT_TRUE(r.labels.is_background_only());
}

TEST_F(Model, InferOutputsConsistent) {
  const SegmentationModel m(spec(Insertion::kBoth), weights());
  const Tensor img = random_image(128, 128, 7);
  const FrameResult r = m.infer(img);
  EXPECT_EQ(r.labels.width, 128u);
  EXPECT_EQ(r.labels.height, 128u);
  const auto ids = r.labels.instance_ids();
  EXPECT_EQ(ids.size(), r.detections.size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], i + 1);
  for (std::size_t i = 0; i < r.detections.size(); ++i) {
    const Detection& d = r.detections[i];
    EXPECT_GE(d.confidence, m.spec().display_confidence);
    if (i > 0) EXPECT_LE(d.confidence, r.detections[i - 1].confidence);
    EXPECT_LT(d.box.x0, d.box.x1);
    EXPECT_LT(d.box.y0, d.box.y1);
    EXPECT_GE(d.box.x0, 0.0);
    EXPECT_LE(d.box.x1, 128.0);
    EXPECT_EQ(d.coefficients.size(), 8u);
  }
}

TEST_F(Model, DeterministicAcrossRunsAndWorkers) {
  const SegmentationModel m(spec(Insertion::kFpn), weights());
  std::vector<Tensor> imgs;
  for (std::uint64_t i = 0; i < 4; ++i) imgs.push_back(random_image(64, 64, 20 + i));
  const auto one = infer_frames(imgs, m, 1);
  for (std::size_t i = 0; i < imgs.size(); ++i) EXPECT_EQ(one[i], infer_frame(imgs[i], m));
  EXPECT_EQ(infer_frames(imgs, m, 3), one);
  EXPECT_EQ(infer_frames(imgs, m, 8), one);
}

}  // namespace
}  // namespace ccseg::pipeline
