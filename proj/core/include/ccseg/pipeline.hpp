#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccseg/ccam.hpp"
#include "ccseg/label_map.hpp"
#include "ccseg/tensor.hpp"
#include "ccseg/weights.hpp"

namespace ccseg::pipeline {

// Where criss-cross attention modules are inserted.
enum class Insertion { kNone, kBackbone, kFpn, kBoth };

// "Base YOLACT++", "CCAM-Backbone", "CCAM-FPN", "CCAM-Full".
std::string variant_name(Insertion insertion);
// Accepts variant names and the short forms none|base|backbone|fpn|both|full.
Insertion parse_insertion(const std::string& text);
inline constexpr std::array<Insertion, 4> kAllInsertions = {
    Insertion::kNone, Insertion::kBackbone, Insertion::kFpn, Insertion::kBoth};

inline bool attends_backbone(Insertion i) {
  return i == Insertion::kBackbone || i == Insertion::kBoth;
}
inline bool attends_fpn(Insertion i) { return i == Insertion::kFpn || i == Insertion::kBoth; }

inline constexpr std::size_t kBackboneLevels = 3;  // C3, C4, C5
inline constexpr std::size_t kPyramidLevels = 5;   // P3..P7

struct VariantSpec {
  Insertion insertion = Insertion::kNone;
  std::size_t stem_width = 16;
  std::array<std::size_t, kBackboneLevels> backbone_widths = {32, 64, 128};
  std::size_t blocks_per_stage = 2;
  std::size_t fpn_width = 32;
  std::size_t prototypes = 8;
  std::size_t num_classes = 1;  // foreground classes; background is implicit
  std::array<std::vector<double>, kPyramidLevels> anchor_scales = {
      std::vector<double>{16}, {32}, {64}, {128}, {256}};
  std::vector<double> anchor_ratios = {1.0, 0.5, 2.0};
  std::size_t attention_reduction = 8;
  std::size_t attention_recurrence = 2;
  double nms_iou = 0.5;
  double pre_nms_confidence = 0.05;
  double display_confidence = 0.3;
  std::size_t top_k = 200;

  std::string name() const { return variant_name(insertion); }
  std::size_t anchors_per_position(std::size_t level) const;
  attention::AttentionConfig attention_config(std::size_t channels) const;
  void validate() const;
};

// Stride of pyramid level index 0..4 (P3..P7).
inline std::size_t pyramid_stride(std::size_t level) { return std::size_t{8} << level; }

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

struct Detection {
  double confidence = 0.0;
  Box box;
  std::vector<double> coefficients;  // tanh-bounded, length k
  bool operator==(const Detection&) const = default;
};

struct FeatureMaps {
  std::array<Tensor, kBackboneLevels> backbone;  // C3, C4, C5
  std::array<Tensor, kPyramidLevels> pyramid;    // P3..P7
};

// Flattened per-anchor predictions of one pyramid level, position-major then anchor.
struct LevelPredictions {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t anchors = 0;
  std::size_t classes = 0;            // including background
  std::vector<double> class_logits;   // slots x classes
  std::vector<double> regressions;    // slots x 4 (dx, dy, dw, dh)
  std::vector<double> coefficients;   // slots x k

  std::size_t slots() const { return height * width * anchors; }
};

// Wall time per pipeline stage, seconds. Attention time is excluded from the
// backbone and fpn buckets.
struct StageProfile {
  double backbone = 0, attention = 0, fpn = 0, heads = 0, nms = 0, assembly = 0;

  StageProfile& operator+=(const StageProfile& o);
  double total() const { return backbone + attention + fpn + heads + nms + assembly; }
};

struct FrameResult {
  InstanceLabelMap labels;
  std::vector<Detection> detections;  // painted instances; id = index + 1
  bool operator==(const FrameResult&) const = default;
};

struct ParameterInfo {
  std::string name;
  Shape shape;
};

// Every tensor the architecture reads, including attention tensors for all sites.
std::vector<ParameterInfo> parameter_layout(const VariantSpec& spec);
std::string backbone_attention_prefix(std::size_t level);  // "attn.backbone.c3."
std::string pyramid_attention_prefix(std::size_t level);   // "attn.fpn.p3."

// Seeded He-style initialization. Attention tensors for every insertion site are
// always generated so a single file serves all four variants. Values are rounded
// to float32 so a save/load round trip is exact.
WeightStore init_weights(const VariantSpec& spec, std::uint64_t seed);
// Weights that give every anchor near-zero foreground confidence.
void suppress_detections(WeightStore& weights, const VariantSpec& spec);
// Zeroes value and fusion projections of every attention module in `weights`.
void zero_attention(WeightStore& weights);

// Anchors for one level on a ceil(extent / stride) grid, matching the stride-2
// convolutions that build the coarse levels. Position-major then (scale, ratio),
// clipped to the image.
std::vector<Box> generate_anchors(std::size_t stride, std::size_t image_h, std::size_t image_w,
                                  const std::vector<double>& scales,
                                  const std::vector<double>& ratios);
// Center/size parameterization: cx += dx*w, cy += dy*h, w *= exp(dw), h *= exp(dh).
Box decode_box(const Box& anchor, std::span<const double, 4> regression);
std::vector<Box> decode_boxes(const std::vector<Box>& anchors,
                              const std::vector<double>& regressions);
Box clip_box(const Box& b, double image_w, double image_h);

// One-shot matrix NMS: sort by confidence, keep top_k, drop any detection whose
// IoU with some higher-scoring detection (kept or not) exceeds the threshold.
std::vector<Detection> fast_nms(std::vector<Detection> detections, double iou_threshold,
                                std::size_t top_k);

// Pre-sigmoid mask of one detection: sum_j coefficients[j] * prototypes[j], as [h,w].
Tensor mask_logits(const Tensor& prototypes, std::span<const double> coefficients);
// sigmoid(mask_logits), as [h,w].
Tensor mask_probabilities(const Tensor& prototypes, std::span<const double> coefficients);
// Binary full-resolution mask per detection: prototype-resolution probability
// > 0.5, nearest-upsampled, restricted to pixels whose centers lie in the box.
std::vector<BinaryMask> assemble_masks(const Tensor& prototypes,
                                       const std::vector<Detection>& detections,
                                       std::size_t image_h, std::size_t image_w);

// Higher confidence wins contested pixels; ids follow descending confidence.
FrameResult paint_instances(const std::vector<Detection>& detections,
                            const std::vector<BinaryMask>& masks, std::size_t image_h,
                            std::size_t image_w);

// Immutable once constructed; all methods are safe to call concurrently.
class SegmentationModel {
 public:
  // Throws LoadError naming the first missing or misshaped tensor.
  SegmentationModel(VariantSpec spec, const WeightStore& weights);

  const VariantSpec& spec() const { return spec_; }

  FeatureMaps extract_features(const Tensor& image, StageProfile* profile = nullptr) const;
  Tensor protonet_forward(const Tensor& p3) const;
  LevelPredictions head_forward(const Tensor& level_map) const;
  FrameResult infer(const Tensor& image, StageProfile* profile = nullptr) const;

 private:
  struct Conv {
    Tensor weight;
    Tensor bias;
  };
  struct Block {
    Conv first;
    Conv second;
  };
  struct Stage {
    Conv down;
    std::vector<Block> blocks;
  };

  Conv conv(const WeightStore& w, const std::string& name, const Shape& shape) const;
  attention::CCWeights attention(const WeightStore& w, const std::string& prefix,
                                 std::size_t channels) const;

  VariantSpec spec_;
  Conv stem0_, stem1_;
  std::array<Stage, kBackboneLevels> stages_;
  std::array<Conv, kBackboneLevels> lateral_;
  std::array<Conv, kBackboneLevels> smooth_;
  Conv down6_, down7_;
  Conv proto_conv_, proto_proj_;
  Conv head_conv_, head_cls_, head_box_, head_coef_;
  std::array<std::optional<attention::CCWeights>, kBackboneLevels> backbone_attention_;
  std::array<std::optional<attention::CCWeights>, kPyramidLevels> pyramid_attention_;
};

FrameResult infer_frame(const Tensor& image, const SegmentationModel& model);

// Runs frames with `workers` threads; results are in input order.
std::vector<FrameResult> infer_frames(const std::vector<Tensor>& images,
                                      const SegmentationModel& model, std::size_t workers);

}  // namespace ccseg::pipeline
