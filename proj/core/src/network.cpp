#include <chrono>
#include <cmath>

#include "ccseg/error.hpp"
#include "ccseg/pipeline.hpp"
#include "ccseg/rng.hpp"

namespace ccseg::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void add_conv(std::vector<ParameterInfo>& out, const std::string& name, std::size_t c_out,
              std::size_t c_in, std::size_t k) {
  out.push_back({name + ".weight", {c_out, c_in, k, k}});
  out.push_back({name + ".bias", {c_out}});
}

void add_attention(std::vector<ParameterInfo>& out, const std::string& prefix,
                   const VariantSpec& spec, std::size_t channels) {
  const auto cfg = spec.attention_config(channels);
  attention::zero_weights(cfg).for_each([&](const std::string& name, const Tensor& t) {
    out.push_back({prefix + name, t.shape()});
  });
}

}  // namespace

std::string backbone_attention_prefix(std::size_t level) {
  return "attn.backbone.c" + std::to_string(level + 3) + ".";
}

std::string pyramid_attention_prefix(std::size_t level) {
  return "attn.fpn.p" + std::to_string(level + 3) + ".";
}

std::vector<ParameterInfo> parameter_layout(const VariantSpec& spec) {
  spec.validate();
  std::vector<ParameterInfo> out;
  add_conv(out, "backbone.stem0", spec.stem_width, 3, 3);
  add_conv(out, "backbone.stem1", spec.backbone_widths[0], spec.stem_width, 3);
  std::size_t prev = spec.backbone_widths[0];
  for (std::size_t s = 0; s < kBackboneLevels; ++s) {
    const std::string stage = "backbone.c" + std::to_string(s + 3);
    const std::size_t w = spec.backbone_widths[s];
    add_conv(out, stage + ".down", w, prev, 3);
    for (std::size_t b = 0; b < spec.blocks_per_stage; ++b) {
      const std::string block = stage + ".block" + std::to_string(b);
      add_conv(out, block + ".conv0", w, w, 3);
      add_conv(out, block + ".conv1", w, w, 3);
    }
    prev = w;
  }
  const std::size_t f = spec.fpn_width;
  for (std::size_t s = 0; s < kBackboneLevels; ++s) {
    add_conv(out, "fpn.lateral" + std::to_string(s + 3), f, spec.backbone_widths[s], 1);
    add_conv(out, "fpn.smooth" + std::to_string(s + 3), f, f, 3);
  }
  add_conv(out, "fpn.down6", f, f, 3);
  add_conv(out, "fpn.down7", f, f, 3);
  add_conv(out, "protonet.conv0", f, f, 3);
  add_conv(out, "protonet.proj", spec.prototypes, f, 1);
  const std::size_t a = spec.anchors_per_position(0);
  add_conv(out, "head.conv", f, f, 3);
  add_conv(out, "head.cls", a * (spec.num_classes + 1), f, 1);
  add_conv(out, "head.box", a * 4, f, 1);
  add_conv(out, "head.coef", a * spec.prototypes, f, 1);
  for (std::size_t s = 0; s < kBackboneLevels; ++s) {
    add_attention(out, backbone_attention_prefix(s), spec, spec.backbone_widths[s]);
  }
  for (std::size_t l = 0; l < kPyramidLevels; ++l) {
    add_attention(out, pyramid_attention_prefix(l), spec, f);
  }
  return out;
}

WeightStore init_weights(const VariantSpec& spec, std::uint64_t seed) {
  WeightStore store;
  for (const auto& p : parameter_layout(spec)) {
    Rng rng(derive_seed(seed, fnv1a(p.name)));
    Tensor t(p.shape);
    const bool is_attention = p.name.starts_with("attn.");
    if (p.shape.size() == 4) {
      const double fan_in = static_cast<double>(p.shape[1] * p.shape[2] * p.shape[3]);
      double gain = std::sqrt(2.0 / fan_in);
      if (p.name.find(".conv1.") != std::string::npos) gain *= 0.5;  // residual branch
      if (p.name.starts_with("head.") && p.name != "head.conv.weight") gain *= 0.25;
      if (is_attention) gain *= 0.5;
      for (double& v : t.data()) v = gain * rng.normal();
    } else if (is_attention) {
      for (double& v : t.data()) v = 0.05 * rng.normal();
    }
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
    store.insert(p.name, std::move(t));
  }
  return store;
}

void suppress_detections(WeightStore& weights, const VariantSpec& spec) {
  const std::size_t classes = spec.num_classes + 1;
  const std::size_t a = spec.anchors_per_position(0);
  WeightStore out;
  for (const auto& [name, t] : weights.entries()) {
    Tensor copy = t;
    if (name == "head.cls.weight") copy = Tensor(t.shape());
    if (name == "head.cls.bias") {
      copy = Tensor(t.shape());
      for (std::size_t i = 0; i < a; ++i) copy[i * classes] = 60.0;
    }
    out.insert(name, std::move(copy));
  }
  weights = std::move(out);
}

void zero_attention(WeightStore& weights) {
  WeightStore out;
  for (const auto& [name, t] : weights.entries()) {
    const bool zero = name.starts_with("attn.") &&
                      (name.find(".value.") != std::string::npos ||
                       name.find(".fusion.") != std::string::npos);
    out.insert(name, zero ? Tensor(t.shape()) : t);
  }
  weights = std::move(out);
}

SegmentationModel::Conv SegmentationModel::conv(const WeightStore& w, const std::string& name,
                                                const Shape& shape) const {
  const Tensor& weight = w.get(name + ".weight");
  const Tensor& bias = w.get(name + ".bias");
  if (weight.shape() != shape) {
    throw LoadError("weights: tensor '" + name + ".weight' has shape " +
                    shape_string(weight.shape()) + ", expected " + shape_string(shape));
  }
  if (bias.shape() != Shape{shape[0]}) {
    throw LoadError("weights: tensor '" + name + ".bias' has shape " +
                    shape_string(bias.shape()) + ", expected [" + std::to_string(shape[0]) +
                    "]");
  }
  return {weight, bias};
}

attention::CCWeights SegmentationModel::attention(const WeightStore& w, const std::string& prefix,
                                                  std::size_t channels) const {
  const auto cfg = spec_.attention_config(channels);
  attention::CCWeights cc = attention::zero_weights(cfg);
  cc.for_each([&](const std::string& name, Tensor& t) {
    const Tensor& src = w.get(prefix + name);
    if (src.shape() != t.shape()) {
      throw LoadError("weights: tensor '" + prefix + name + "' has shape " +
                      shape_string(src.shape()) + ", expected " + shape_string(t.shape()));
    }
    t = src;
  });
  return cc;
}

SegmentationModel::SegmentationModel(VariantSpec spec, const WeightStore& w)
    : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t f = spec_.fpn_width;
  stem0_ = conv(w, "backbone.stem0", {spec_.stem_width, 3, 3, 3});
  stem1_ = conv(w, "backbone.stem1", {spec_.backbone_widths[0], spec_.stem_width, 3, 3});
  std::size_t prev = spec_.backbone_widths[0];
  for (std::size_t s = 0; s < kBackboneLevels; ++s) {
    const std::string stage = "backbone.c" + std::to_string(s + 3);
    const std::size_t c = spec_.backbone_widths[s];
    stages_[s].down = conv(w, stage + ".down", {c, prev, 3, 3});
    for (std::size_t b = 0; b < spec_.blocks_per_stage; ++b) {
      const std::string block = stage + ".block" + std::to_string(b);
      stages_[s].blocks.push_back(
          {conv(w, block + ".conv0", {c, c, 3, 3}), conv(w, block + ".conv1", {c, c, 3, 3})});
    }
    prev = c;
    lateral_[s] = conv(w, "fpn.lateral" + std::to_string(s + 3), {f, c, 1, 1});
    smooth_[s] = conv(w, "fpn.smooth" + std::to_string(s + 3), {f, f, 3, 3});
  }
  down6_ = conv(w, "fpn.down6", {f, f, 3, 3});
  down7_ = conv(w, "fpn.down7", {f, f, 3, 3});
  proto_conv_ = conv(w, "protonet.conv0", {f, f, 3, 3});
  proto_proj_ = conv(w, "protonet.proj", {spec_.prototypes, f, 1, 1});
  const std::size_t a = spec_.anchors_per_position(0);
  head_conv_ = conv(w, "head.conv", {f, f, 3, 3});
  head_cls_ = conv(w, "head.cls", {a * (spec_.num_classes + 1), f, 1, 1});
  head_box_ = conv(w, "head.box", {a * 4, f, 1, 1});
  head_coef_ = conv(w, "head.coef", {a * spec_.prototypes, f, 1, 1});

  if (attends_backbone(spec_.insertion)) {
    for (std::size_t s = 0; s < kBackboneLevels; ++s) {
      backbone_attention_[s] =
          attention(w, backbone_attention_prefix(s), spec_.backbone_widths[s]);
    }
  }
  if (attends_fpn(spec_.insertion)) {
    for (std::size_t l = 0; l < kPyramidLevels; ++l) {
      pyramid_attention_[l] = attention(w, pyramid_attention_prefix(l), f);
    }
  }
}

namespace {

template <typename C>
Tensor apply(const C& c, const Tensor& x, std::size_t stride, std::size_t pad) {
  return conv2d(x, c.weight, c.bias.data(), stride, pad);
}

}  // namespace

FeatureMaps SegmentationModel::extract_features(const Tensor& image,
                                                StageProfile* profile) const {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ContractViolation("extract_features: expected [3,H,W] image, got " +
                            shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h == 0 || w == 0 || h % 32 != 0 || w % 32 != 0) {
    throw ConfigError("extract_features: image extents " + std::to_string(h) + "x" +
                      std::to_string(w) + " must be positive multiples of 32");
  }
  double attention_time = 0.0;
  auto attend = [&](const std::optional<attention::CCWeights>& cc, Tensor& x) {
    if (!cc) return;
    const auto t0 = Clock::now();
    x = attention::rcca_forward(x, *cc, spec_.attention_config(x.dim(0)));
    attention_time += seconds_since(t0);
  };

  const auto t_backbone = Clock::now();
  FeatureMaps maps;
  Tensor x = apply(stem0_, image, 2, 1);
  activation_inplace(x, Activation::kRelu);
  x = apply(stem1_, x, 2, 1);
  activation_inplace(x, Activation::kRelu);
  for (std::size_t s = 0; s < kBackboneLevels; ++s) {
    x = apply(stages_[s].down, x, 2, 1);
    activation_inplace(x, Activation::kRelu);
    for (const Block& b : stages_[s].blocks) {
      Tensor y = apply(b.first, x, 1, 1);
      activation_inplace(y, Activation::kRelu);
      y = apply(b.second, y, 1, 1);
      y += x;
      activation_inplace(y, Activation::kRelu);
      x = std::move(y);
    }
    attend(backbone_attention_[s], x);
    maps.backbone[s] = x;
  }
  const double backbone_total = seconds_since(t_backbone);
  const double backbone_attention = attention_time;

  const auto t_fpn = Clock::now();
  std::array<Tensor, kBackboneLevels> lat;
  for (std::size_t s = 0; s < kBackboneLevels; ++s) lat[s] = apply(lateral_[s], maps.backbone[s], 1, 0);
  for (std::size_t s = kBackboneLevels - 1; s-- > 0;) {
    lat[s] += bilinear_resize(lat[s + 1], lat[s].dim(1), lat[s].dim(2));
  }
  for (std::size_t s = 0; s < kBackboneLevels; ++s) maps.pyramid[s] = apply(smooth_[s], lat[s], 1, 1);
  maps.pyramid[3] = apply(down6_, maps.pyramid[2], 2, 1);
  maps.pyramid[4] = apply(down7_, activation(maps.pyramid[3], Activation::kRelu), 2, 1);
  for (std::size_t l = 0; l < kPyramidLevels; ++l) attend(pyramid_attention_[l], maps.pyramid[l]);
  const double fpn_total = seconds_since(t_fpn);

  if (profile) {
    profile->backbone += backbone_total - backbone_attention;
    profile->fpn += fpn_total - (attention_time - backbone_attention);
    profile->attention += attention_time;
  }
  return maps;
}

Tensor SegmentationModel::protonet_forward(const Tensor& p3) const {
  if (p3.rank() != 3 || p3.dim(0) != spec_.fpn_width) {
    throw ContractViolation("protonet_forward: expected [" + std::to_string(spec_.fpn_width) +
                            ",H,W], got " + shape_string(p3.shape()));
  }
  Tensor x = apply(proto_conv_, p3, 1, 1);
  activation_inplace(x, Activation::kRelu);
  x = bilinear_resize(x, p3.dim(1) * 2, p3.dim(2) * 2);
  x = apply(proto_proj_, x, 1, 0);
  activation_inplace(x, Activation::kRelu);
  return x;
}

LevelPredictions SegmentationModel::head_forward(const Tensor& level_map) const {
  if (level_map.rank() != 3 || level_map.dim(0) != spec_.fpn_width) {
    throw ContractViolation("head_forward: expected [" + std::to_string(spec_.fpn_width) +
                            ",H,W], got " + shape_string(level_map.shape()));
  }
  Tensor x = apply(head_conv_, level_map, 1, 1);
  activation_inplace(x, Activation::kRelu);
  const Tensor cls = apply(head_cls_, x, 1, 0);
  const Tensor box = apply(head_box_, x, 1, 0);
  Tensor coef = apply(head_coef_, x, 1, 0);
  activation_inplace(coef, Activation::kTanh);

  LevelPredictions p;
  p.height = x.dim(1);
  p.width = x.dim(2);
  p.anchors = spec_.anchors_per_position(0);
  p.classes = spec_.num_classes + 1;
  const std::size_t n = p.height * p.width, k = spec_.prototypes;
  p.class_logits.resize(p.slots() * p.classes);
  p.regressions.resize(p.slots() * 4);
  p.coefficients.resize(p.slots() * k);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t a = 0; a < p.anchors; ++a) {
      const std::size_t slot = u * p.anchors + a;
      for (std::size_t c = 0; c < p.classes; ++c) {
        p.class_logits[slot * p.classes + c] = cls[(a * p.classes + c) * n + u];
      }
      for (std::size_t c = 0; c < 4; ++c) p.regressions[slot * 4 + c] = box[(a * 4 + c) * n + u];
      for (std::size_t c = 0; c < k; ++c) p.coefficients[slot * k + c] = coef[(a * k + c) * n + u];
    }
  }
  return p;
}

}  // namespace ccseg::pipeline
