#include "ccseg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "ccseg/error.hpp"

namespace ccseg::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string variant_name(Insertion insertion) {
  switch (insertion) {
    case Insertion::kNone:
      return "Base YOLACT++";
    case Insertion::kBackbone:
      return "CCAM-Backbone";
    case Insertion::kFpn:
      return "CCAM-FPN";
    case Insertion::kBoth:
      return "CCAM-Full";
  }
  return "?";
}

Insertion parse_insertion(const std::string& text) {
  const std::string t = lower(text);
  if (t == "none" || t == "base" || t == "base yolact++") return Insertion::kNone;
  if (t == "backbone" || t == "ccam-backbone") return Insertion::kBackbone;
  if (t == "fpn" || t == "ccam-fpn") return Insertion::kFpn;
  if (t == "both" || t == "full" || t == "ccam-full") return Insertion::kBoth;
  throw ConfigError("unknown variant '" + text +
                    "' (expected none|backbone|fpn|both or a variant name)");
}

std::size_t VariantSpec::anchors_per_position(std::size_t level) const {
  return anchor_scales.at(level).size() * anchor_ratios.size();
}

attention::AttentionConfig VariantSpec::attention_config(std::size_t channels) const {
  return {channels, attention_reduction, attention_recurrence, true};
}

void VariantSpec::validate() const {
  if (stem_width == 0 || fpn_width == 0 || prototypes == 0 || num_classes == 0) {
    throw ConfigError("variant: channel counts must be positive");
  }
  for (std::size_t w : backbone_widths) {
    if (w == 0) throw ConfigError("variant: backbone widths must be positive");
  }
  if (anchor_ratios.empty()) throw ConfigError("variant: no anchor ratios");
  for (const auto& s : anchor_scales) {
    if (s.empty()) throw ConfigError("variant: empty anchor scales for a pyramid level");
    if (s.size() != anchor_scales[0].size()) {
      throw ConfigError("variant: the shared head needs the same anchor count on every level");
    }
  }
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw ConfigError("variant: nms_iou outside [0,1]");
  if (!(display_confidence >= 0.0 && display_confidence <= 1.0) ||
      !(pre_nms_confidence >= 0.0 && pre_nms_confidence <= 1.0)) {
    throw ConfigError("variant: confidence thresholds outside [0,1]");
  }
  if (top_k == 0) throw ConfigError("variant: top_k must be positive");
  if (attention_reduction == 0 || attention_recurrence == 0) {
    throw ConfigError("variant: attention reduction and recurrence must be positive");
  }
}

StageProfile& StageProfile::operator+=(const StageProfile& o) {
  backbone += o.backbone;
  attention += o.attention;
  fpn += o.fpn;
  heads += o.heads;
  nms += o.nms;
  assembly += o.assembly;
  return *this;
}

FrameResult SegmentationModel::infer(const Tensor& image, StageProfile* profile) const {
  const FeatureMaps maps = extract_features(image, profile);
  const std::size_t img_h = image.dim(1), img_w = image.dim(2);

  const auto t_heads = Clock::now();
  const Tensor prototypes = protonet_forward(maps.pyramid[0]);
  std::vector<Detection> candidates;
  const std::size_t k = spec_.prototypes;
  for (std::size_t l = 0; l < kPyramidLevels; ++l) {
    const LevelPredictions p = head_forward(maps.pyramid[l]);
    const auto anchors = generate_anchors(pyramid_stride(l), img_h, img_w, spec_.anchor_scales[l],
                                          spec_.anchor_ratios);
    // A level whose grid is coarser than the map (never at multiples of 32) would misalign.
    if (anchors.size() != p.slots()) {
      throw ContractViolation("infer: anchor count " + std::to_string(anchors.size()) +
                              " does not match head slots " + std::to_string(p.slots()));
    }
    for (std::size_t s = 0; s < p.slots(); ++s) {
      const double* logits = p.class_logits.data() + s * p.classes;
      const double m = *std::max_element(logits, logits + p.classes);
      double sum = 0.0;
      for (std::size_t c = 0; c < p.classes; ++c) sum += std::exp(logits[c] - m);
      double best = 0.0;
      for (std::size_t c = 1; c < p.classes; ++c) best = std::max(best, std::exp(logits[c] - m) / sum);
      if (best <= spec_.pre_nms_confidence) continue;
      const Box box = clip_box(
          decode_box(anchors[s], std::span<const double, 4>(p.regressions.data() + 4 * s, 4)),
          static_cast<double>(img_w), static_cast<double>(img_h));
      if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) continue;
      candidates.push_back({best, box,
                            std::vector<double>(p.coefficients.begin() + s * k,
                                                p.coefficients.begin() + (s + 1) * k)});
    }
  }
  if (profile) profile->heads += seconds_since(t_heads);

  const auto t_nms = Clock::now();
  std::vector<Detection> kept = fast_nms(std::move(candidates), spec_.nms_iou, spec_.top_k);
  std::erase_if(kept, [&](const Detection& d) { return d.confidence < spec_.display_confidence; });
  if (profile) profile->nms += seconds_since(t_nms);

  const auto t_assembly = Clock::now();
  const auto masks = assemble_masks(prototypes, kept, img_h, img_w);
  FrameResult result = paint_instances(kept, masks, img_h, img_w);
  if (profile) profile->assembly += seconds_since(t_assembly);
  return result;
}

FrameResult infer_frame(const Tensor& image, const SegmentationModel& model) {
  return model.infer(image);
}

std::vector<FrameResult> infer_frames(const std::vector<Tensor>& images,
                                      const SegmentationModel& model, std::size_t workers) {
  std::vector<FrameResult> results(images.size());
  workers = std::max<std::size_t>(1, std::min(workers, images.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < images.size(); ++i) results[i] = model.infer(images[i]);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < images.size(); i += workers) {
          results[i] = model.infer(images[i]);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace ccseg::pipeline
