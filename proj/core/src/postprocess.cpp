#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccseg/error.hpp"
#include "ccseg/pipeline.hpp"

namespace ccseg::pipeline {

namespace {

// exp(dw) is capped so a wild regression cannot overflow.
constexpr double kMaxLogScale = 4.135166556742356;  // log(1000 / 16)

}  // namespace

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box clip_box(const Box& b, double image_w, double image_h) {
  return {std::clamp(b.x0, 0.0, image_w), std::clamp(b.y0, 0.0, image_h),
          std::clamp(b.x1, 0.0, image_w), std::clamp(b.y1, 0.0, image_h)};
}

std::vector<Box> generate_anchors(std::size_t stride, std::size_t image_h, std::size_t image_w,
                                  const std::vector<double>& scales,
                                  const std::vector<double>& ratios) {
  if (scales.empty()) throw ConfigError("generate_anchors: no anchor scales");
  if (ratios.empty()) throw ConfigError("generate_anchors: no anchor ratios");
  if (stride == 0) throw ConfigError("generate_anchors: stride must be positive");
  const std::size_t gh = (image_h + stride - 1) / stride, gw = (image_w + stride - 1) / stride;
  const auto fw = static_cast<double>(image_w), fh = static_cast<double>(image_h);
  std::vector<Box> anchors;
  anchors.reserve(gh * gw * scales.size() * ratios.size());
  for (std::size_t i = 0; i < gh; ++i) {
    for (std::size_t j = 0; j < gw; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * static_cast<double>(stride);
      const double cy = (static_cast<double>(i) + 0.5) * static_cast<double>(stride);
      for (double s : scales) {
        for (double r : ratios) {
          if (!(s > 0.0) || !(r > 0.0)) {
            throw ConfigError("generate_anchors: scales and ratios must be positive");
          }
          const double w = s * std::sqrt(r), h = s / std::sqrt(r);
          anchors.push_back(clip_box({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}, fw, fh));
        }
      }
    }
  }
  return anchors;
}

Box decode_box(const Box& anchor, std::span<const double, 4> r) {
  const double aw = anchor.width(), ah = anchor.height();
  const double cx = anchor.x0 + aw / 2 + r[0] * aw;
  const double cy = anchor.y0 + ah / 2 + r[1] * ah;
  const double w = aw * std::exp(std::min(r[2], kMaxLogScale));
  const double h = ah * std::exp(std::min(r[3], kMaxLogScale));
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

std::vector<Box> decode_boxes(const std::vector<Box>& anchors,
                              const std::vector<double>& regressions) {
  if (regressions.size() != anchors.size() * 4) {
    throw ContractViolation("decode_boxes: " + std::to_string(regressions.size()) +
                            " regression values for " + std::to_string(anchors.size()) +
                            " anchors");
  }
  std::vector<Box> boxes(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    boxes[i] = decode_box(anchors[i], std::span<const double, 4>(regressions.data() + 4 * i, 4));
  }
  return boxes;
}

std::vector<Detection> fast_nms(std::vector<Detection> detections, double iou_threshold,
                                std::size_t top_k) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  if (detections.size() > top_k) detections.resize(top_k);
  const std::size_t n = detections.size();
  std::vector<Detection> kept;
  for (std::size_t j = 0; j < n; ++j) {
    // column max of the upper-triangular IoU matrix
    double worst = 0.0;
    for (std::size_t i = 0; i < j; ++i) worst = std::max(worst, iou(detections[i].box, detections[j].box));
    if (worst <= iou_threshold) kept.push_back(detections[j]);
  }
  return kept;
}

Tensor mask_logits(const Tensor& prototypes, std::span<const double> coefficients) {
  if (prototypes.rank() != 3 || prototypes.dim(0) != coefficients.size()) {
    throw ContractViolation("mask_logits: " + std::to_string(coefficients.size()) +
                            " coefficients for prototypes " + shape_string(prototypes.shape()));
  }
  const std::size_t h = prototypes.dim(1), w = prototypes.dim(2), n = h * w;
  Tensor out({h, w});
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    const double c = coefficients[j];
    const double* p = prototypes.data().data() + j * n;
    for (std::size_t u = 0; u < n; ++u) out[u] += c * p[u];
  }
  return out;
}

Tensor mask_probabilities(const Tensor& prototypes, std::span<const double> coefficients) {
  Tensor m = mask_logits(prototypes, coefficients);
  activation_inplace(m, Activation::kSigmoid);
  return m;
}

std::vector<BinaryMask> assemble_masks(const Tensor& prototypes,
                                       const std::vector<Detection>& detections,
                                       std::size_t image_h, std::size_t image_w) {
  std::vector<BinaryMask> masks;
  masks.reserve(detections.size());
  if (prototypes.rank() != 3) {
    throw ContractViolation("assemble_masks: prototypes must be [k,h,w]");
  }
  const std::size_t ph = prototypes.dim(1), pw = prototypes.dim(2);
  for (const Detection& d : detections) {
    const Tensor logits = mask_logits(prototypes, d.coefficients);
    BinaryMask m(image_w, image_h);
    // pixel centers inside the box
    const auto x_lo = static_cast<std::size_t>(std::max(0.0, std::ceil(d.box.x0 - 0.5)));
    const auto y_lo = static_cast<std::size_t>(std::max(0.0, std::ceil(d.box.y0 - 0.5)));
    const double x_end = std::min(static_cast<double>(image_w), std::floor(d.box.x1 - 0.5) + 1.0);
    const double y_end = std::min(static_cast<double>(image_h), std::floor(d.box.y1 - 0.5) + 1.0);
    for (std::size_t y = y_lo; static_cast<double>(y) < y_end; ++y) {
      const std::size_t py = y * ph / image_h;
      for (std::size_t x = x_lo; static_cast<double>(x) < x_end; ++x) {
        const std::size_t px = x * pw / image_w;
        // sigmoid(l) > 0.5 <=> l > 0
        m.at(x, y) = logits[py * pw + px] > 0.0 ? 1 : 0;
      }
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

FrameResult paint_instances(const std::vector<Detection>& detections,
                            const std::vector<BinaryMask>& masks, std::size_t image_h,
                            std::size_t image_w) {
  if (detections.size() != masks.size()) {
    throw ContractViolation("paint_instances: detection and mask counts differ");
  }
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  FrameResult result;
  result.labels = InstanceLabelMap(image_w, image_h);
  for (std::size_t idx : order) {
    if (result.detections.size() == 255) break;  // 8-bit label maps
    const BinaryMask& m = masks[idx];
    if (m.width != image_w || m.height != image_h) {
      throw ContractViolation("paint_instances: mask extents differ from the image");
    }
    const auto id = static_cast<std::uint16_t>(result.detections.size() + 1);
    std::size_t painted = 0;
    for (std::size_t i = 0; i < m.pixels.size(); ++i) {
      if (m.pixels[i] && result.labels.labels[i] == 0) {
        result.labels.labels[i] = id;
        ++painted;
      }
    }
    if (painted > 0) result.detections.push_back(detections[idx]);
  }
  return result;
}

}  // namespace ccseg::pipeline
