#include <algorithm>
#include <cmath>

#include "ccseg/datakit.hpp"
#include "ccseg/error.hpp"

namespace ccseg::data {

namespace {

void check_range(double lo, double hi, const char* what) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError(std::string("augmentation: empty range for ") + what);
  }
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string("augmentation: probability out of [0,1] for ") + what);
  }
}

std::size_t scaled_extent(std::size_t n, double s) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(n) * s)));
}

std::size_t nearest_source(std::size_t dst, std::size_t dst_n, std::size_t src_n) {
  const double f = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_n) /
                   static_cast<double>(dst_n);
  return std::min(src_n - 1, static_cast<std::size_t>(f));
}

InstanceLabelMap resize_labels(const InstanceLabelMap& in, std::size_t w, std::size_t h) {
  if (w == in.width && h == in.height) return in;
  InstanceLabelMap out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = nearest_source(y, h, in.height);
    for (std::size_t x = 0; x < w; ++x) out.at(x, y) = in.at(nearest_source(x, w, in.width), sy);
  }
  return out;
}

RgbImage resize_image(const RgbImage& in, std::size_t w, std::size_t h) {
  if (w == in.width && h == in.height) return in;
  Tensor t({3, in.height, in.width});
  for (std::size_t y = 0; y < in.height; ++y) {
    for (std::size_t x = 0; x < in.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = in.pixel(x, y)[c];
    }
  }
  const Tensor r = bilinear_resize(t, h, w);
  RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out.pixel(x, y)[c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(r.at(c, y, x)), 0L, 255L));
      }
    }
  }
  return out;
}

bool crop_hits_instance(const InstanceLabelMap& scaled, const CropRect& c) {
  for (std::size_t y = c.y; y < c.y + c.height; ++y) {
    for (std::size_t x = c.x; x < c.x + c.width; ++x) {
      if (scaled.at(x, y) != 0) return true;
    }
  }
  return false;
}

// RGB in [0,1] <-> HSV with hue in degrees.
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / d + 2.0);
  } else {
    h = 60.0 * ((r - g) / d + 4.0);
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp)) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

void photometric(RgbImage& img, const AugmentDraw& d) {
  const bool color = d.saturation != 1.0 || d.hue_degrees != 0.0;
  if (d.brightness == 0.0 && d.contrast == 1.0 && !color) return;
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    std::uint8_t* p = img.rgb.data() + i * 3;
    double c[3];
    for (int k = 0; k < 3; ++k) {
      c[k] = std::clamp((p[k] / 255.0 + d.brightness) * d.contrast, 0.0, 1.0);
    }
    if (color) {
      double h, s, v;
      rgb_to_hsv(c[0], c[1], c[2], h, s, v);
      hsv_to_rgb(h + d.hue_degrees, std::clamp(s * d.saturation, 0.0, 1.0), v, c[0], c[1], c[2]);
    }
    for (int k = 0; k < 3; ++k) {
      p[k] = static_cast<std::uint8_t>(std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0));
    }
  }
}

}  // namespace

void AugmentationConfig::validate() const {
  if (!(brightness >= 0.0)) throw ConfigError("augmentation: brightness must be >= 0");
  check_range(contrast_lo, contrast_hi, "contrast");
  check_range(saturation_lo, saturation_hi, "saturation");
  if (!(hue_degrees >= 0.0 && hue_degrees <= 180.0)) {
    throw ConfigError("augmentation: hue must lie in [0,180] degrees");
  }
  check_range(scale_lo, scale_hi, "scale");
  if (!(scale_lo > 0.0)) throw ConfigError("augmentation: scale must be positive");
  if (!(contrast_lo >= 0.0 && saturation_lo >= 0.0)) {
    throw ConfigError("augmentation: contrast and saturation must be >= 0");
  }
  if (!(min_crop_fraction > 0.0 && min_crop_fraction <= 1.0)) {
    throw ConfigError("augmentation: min_crop_fraction must lie in (0,1]");
  }
  check_probability(photometric_probability, "photometric");
  check_probability(crop_probability, "crop");
  check_probability(mirror_probability, "mirror");
  if (crop_attempts == 0) throw ConfigError("augmentation: crop_attempts must be >= 1");
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.brightness = 0.0;
  c.contrast_lo = c.contrast_hi = 1.0;
  c.saturation_lo = c.saturation_hi = 1.0;
  c.hue_degrees = 0.0;
  c.photometric_probability = 0.0;
  c.scale_lo = c.scale_hi = 1.0;
  c.crop_probability = 0.0;
  c.mirror_probability = 0.0;
  return c;
}

AugmentDraw sample_augmentation(const AugmentationConfig& cfg, const InstanceLabelMap& labels,
                                Rng& rng) {
  cfg.validate();
  AugmentDraw d;
  if (rng.bernoulli(cfg.photometric_probability)) {
    d.brightness = rng.uniform(-cfg.brightness, cfg.brightness);
    d.contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
    d.saturation = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
    d.hue_degrees = rng.uniform(-cfg.hue_degrees, cfg.hue_degrees);
  }
  d.scale = cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : rng.uniform(cfg.scale_lo, cfg.scale_hi);
  if (d.scale < 1.0 && !labels.is_background_only()) {
    // Nearest-neighbour downsampling can skip thin instances entirely.
    const auto ids = labels.instance_ids();
    auto keeps_ids = [&](double scale) {
      return resize_labels(labels, scaled_extent(labels.width, scale),
                           scaled_extent(labels.height, scale))
                 .instance_ids() == ids;
    };
    std::size_t attempt = 1;
    while (!keeps_ids(d.scale) && attempt < cfg.crop_attempts) {
      d.scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
      ++attempt;
    }
    if (!keeps_ids(d.scale)) d.scale = cfg.scale_hi;
  }

  if (labels.width > 0 && labels.height > 0 && rng.bernoulli(cfg.crop_probability)) {
    const std::size_t sw = scaled_extent(labels.width, d.scale);
    const std::size_t sh = scaled_extent(labels.height, d.scale);
    const InstanceLabelMap scaled = resize_labels(labels, sw, sh);
    const bool has_instances = !scaled.is_background_only();
    const auto min_w = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.min_crop_fraction * static_cast<double>(sw))));
    const auto min_h = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.min_crop_fraction * static_cast<double>(sh))));
    CropRect c;
    bool found = false;
    for (std::size_t attempt = 0; attempt < cfg.crop_attempts && !found; ++attempt) {
      c.width = min_w + rng.uniform_index(sw - min_w + 1);
      c.height = min_h + rng.uniform_index(sh - min_h + 1);
      c.x = rng.uniform_index(sw - c.width + 1);
      c.y = rng.uniform_index(sh - c.height + 1);
      found = !has_instances || crop_hits_instance(scaled, c);
    }
    if (!found) {
      // Minimal crop centred on the instance pixel closest to the image centre.
      std::size_t best_x = 0, best_y = 0;
      double best = INFINITY;
      for (std::size_t y = 0; y < sh; ++y) {
        for (std::size_t x = 0; x < sw; ++x) {
          if (scaled.at(x, y) == 0) continue;
          const double dx = x + 0.5 - sw / 2.0, dy = y + 0.5 - sh / 2.0;
          if (dx * dx + dy * dy < best) {
            best = dx * dx + dy * dy;
            best_x = x;
            best_y = y;
          }
        }
      }
      c.width = min_w;
      c.height = min_h;
      c.x = std::min(sw - min_w, best_x >= min_w / 2 ? best_x - min_w / 2 : 0);
      c.y = std::min(sh - min_h, best_y >= min_h / 2 ? best_y - min_h / 2 : 0);
    }
    d.crop = c;
  }
  d.mirror = rng.bernoulli(cfg.mirror_probability);
  return d;
}

Augmented augment(const RgbImage& image, const InstanceLabelMap& labels, const AugmentDraw& d) {
  if (image.width != labels.width || image.height != labels.height) {
    throw ContractViolation("augment: image and label map extents differ");
  }
  if (!(d.scale > 0.0)) throw ContractViolation("augment: scale must be positive");
  Augmented out{image, labels};
  photometric(out.image, d);

  if (d.scale != 1.0 && image.width > 0) {
    const std::size_t w = scaled_extent(image.width, d.scale);
    const std::size_t h = scaled_extent(image.height, d.scale);
    out.image = resize_image(out.image, w, h);
    out.labels = resize_labels(out.labels, w, h);
  }

  if (d.crop) {
    const CropRect& c = *d.crop;
    if (c.width == 0 || c.height == 0 || c.x + c.width > out.image.width ||
        c.y + c.height > out.image.height) {
      throw ContractViolation("augment: crop rectangle outside the scaled image");
    }
    RgbImage img(c.width, c.height);
    InstanceLabelMap lab(c.width, c.height);
    for (std::size_t y = 0; y < c.height; ++y) {
      for (std::size_t x = 0; x < c.width; ++x) {
        std::copy_n(out.image.pixel(c.x + x, c.y + y), 3, img.pixel(x, y));
        lab.at(x, y) = out.labels.at(c.x + x, c.y + y);
      }
    }
    out.image = std::move(img);
    out.labels = std::move(lab);
  }

  if (d.mirror) {
    const std::size_t w = out.image.width;
    for (std::size_t y = 0; y < out.image.height; ++y) {
      for (std::size_t x = 0; x < w / 2; ++x) {
        std::swap_ranges(out.image.pixel(x, y), out.image.pixel(x, y) + 3,
                         out.image.pixel(w - 1 - x, y));
        std::swap(out.labels.at(x, y), out.labels.at(w - 1 - x, y));
      }
    }
  }
  return out;
}

}  // namespace ccseg::data
