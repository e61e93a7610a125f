#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ccseg/datakit.hpp"
#include "ccseg/error.hpp"

namespace ccseg::data {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kBackgroundPool = 64;

struct Vec2 {
  double x, y;
};

struct Segment {
  Vec2 a, b;
  double ra, rb;  // radius at a and at b
};

struct Instrument {
  ShapeFamily family;
  std::vector<Segment> parts;
  std::array<double, 3> color;
  double alpha;  // 1 = opaque
};

struct StageStyle {
  std::array<double, kShapeFamilies> family_weights;
  std::uint64_t pool_offset;  // background seed pool
  bool heavy_nuisance;
};

StageStyle style_for(Stage s) {
  switch (s) {
    case Stage::kTrain:
    case Stage::kStage1:
      return {{0.45, 0.45, 0.05, 0.05}, 0, false};
    case Stage::kStage2:
      return {{0.45, 0.45, 0.05, 0.05}, kBackgroundPool, false};
    case Stage::kStage3:
      return {{0.1, 0.1, 0.4, 0.4}, 2 * kBackgroundPool, true};
  }
  return {};
}

std::uint64_t stage_salt(Stage s) { return static_cast<std::uint64_t>(s) + 1; }

ShapeFamily draw_family(const StageStyle& st, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < kShapeFamilies; ++i) {
    if (u < st.family_weights[i]) return static_cast<ShapeFamily>(i);
    u -= st.family_weights[i];
  }
  return static_cast<ShapeFamily>(kShapeFamilies - 1);
}

struct Background {
  std::array<double, 3> base;
  std::array<double, 3> amp;
  std::array<double, 4> freq;
  std::array<double, 4> phase;
};

Background draw_background(std::uint64_t pool_id, bool shifted) {
  Rng rng(derive_seed(0x7e571e5ULL, pool_id));
  Background bg;
  if (shifted) {
    // paler, yellower tissue
    bg.base = {rng.uniform(170, 210), rng.uniform(130, 170), rng.uniform(90, 120)};
  } else {
    bg.base = {rng.uniform(140, 190), rng.uniform(50, 85), rng.uniform(45, 75)};
  }
  for (auto& a : bg.amp) a = rng.uniform(8, 22);
  for (auto& f : bg.freq) f = rng.uniform(0.02, shifted ? 0.15 : 0.08);
  for (auto& p : bg.phase) p = rng.uniform(0, 2 * std::numbers::pi);
  return bg;
}

Vec2 border_point(std::size_t side, double t, double w, double h) {
  switch (side) {
    case 0:
      return {t * w, -4.0};
    case 1:
      return {w + 4.0, t * h};
    case 2:
      return {t * w, h + 4.0};
    default:
      return {-4.0, t * h};
  }
}

Instrument draw_instrument(ShapeFamily family, bool heavy, double w, double h, Rng& rng) {
  const std::size_t side = rng.uniform_index(4);
  const Vec2 p0 = border_point(side, rng.uniform(0.1, 0.9), w, h);
  const Vec2 target{rng.uniform(0.3, 0.7) * w, rng.uniform(0.3, 0.7) * h};
  const double dx = target.x - p0.x, dy = target.y - p0.y;
  const double norm = std::hypot(dx, dy);
  const double len = rng.uniform(0.4, 0.75) * std::min(w, h);
  const Vec2 dir{dx / norm, dy / norm};
  const Vec2 p1{p0.x + dir.x * len, p0.y + dir.y * len};
  const double r = rng.uniform(0.025, 0.05) * std::min(w, h);

  Instrument ins;
  ins.family = family;
  const double g = rng.uniform(140, 200);
  ins.color = {g, g + rng.uniform(-6, 6), g + rng.uniform(0, 12)};
  ins.alpha = heavy && rng.bernoulli(0.3) ? rng.uniform(0.2, 0.35) : 1.0;

  switch (family) {
    case ShapeFamily::kStraight:
      ins.parts.push_back({p0, p1, r, r});
      break;
    case ShapeFamily::kGrasper: {
      ins.parts.push_back({p0, p1, r, r});
      const double spread = rng.uniform(0.25, 0.6);
      for (double s : {-1.0, 1.0}) {
        const double ang = std::atan2(dir.y, dir.x) + s * spread;
        const Vec2 tip{p1.x + std::cos(ang) * 3.0 * r, p1.y + std::sin(ang) * 3.0 * r};
        ins.parts.push_back({p1, tip, 0.55 * r, 0.35 * r});
      }
      break;
    }
    case ShapeFamily::kTapered:
      ins.parts.push_back({p0, p1, 1.4 * r, 0.4 * r});
      break;
    case ShapeFamily::kCurved: {
      const double bend = rng.uniform(-0.35, 0.35) * len;
      const Vec2 ctrl{(p0.x + p1.x) / 2 - dir.y * bend, (p0.y + p1.y) / 2 + dir.x * bend};
      constexpr int kPieces = 8;
      Vec2 prev = p0;
      for (int i = 1; i <= kPieces; ++i) {
        const double t = static_cast<double>(i) / kPieces;
        const double u = 1 - t;
        const Vec2 q{u * u * p0.x + 2 * u * t * ctrl.x + t * t * p1.x,
                     u * u * p0.y + 2 * u * t * ctrl.y + t * t * p1.y};
        ins.parts.push_back({prev, q, 0.8 * r, 0.8 * r});
        prev = q;
      }
      break;
    }
  }
  return ins;
}

// Relative depth in [0,1] (0 on the axis) or negative when outside.
double capsule_depth(const Segment& s, double px, double py) {
  const double vx = s.b.x - s.a.x, vy = s.b.y - s.a.y;
  const double ll = vx * vx + vy * vy;
  double t = ll > 0 ? ((px - s.a.x) * vx + (py - s.a.y) * vy) / ll : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = s.a.x + t * vx, cy = s.a.y + t * vy;
  const double r = s.ra + t * (s.rb - s.ra);
  const double d = std::hypot(px - cx, py - cy);
  return d <= r ? d / r : -1.0;
}

}  // namespace

SynthFrame synth_frame(const SynthOptions& o, std::size_t index) {
  if (o.width == 0 || o.height == 0) throw ContractViolation("synth: extents must be positive");
  if (o.max_instruments > 255) throw ContractViolation("synth: at most 255 instruments");
  const StageStyle st = style_for(o.stage);
  Rng rng(derive_seed(derive_seed(o.seed, stage_salt(o.stage)), index));
  const double w = static_cast<double>(o.width), h = static_cast<double>(o.height);

  const Background bg = draw_background(st.pool_offset + rng.uniform_index(kBackgroundPool),
                                        st.heavy_nuisance);
  std::vector<std::array<double, 3>> px(o.width * o.height);
  for (std::size_t y = 0; y < o.height; ++y) {
    for (std::size_t x = 0; x < o.width; ++x) {
      const double t0 = std::sin(bg.freq[0] * x + bg.phase[0]) * std::cos(bg.freq[1] * y + bg.phase[1]);
      const double t1 = std::sin(bg.freq[2] * (x + y) + bg.phase[2]) +
                        std::cos(bg.freq[3] * (x - y) + bg.phase[3]);
      for (int c = 0; c < 3; ++c) px[y * o.width + x][c] = bg.base[c] + bg.amp[c] * (t0 + 0.5 * t1);
    }
  }

  const std::size_t k = rng.uniform_index(o.max_instruments + 1);
  std::vector<Instrument> tools;
  for (std::size_t i = 0; i < k; ++i) {
    tools.push_back(draw_instrument(draw_family(st, rng), st.heavy_nuisance, w, h, rng));
  }

  InstanceLabelMap labels(o.width, o.height);
  for (std::size_t i = 0; i < tools.size(); ++i) {
    const Instrument& ins = tools[i];
    for (std::size_t y = 0; y < o.height; ++y) {
      for (std::size_t x = 0; x < o.width; ++x) {
        double depth = -1.0;
        for (const auto& s : ins.parts) {
          const double d = capsule_depth(s, x + 0.5, y + 0.5);
          if (d >= 0 && (depth < 0 || d < depth)) depth = d;
        }
        if (depth < 0) continue;
        const double shade = 1.0 - 0.35 * depth * depth;
        auto& p = px[y * o.width + x];
        for (int c = 0; c < 3; ++c) p[c] = (1 - ins.alpha) * p[c] + ins.alpha * ins.color[c] * shade;
        labels.at(x, y) = static_cast<std::uint16_t>(i + 1);
      }
    }
  }

  if (st.heavy_nuisance) {
    const std::size_t blobs = 1 + rng.uniform_index(3);
    for (std::size_t b = 0; b < blobs; ++b) {
      const double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
      const double rx = rng.uniform(0.03, 0.12) * w, ry = rng.uniform(0.03, 0.12) * h;
      for (std::size_t y = 0; y < o.height; ++y) {
        for (std::size_t x = 0; x < o.width; ++x) {
          const double ex = (x + 0.5 - cx) / rx, ey = (y + 0.5 - cy) / ry;
          const double q = ex * ex + ey * ey;
          if (q >= 1.0) continue;
          const double a = 0.9 * (1.0 - q);
          for (auto& c : px[y * o.width + x]) c = (1 - a) * c + a * 255.0;
        }
      }
    }
    const double haze = rng.uniform(0.0, 0.35);
    const double light = rng.uniform(0.45, 0.8);
    for (auto& p : px) {
      for (auto& c : p) c = light * ((1 - haze) * c + haze * 220.0);
    }
  }

  SynthFrame f;
  f.image = RgbImage(o.width, o.height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double noise = 3.0 * rng.normal();
      f.image.rgb[i * 3 + c] =
          static_cast<std::uint8_t>(std::clamp(std::lround(px[i][c] + noise), 0L, 255L));
    }
  }

  // Fully occluded or off-image instruments drop out; survivors keep paint order.
  std::vector<std::uint16_t> remap(tools.size() + 1, 0);
  std::vector<bool> seen(tools.size() + 1, false);
  for (auto l : labels.labels) seen[l] = true;
  std::uint16_t next = 1;
  for (std::size_t i = 1; i <= tools.size(); ++i) {
    if (!seen[i]) continue;
    remap[i] = next++;
    f.families.push_back(tools[i - 1].family);
  }
  for (auto& l : labels.labels) l = remap[l];
  f.labels = std::move(labels);
  return f;
}

DatasetManifest synth_generate(const SynthOptions& options, const fs::path& out_dir) {
  const std::string tag = stage_tag(options.stage);
  const fs::path images = out_dir / "images";
  const fs::path annotations = out_dir / "annotations";
  std::error_code ec;
  fs::create_directories(images, ec);
  if (!ec) fs::create_directories(annotations, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  DatasetManifest m;
  for (std::size_t i = 0; i < options.count; ++i) {
    const SynthFrame f = synth_frame(options, i);
    const std::string id = fmt::format("{}_{:05}", tag == "train" ? "train" : "stage" + tag, i);
    FrameRecord r;
    r.frame_id = id;
    r.procedure = options.stage == Stage::kStage3 ? "procedure-b" : "procedure-a";
    r.stage = options.stage;
    r.image = images / (id + ".png");
    r.annotation = annotations / (id + ".png");
    r.instruments = f.families.size();
    write_rgb_png(f.image, r.image);
    write_labelmap(f.labels, r.annotation);
    m.records.push_back(std::move(r));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace ccseg::data
