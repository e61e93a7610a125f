#include "ccseg/bench.hpp"

#include <chrono>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ccseg/error.hpp"
#include "ccseg/ranking.hpp"

namespace ccseg::bench {

namespace {

using Clock = std::chrono::steady_clock;
using pipeline::FrameResult;
using pipeline::SegmentationModel;
using pipeline::StageProfile;

struct Runner {
  const SegmentationModel* model;
  std::vector<FrameResult> reference;
  StageProfile profile;
  BenchResult result;
};

// Times one frame; checks it against the reference output.
double time_frame(Runner& r, const std::vector<Tensor>& frames, std::size_t i, StageProfile& profile) {
  const auto t0 = Clock::now();
  FrameResult out = r.model->infer(frames[i], &profile);
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (out != r.reference[i]) {
    throw ContractViolation("measure_throughput: " + r.model->spec().name() +
                            " produced different outputs across runs");
  }
  return elapsed;
}

std::size_t conv_out(std::size_t n, std::size_t k, std::size_t stride, std::size_t pad) {
  return (n + 2 * pad - k) / stride + 1;
}

}  // namespace

double mean(const std::vector<double>& values) {
  if (values.empty()) throw ContractViolation("mean: no values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<BenchResult> measure_interleaved(const std::vector<const SegmentationModel*>& models,
                                             const std::vector<Tensor>& frames,
                                             const ThroughputOptions& options) {
  if (frames.empty()) throw ContractViolation("measure_throughput: empty frame sequence");
  if (options.repetitions == 0) throw ContractViolation("measure_throughput: repetitions must be >= 1");
  for (const Tensor& f : frames) {
    if (f.shape() != frames.front().shape()) {
      throw ContractViolation("measure_throughput: frames differ in shape");
    }
  }
  std::vector<Runner> runners;
  for (const SegmentationModel* m : models) {
    Runner r{m, {}, {}, {}};
    r.result.variant = m->spec().name();
    r.result.height = frames.front().dim(1);
    r.result.width = frames.front().dim(2);
    r.result.frames = frames.size();
    runners.push_back(std::move(r));
  }
  // Reference outputs come from plain single-frame inference.
  for (Runner& r : runners) {
    for (const Tensor& f : frames) r.reference.push_back(pipeline::infer_frame(f, *r.model));
  }
  const std::size_t n = runners.size();
  for (std::size_t rep = 0; rep < options.warmup + options.repetitions; ++rep) {
    const bool timed = rep >= options.warmup;
    std::vector<double> elapsed(n, 0.0);
    std::vector<StageProfile> profiles(n);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = (rep + f + i) % n;
        elapsed[k] += time_frame(runners[k], frames, f, profiles[k]);
      }
    }
    if (!timed) continue;
    for (std::size_t k = 0; k < n; ++k) {
      runners[k].profile += profiles[k];
      runners[k].result.runs.push_back(static_cast<double>(frames.size()) / elapsed[k]);
    }
  }
  std::vector<BenchResult> out;
  const double scale = 1.0 / static_cast<double>(options.repetitions * frames.size());
  for (Runner& r : runners) {
    r.result.mean_fps = mean(r.result.runs);
    StageProfile& p = r.result.profile;
    p = r.profile;
    for (double* v : {&p.backbone, &p.attention, &p.fpn, &p.heads, &p.nms, &p.assembly}) *v *= scale;
    out.push_back(std::move(r.result));
  }
  return out;
}

BenchResult measure_throughput(const SegmentationModel& model, const std::vector<Tensor>& frames,
                               const ThroughputOptions& options) {
  return measure_interleaved({&model}, frames, options).front();
}

RunSpread run_spread(const std::vector<double>& runs, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ContractViolation("run_spread: coverage in (0,1]");
  const double tail = (1.0 - coverage) / 2.0;
  return {ranking::percentile(runs, tail), ranking::percentile(runs, 1.0 - tail)};
}

std::size_t dense_entry_count(std::size_t height, std::size_t width) {
  const std::size_t n = height * width;
  return n * n;
}

OpCountReport op_count_report(const pipeline::VariantSpec& spec, std::size_t height,
                              std::size_t width) {
  spec.validate();
  if (height == 0 || width == 0 || height % 32 != 0 || width % 32 != 0) {
    throw ConfigError(fmt::format("op_count_report: extents {}x{} must be positive multiples of 32",
                                  height, width));
  }
  OpCountReport r;
  r.variant = spec.name();
  r.height = height;
  r.width = width;
  auto conv = [](std::size_t cout, std::size_t cin, std::size_t k, std::size_t h, std::size_t w) {
    return cout * cin * k * k * h * w;
  };
  auto site = [&](const std::string& name, std::size_t c, std::size_t h, std::size_t w) {
    const auto cfg = spec.attention_config(c);
    const std::size_t hw = h * w, span = h + w - 1, ck = cfg.key_channels();
    SiteCount s{name, h, w, c, attention::affinity_entry_count(h, w), dense_entry_count(h, w), 0};
    const std::size_t per_pass = 2 * ck * c * hw + c * c * hw + hw * span * ck + hw * span * c;
    s.macs = cfg.recurrence * per_pass + c * 2 * c * hw;
    r.attention_entries += s.criss_cross_entries;
    r.dense_entries += s.dense_entries;
    r.attention_macs += s.macs;
    r.sites.push_back(s);
  };

  std::size_t h = conv_out(height, 3, 2, 1), w = conv_out(width, 3, 2, 1);
  r.backbone_macs += conv(spec.stem_width, 3, 3, h, w);
  h = conv_out(h, 3, 2, 1);
  w = conv_out(w, 3, 2, 1);
  r.backbone_macs += conv(spec.backbone_widths[0], spec.stem_width, 3, h, w);
  std::size_t prev = spec.backbone_widths[0];
  std::array<std::size_t, pipeline::kBackboneLevels> bh{}, bw{};
  for (std::size_t s = 0; s < pipeline::kBackboneLevels; ++s) {
    const std::size_t c = spec.backbone_widths[s];
    h = conv_out(h, 3, 2, 1);
    w = conv_out(w, 3, 2, 1);
    r.backbone_macs += conv(c, prev, 3, h, w) + spec.blocks_per_stage * 2 * conv(c, c, 3, h, w);
    bh[s] = h;
    bw[s] = w;
    if (pipeline::attends_backbone(spec.insertion)) site("c" + std::to_string(s + 3), c, h, w);
    prev = c;
  }

  const std::size_t f = spec.fpn_width;
  std::array<std::size_t, pipeline::kPyramidLevels> ph{}, pw{};
  for (std::size_t s = 0; s < pipeline::kBackboneLevels; ++s) {
    r.fpn_macs += conv(f, spec.backbone_widths[s], 1, bh[s], bw[s]) + conv(f, f, 3, bh[s], bw[s]);
    ph[s] = bh[s];
    pw[s] = bw[s];
  }
  for (std::size_t l = pipeline::kBackboneLevels; l < pipeline::kPyramidLevels; ++l) {
    ph[l] = conv_out(ph[l - 1], 3, 2, 1);
    pw[l] = conv_out(pw[l - 1], 3, 2, 1);
    r.fpn_macs += conv(f, f, 3, ph[l], pw[l]);
  }
  if (pipeline::attends_fpn(spec.insertion)) {
    for (std::size_t l = 0; l < pipeline::kPyramidLevels; ++l) {
      site("p" + std::to_string(l + 3), f, ph[l], pw[l]);
    }
  }

  r.head_macs += conv(f, f, 3, ph[0], pw[0]) + conv(spec.prototypes, f, 1, 2 * ph[0], 2 * pw[0]);
  for (std::size_t l = 0; l < pipeline::kPyramidLevels; ++l) {
    const std::size_t a = spec.anchors_per_position(l);
    const std::size_t outs = a * (spec.num_classes + 1) + a * 4 + a * spec.prototypes;
    r.head_macs += conv(f, f, 3, ph[l], pw[l]) + conv(outs, f, 1, ph[l], pw[l]);
  }
  return r;
}

std::string to_json(const BenchResult& r) {
  const auto& p = r.profile;
  nlohmann::json j{{"variant", r.variant},
                   {"height", r.height},
                   {"width", r.width},
                   {"frames", r.frames},
                   {"runs", r.runs},
                   {"mean_fps", r.mean_fps},
                   {"stage_seconds_per_frame",
                    {{"backbone", p.backbone},
                     {"attention", p.attention},
                     {"fpn", p.fpn},
                     {"heads", p.heads},
                     {"nms", p.nms},
                     {"assembly", p.assembly}}}};
  return j.dump(2);
}

std::string to_json(const OpCountReport& r) {
  nlohmann::json sites = nlohmann::json::array();
  for (const auto& s : r.sites) {
    sites.push_back({{"site", s.site},
                     {"height", s.height},
                     {"width", s.width},
                     {"channels", s.channels},
                     {"criss_cross_entries", s.criss_cross_entries},
                     {"dense_entries", s.dense_entries},
                     {"macs", s.macs}});
  }
  nlohmann::json j{{"variant", r.variant},
                   {"height", r.height},
                   {"width", r.width},
                   {"sites", sites},
                   {"attention_entries", r.attention_entries},
                   {"dense_entries", r.dense_entries},
                   {"macs",
                    {{"backbone", r.backbone_macs},
                     {"attention", r.attention_macs},
                     {"fpn", r.fpn_macs},
                     {"heads", r.head_macs},
                     {"total", r.total_macs()}}}};
  return j.dump(2);
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "name,mi_dsc,mi_nsd,fps\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.2f}\n", r.name, opt(r.mi_dsc), opt(r.mi_nsd), r.fps);
  }
  return out;
}

}  // namespace ccseg::bench
