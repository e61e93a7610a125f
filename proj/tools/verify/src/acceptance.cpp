#include "ccseg/verify/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ccseg/bench.hpp"
#include "ccseg/datakit.hpp"
#include "ccseg/error.hpp"
#include "ccseg/image_io.hpp"
#include "ccseg/pipeline.hpp"
#include "ccseg/ranking.hpp"
#include "ccseg/verify/oracles.hpp"

namespace ccseg::verify {

namespace fs = std::filesystem;
using attention::AttentionConfig;
using attention::Position;

namespace {

CheckResult make(int id, std::string title) {
  CheckResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

CheckResult& fail(CheckResult& r, std::string why) {
  r.passed = false;
  r.detail = std::move(why);
  return r;
}

std::vector<Tensor> synth_tensors(std::size_t count, std::size_t size, data::Stage stage,
                                  std::uint64_t seed) {
  data::SynthOptions so;
  so.stage = stage;
  so.seed = seed;
  so.width = so.height = size;
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(image_to_tensor(data::synth_frame(so, i).image));
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.insert(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.insert(fs::relative(e.path(), b));
  }
  if (rel_a != rel_b) {
    why = "file sets differ";
    return false;
  }
  for (const auto& r : rel_a) {
    if (read_file(a / r) != read_file(b / r)) {
      why = "contents differ: " + r.string();
      return false;
    }
  }
  return true;
}

}  // namespace

CheckResult check_metrics_oracles(const SuiteOptions& o) {
  auto r = make(1, "metrics oracle suite (dsc exact, nsd 1e-9, edt exact, matching exact)");
  Rng rng(derive_seed(o.seed, 1));
  const double taus[] = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 13.0};
  std::size_t dsc_n = 0, nsd_n = 0, edt_n = 0, match_n = 0;
  for (std::size_t t = 0; t < kMetricCases; ++t) {
    const std::size_t w = 4 + rng.uniform_index(21), h = 4 + rng.uniform_index(21);
    const BinaryMask a = random_mask(w, h, rng), b = random_mask(w, h, rng);
    if (!a.empty() || !b.empty()) {
      if (metrics::dsc(a, b) != oracle_dsc(a, b)) return fail(r, fmt::format("dsc case {}", t));
      ++dsc_n;
    }
    if (!a.empty()) {
      const auto fast = metrics::distance_transform(a), slow = oracle_distance(a);
      if (fast.values != slow.values) return fail(r, fmt::format("distance transform case {}", t));
      if (metrics::boundary(a) != oracle_boundary(a)) return fail(r, fmt::format("boundary case {}", t));
      ++edt_n;
    }
    if (!a.empty() && !b.empty()) {
      const double tau = taus[rng.uniform_index(std::size(taus))];
      const double got = metrics::nsd(a, b, tau), want = oracle_nsd(a, b, tau);
      if (std::abs(got - want) > kNsdTolerance) {
        return fail(r, fmt::format("nsd case {} tau {}: {} vs {}", t, tau, got, want));
      }
      ++nsd_n;
    }
    const InstanceLabelMap gt = random_labels(w, h, rng.uniform_index(6), rng);
    const InstanceLabelMap pred = perturb_labels(gt, rng);
    const metrics::Matching fast = metrics::match_instances(gt, pred);
    const metrics::Matching slow = oracle_match(gt, pred);
    if (fast.pairs != slow.pairs || fast.unmatched_gt != slow.unmatched_gt ||
        fast.unmatched_pred != slow.unmatched_pred) {
      return fail(r, fmt::format("matching case {}", t));
    }
    const metrics::Matching hung = metrics::match_instances(gt, pred, metrics::MatchSolver::kHungarian);
    if (std::abs(hung.total_dsc() - slow.total_dsc()) > 1e-12) {
      return fail(r, fmt::format("hungarian total case {}", t));
    }
    ++match_n;
  }
  r.passed = true;
  r.detail = fmt::format("dsc {} / edt {} / nsd {} / matching {} random cases", dsc_n, edt_n, nsd_n,
                         match_n);
  return r;
}

CheckResult check_attention_structure(const SuiteOptions& o) {
  auto r = make(2, "criss-cross structure (influence sets, dense masked oracle 1e-10)");
  Rng rng(derive_seed(o.seed, 2));
  double worst = 0.0;
  for (std::size_t d = 0; d < kInfluenceDraws; ++d) {
    const std::size_t h = d == 0 ? 8 : 2 + rng.uniform_index(7);
    const std::size_t w = d == 0 ? 8 : 2 + rng.uniform_index(7);
    AttentionConfig cfg{2 + rng.uniform_index(5), 2, 2, true};
    const auto weights = attention::random_weights(cfg, rng);
    const Tensor x = random_tensor({cfg.channels, h, w}, rng, kInfluenceInputScale);
    const Position p{rng.uniform_index(h), rng.uniform_index(w)};

    std::vector<Position> cross;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (i == p.row || j == p.col) cross.push_back({i, j});
      }
    }
    if (attention::influence_map(cfg, weights, x, p, 1) != cross) {
      return fail(r, fmt::format("draw {}: one-pass influence is not the row/column of ({},{})", d,
                                 p.row, p.col));
    }
    if (attention::influence_map(cfg, weights, x, p, 2).size() != h * w) {
      return fail(r, fmt::format("draw {}: two passes do not reach all {} positions", d, h * w));
    }

    AttentionConfig dense_cfg = cfg;
    dense_cfg.recurrence = 1 + rng.uniform_index(3);
    dense_cfg.share_weights = rng.bernoulli(0.5);
    const auto dw = attention::random_weights(dense_cfg, rng);
    const double diff =
        max_abs_diff(attention::rcca_forward(x, dw, dense_cfg), dense_attention(x, dw, dense_cfg));
    worst = std::max(worst, diff);
    if (diff > kDenseTolerance) return fail(r, fmt::format("draw {}: dense oracle off by {}", d, diff));
  }
  r.passed = true;
  r.detail = fmt::format("{} draws up to 8x8; dense max |diff| {:.3g}", kInfluenceDraws, worst);
  return r;
}

CheckResult check_gradients(const SuiteOptions& o) {
  auto r = make(3, "rcca_backward vs central differences (rel err <= 1e-4)");
  double worst = 0.0;
  std::string worst_group;
  std::size_t groups = 0;
  for (std::size_t s = 0; s < kGradientSeeds; ++s) {
    Rng rng(derive_seed(o.seed, 300 + s));
    AttentionConfig cfg{1 + rng.uniform_index(4), 2, 1 + rng.uniform_index(2), s % 2 == 0};
    const std::size_t h = 1 + rng.uniform_index(4), w = 1 + rng.uniform_index(4);
    const auto weights = attention::random_weights(cfg, rng);
    const Tensor x = random_tensor({cfg.channels, h, w}, rng);
    const Tensor up = random_tensor({cfg.channels, h, w}, rng);
    const GradientCheck g = gradient_check(x, weights, cfg, up, kFiniteDifferenceStep);
    groups += g.groups;
    if (g.max_relative_error > worst) {
      worst = g.max_relative_error;
      worst_group = fmt::format("seed {} {}", s, g.worst_group);
    }
  }
  r.passed = worst <= kGradientTolerance;
  r.detail = fmt::format("{} groups over {} seeds; max rel err {:.3g} ({})", groups, kGradientSeeds,
                         worst, worst_group);
  return r;
}

CheckResult check_complexity(const SuiteOptions& o) {
  auto r = make(4, "affinity entry counts exact; 64x64 ratio to dense < 0.04");
  Rng rng(derive_seed(o.seed, 4));
  for (std::size_t t = 0; t < kAffinitySizes; ++t) {
    const std::size_t h = 1 + rng.uniform_index(24), w = 1 + rng.uniform_index(24);
    const std::size_t got = attention::affinity_entry_count(h, w);
    if (got != brute_affinity_entries(h, w) || got != h * w * (h + w - 1)) {
      return fail(r, fmt::format("{}x{}: {} entries", h, w, got));
    }
  }
  const std::size_t cc = attention::affinity_entry_count(64, 64);
  const std::size_t dense = bench::dense_entry_count(64, 64);
  const double ratio = static_cast<double>(cc) / static_cast<double>(dense);
  r.passed = cc == 520192 && dense == 16777216 && ratio < kDenseRatioBound;
  r.detail = fmt::format("{} sizes exact; 64x64: {} vs {} dense, ratio {:.4f}", kAffinitySizes, cc,
                         dense, ratio);
  return r;
}

CheckResult check_pipeline_variants(const SuiteOptions& o) {
  using namespace pipeline;
  auto r = make(5, "pipeline shapes at 256x256, zeroed attention == base, determinism");
  const auto images = synth_tensors(3, 256, data::Stage::kTrain, derive_seed(o.seed, 5));
  const Tensor& image = images.front();

  std::vector<FrameResult> zeroed;
  FrameResult base_result;
  for (Insertion ins : kAllInsertions) {
    VariantSpec spec;
    spec.insertion = ins;
    const WeightStore ws = init_weights(spec, o.seed);
    const SegmentationModel model(spec, ws);
    const FeatureMaps f = model.extract_features(image);
    const Shape backbone[] = {{32, 32, 32}, {64, 16, 16}, {128, 8, 8}};
    for (std::size_t l = 0; l < kBackboneLevels; ++l) {
      if (f.backbone[l].shape() != backbone[l]) {
        return fail(r, spec.name() + ": backbone C" + std::to_string(l + 3) + " is " +
                           shape_string(f.backbone[l].shape()));
      }
    }
    std::size_t anchors = 0;
    for (std::size_t l = 0; l < kPyramidLevels; ++l) {
      const std::size_t side = 256 / pyramid_stride(l);
      if (f.pyramid[l].shape() != Shape{32, side, side}) {
        return fail(r, spec.name() + ": P" + std::to_string(l + 3) + " is " +
                           shape_string(f.pyramid[l].shape()));
      }
      const LevelPredictions p = model.head_forward(f.pyramid[l]);
      if (p.slots() != side * side * 3 || p.class_logits.size() != p.slots() * 2 ||
          p.regressions.size() != p.slots() * 4 || p.coefficients.size() != p.slots() * 8) {
        return fail(r, spec.name() + ": head output sizes at P" + std::to_string(l + 3));
      }
      anchors += generate_anchors(pyramid_stride(l), 256, 256, spec.anchor_scales[l],
                                  spec.anchor_ratios)
                     .size();
    }
    if (anchors != 4092) return fail(r, fmt::format("{}: {} anchors", spec.name(), anchors));
    if (model.protonet_forward(f.pyramid[0]).shape() != Shape{8, 64, 64}) {
      return fail(r, spec.name() + ": prototype shape");
    }
    const FrameResult out = model.infer(image);
    if (out.labels.width != 256 || out.labels.height != 256 || out.detections.size() > 255) {
      return fail(r, spec.name() + ": label map shape");
    }
    for (const auto& d : out.detections) {
      if (d.confidence < spec.display_confidence || d.coefficients.size() != 8) {
        return fail(r, spec.name() + ": detection below threshold or bad coefficients");
      }
    }
    if (model.infer(image) != out) return fail(r, spec.name() + ": repeated inference differs");
    for (std::size_t workers : {1u, 2u, 3u}) {
      const auto many = infer_frames(images, model, workers);
      for (std::size_t i = 0; i < images.size(); ++i) {
        if (many[i] != model.infer(images[i])) {
          return fail(r, fmt::format("{}: frame {} differs with {} workers", spec.name(), i, workers));
        }
      }
    }

    WeightStore zw = ws;
    zero_attention(zw);
    const SegmentationModel zeroed_model(spec, zw);
    if (ins == Insertion::kNone) {
      base_result = zeroed_model.infer(image);
    } else {
      zeroed.push_back(zeroed_model.infer(image));
    }
  }
  for (const auto& z : zeroed) {
    if (z != base_result) return fail(r, "zeroed-attention variant differs from base");
  }
  r.passed = true;
  r.detail = fmt::format("4 variants, 4092 anchors, {} base detections, 1-3 workers agree",
                         base_result.detections.size());
  return r;
}

CheckResult check_aggregation(const SuiteOptions&) {
  auto r = make(6, "percentile closed forms exact; published aggregates rank in order with the zero tie");
  std::vector<double> v101, v100;
  for (int i = 0; i <= 100; ++i) v101.push_back(i / 100.0);
  for (int i = 1; i <= 100; ++i) v100.push_back(i / 100.0);
  const double p101 = ranking::percentile(v101, 0.05), p100 = ranking::percentile(v100, 0.05);
  if (p101 != 0.05 || p100 != 0.0595) {
    return fail(r, fmt::format("percentiles {} and {}", p101, p100));
  }
  const std::vector<std::pair<std::string, double>> dsc = {
      {"www", 0.31},         {"Uniandes", 0.26},      {"SQUASH", 0.22},
      {"CASIA_SRL", 0.19},   {"fisensee", 0.17},      {"caresyntax", 0.00},
      {"VIE", 0.00},         {"CCAM-Backbone", 0.313}, {"CCAM-Full", 0.308},
      {"CCAM-FPN", 0.000},   {"Base YOLACT++", 0.000}};
  const auto ranked = ranking::rank_algorithms(dsc);
  const std::vector<std::string> head = {"CCAM-Backbone", "www",      "CCAM-Full", "Uniandes",
                                         "SQUASH",        "CASIA_SRL", "fisensee"};
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (ranked[i].name != head[i] || ranked[i].rank != i + 1) {
      return fail(r, fmt::format("position {}: {} rank {}", i + 1, ranked[i].name, ranked[i].rank));
    }
  }
  std::set<std::string> tie;
  for (std::size_t i = head.size(); i < ranked.size(); ++i) {
    if (ranked[i].rank != 8) return fail(r, ranked[i].name + " not tied at rank 8");
    tie.insert(ranked[i].name);
  }
  if (tie != std::set<std::string>{"caresyntax", "VIE", "CCAM-FPN", "Base YOLACT++"}) {
    return fail(r, "wrong four-way tie");
  }
  r.passed = true;
  r.detail = "0.05 / 0.0595; 7 ordered rows then a four-way tie at rank 8";
  return r;
}

CheckResult check_throughput(const SuiteOptions& o) {
  using namespace pipeline;
  auto r = make(7, "throughput ordering over 10 repetitions (Base >= {Backbone, FPN} >= Full)");
  const auto frames =
      synth_tensors(o.throughput_frames, o.throughput_size, data::Stage::kStage1, derive_seed(o.seed, 7));
  std::vector<SegmentationModel> models;
  models.reserve(kAllInsertions.size());
  for (Insertion ins : kAllInsertions) {
    VariantSpec spec;
    spec.insertion = ins;
    WeightStore ws = init_weights(spec, o.seed);
    suppress_detections(ws, spec);
    models.emplace_back(spec, ws);
  }
  std::vector<const SegmentationModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  const auto res = bench::measure_interleaved(ptrs, frames, {o.repetitions, o.warmup});
  const double base = res[0].mean_fps, bb = res[1].mean_fps, fpn = res[2].mean_fps,
               full = res[3].mean_fps;
  for (const auto& b : res) {
    if (b.runs.size() != o.repetitions) return fail(r, "wrong run count");
  }
  r.passed = base >= bb && base >= fpn && bb >= full && fpn >= full;
  std::string spread;
  for (const auto& b : res) {
    const auto s = bench::run_spread(b.runs);
    spread += fmt::format(" {} [{:.1f},{:.1f}]", b.variant, s.lo, s.hi);
  }
  r.detail = fmt::format("{} frames {}x{}: mean fps base {:.1f}, backbone {:.1f}, fpn {:.1f}, full "
                         "{:.1f}; 95% spread:{}",
                         frames.size(), o.throughput_size, o.throughput_size, base, bb, fpn, full,
                         spread);
  return r;
}

CheckResult check_data_pipeline(const SuiteOptions& o) {
  using namespace data;
  auto r = make(8, "data pipeline (filter 5983 -> 4987, split 4239/748, identity augment, synth)");
  DatasetManifest m;
  std::set<std::string> empty_ids;
  for (std::size_t i = 0; i < 5983; ++i) {
    FrameRecord rec;
    rec.frame_id = fmt::format("f{:05}", i);
    rec.stage = Stage::kTrain;
    if (i % 6 == 0 && empty_ids.size() < 996) empty_ids.insert(rec.frame_id);
    m.records.push_back(rec);
  }
  const AnnotationSource source = [&](const FrameRecord& rec) {
    InstanceLabelMap lm(4, 4);
    if (!empty_ids.contains(rec.frame_id)) lm.at(1, 1) = 1;
    return lm;
  };
  const FilterResult fr = filter_empty_frames(m, source);
  if (fr.removed != 996 || fr.manifest.records.size() != 4987) {
    return fail(r, fmt::format("filter kept {} removed {}", fr.manifest.records.size(), fr.removed));
  }
  const Split s = split_train_val(fr.manifest.records, 0.85, o.seed);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.val}) {
    for (const auto& rec : *part) ids.insert(rec.frame_id);
  }
  if (s.train.size() != 4239 || s.val.size() != 748 || ids.size() != 4987) {
    return fail(r, fmt::format("split {}/{}", s.train.size(), s.val.size()));
  }

  SynthOptions so;
  so.seed = derive_seed(o.seed, 8);
  so.width = so.height = 96;
  const SynthFrame f = synth_frame(so, 3);
  Rng rng(o.seed);
  const AugmentDraw d = sample_augmentation(AugmentationConfig::identity(), f.labels, rng);
  const Augmented a = augment(f.image, f.labels, d);
  if (!(a.image == f.image) || !(a.labels == f.labels)) return fail(r, "identity draw changed the frame");

  so.count = 6;
  so.stage = Stage::kStage3;
  const fs::path da = o.work_dir / "synth_a", db = o.work_dir / "synth_b";
  fs::remove_all(da);
  fs::remove_all(db);
  synth_generate(so, da);
  synth_generate(so, db);
  std::string why;
  if (!same_tree(da, db, why)) return fail(r, "synth not reproducible: " + why);
  const DatasetManifest loaded = load_manifest(da / "manifest.json");
  for (const auto& rec : loaded.records) {
    const auto lm = read_labelmap(rec.annotation);
    const auto ids_present = lm.map.instance_ids();
    if (lm.remapped || ids_present.size() != rec.instruments.value_or(99) ||
        (!ids_present.empty() && ids_present.back() != ids_present.size())) {
      return fail(r, rec.frame_id + ": labels are not {0..k}");
    }
  }
  r.passed = true;
  r.detail = "4987 kept, 4239/748 partition, identity no-op, 6-frame corpus byte-identical";
  return r;
}

CheckResult check_end_to_end(const SuiteOptions& o) {
  auto r = make(9, "end-to-end synth -> infer -> eval -> rank; mask saturation > 0.999");
  // Saturation: one-hot prototype, large coefficient.
  {
    Tensor protos({4, 16, 16});
    for (std::size_t y = 4; y < 12; ++y) {
      for (std::size_t x = 4; x < 12; ++x) protos.at(0, y, x) = 1.0;
    }
    pipeline::Detection det;
    det.confidence = 0.9;
    det.box = {0, 0, 64, 64};
    det.coefficients = {20.0, 0.0, 0.0, 0.0};
    const Tensor prob = pipeline::mask_probabilities(protos, det.coefficients);
    for (std::size_t y = 4; y < 12; ++y) {
      for (std::size_t x = 4; x < 12; ++x) {
        if (!(prob[y * 16 + x] > kSaturationConfidence)) return fail(r, "interior confidence too low");
      }
    }
    const auto masks = pipeline::assemble_masks(protos, {det}, 64, 64);
    BinaryMask want(64, 64);
    for (std::size_t y = 16; y < 48; ++y) {
      for (std::size_t x = 16; x < 48; ++x) want.at(x, y) = 1;
    }
    if (masks.size() != 1 || masks[0] != want) return fail(r, "saturated mask is not the region");
  }

  if (!o.run_cli) return fail(r, "no command runner supplied");
  const fs::path root = o.work_dir / "e2e";
  fs::remove_all(root);
  auto run = [&](std::vector<std::string> args) {
    const int status = o.run_cli(args);
    if (status != 0) {
      std::string cmd;
      for (const auto& a : args) cmd += a + " ";
      throw std::runtime_error(fmt::format("`{}` exited {}", cmd, status));
    }
  };
  const std::string seed = std::to_string(o.seed);
  run({"synth", "--stage", "3", "--count", "4", "--width", "128", "--height", "128", "--seed", seed,
       "--out-dir", (root / "corpus").string()});
  const auto manifest = data::load_manifest(root / "corpus" / "manifest.json");
  if (manifest.records.size() != 4) return fail(r, "synth manifest size");

  std::vector<std::string> rank_args = {"rank", "--format", "csv", "--out-dir", (root / "rank").string()};
  for (const std::string variant : {"base", "full"}) {
    const fs::path pred = root / ("pred_" + variant), eval = root / ("eval_" + variant);
    run({"infer", "--input", (root / "corpus" / "images").string(), "--variant", variant, "--seed",
         seed, "--out-dir", pred.string()});
    std::ifstream det(pred / "detections.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(det, line);) {
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("frame") || !j.contains("detections")) return fail(r, "detections.jsonl schema");
      ++lines;
    }
    if (lines != 4) return fail(r, variant + ": detections.jsonl has " + std::to_string(lines) + " lines");
    for (const auto& rec : manifest.records) {
      const auto lm = read_labelmap(pred / rec.image.filename());
      if (lm.map.width != 128 || lm.map.height != 128) return fail(r, "predicted label map extents");
    }
    run({"eval", "--gt", (root / "corpus" / "annotations").string(), "--pred", pred.string(),
         "--out-dir", eval.string()});
    const auto evals = metrics::read_frame_evals(eval / "frame_evals.jsonl");
    if (evals.size() != 4) return fail(r, variant + ": frame_evals.jsonl size");
    for (const auto& e : evals) {
      if (e.mi_dsc < 0 || e.mi_dsc > 1 || e.mi_nsd < 0 || e.mi_nsd > 1) return fail(r, "score range");
    }
    rank_args.push_back("--algorithm");
    rank_args.push_back(variant + "=" + (eval / "frame_evals.jsonl").string());
  }
  run(rank_args);
  std::ifstream csv(root / "rank" / "report.csv");
  std::vector<std::string> rows;
  for (std::string line; std::getline(csv, line);) rows.push_back(line);
  if (rows.size() != 3 || rows[0] != "name,mi_dsc,mi_nsd,rank_dsc,rank_nsd,fps") {
    return fail(r, "report.csv malformed");
  }
  r.passed = true;
  r.detail = "4-frame corpus, 2 variants, report with 2 rows; saturated mask exact";
  return r;
}

CheckResult run_check(int id, const SuiteOptions& o) {
  using Fn = CheckResult (*)(const SuiteOptions&);
  static const Fn table[] = {check_metrics_oracles, check_attention_structure, check_gradients,
                             check_complexity,      check_pipeline_variants,   check_aggregation,
                             check_throughput,      check_data_pipeline,       check_end_to_end};
  if (id < 1 || id > kCriteria) throw ContractViolation("run_check: no criterion " + std::to_string(id));
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = table[id - 1](o);
  } catch (const std::exception& e) {
    r = make(id, "criterion " + std::to_string(id));
    r.detail = std::string("exception: ") + e.what();
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string format_line(const CheckResult& r) {
  return fmt::format("{} {} {}: {} ({:.1f} s)", r.passed ? "PASS" : "FAIL", r.id, r.title, r.detail,
                     r.seconds);
}

}  // namespace ccseg::verify
