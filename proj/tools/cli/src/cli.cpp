#include "ccseg/cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ccseg/bench.hpp"
#include "ccseg/datakit.hpp"
#include "ccseg/error.hpp"
#include "ccseg/image_io.hpp"
#include "ccseg/metrics.hpp"
#include "ccseg/pipeline.hpp"
#include "ccseg/ranking.hpp"
#include "ccseg/verify/acceptance.hpp"
#include "ccseg/verify/oracles.hpp"

namespace ccseg::cli {

namespace {

namespace fs = std::filesystem;

struct Global {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int verbose = 0;
  bool quiet = false;
};

struct SynthArgs {
  std::string stage = "train";
  std::size_t count = 10;
  std::size_t width = 256;
  std::size_t height = 256;
  std::size_t max_instruments = 3;
};

struct InferArgs {
  std::string input;
  std::string variant = "full";
  std::string weights;
  std::string save_weights;
  double confidence = 0.3;
  std::size_t workers = 1;
};

struct EvalArgs {
  std::string gt;
  std::string pred;
  double tau = metrics::kDefaultTau;
};

struct RankArgs {
  std::vector<std::string> algorithms;
  std::string aggregates;
  std::vector<std::string> fps;
  double percentile = ranking::kRobustnessPercentile;
  std::string format = "csv";
};

struct BenchArgs {
  std::vector<std::string> variants = {"base", "backbone", "fpn", "full"};
  std::string weights;
  std::string input;
  std::string stage = "1";
  std::size_t frames = 64;
  std::size_t size = 128;
  std::size_t repetitions = 10;
  std::size_t warmup = 2;
  bool suppress = false;
};

struct GradcheckArgs {
  std::size_t seeds = verify::kGradientSeeds;
};

struct SelftestArgs {
  bool quick = false;
  std::vector<int> only;
};

// Echo of every resolved value, in the same key = value format the config file uses.
class Echo {
 public:
  explicit Echo(std::string section) : section_(std::move(section)) {}

  template <typename T>
  void add(const std::string& key, const T& value) {
    lines_.emplace_back(key, format(value));
  }
  void add_global(const Global& g) {
    globals_.emplace_back("seed", format(g.seed));
    globals_.emplace_back("out-dir", format(g.out_dir));
  }

  std::string str() const {
    std::string s = "# resolved configuration\n";
    for (const auto& [k, v] : globals_) s += k + " = " + v + "\n";
    s += "[" + section_ + "]\n";
    for (const auto& [k, v] : lines_) s += k + " = " + v + "\n";
    return s;
  }

 private:
  static std::string format(const std::string& v) { return nlohmann::json(v).dump(); }
  static std::string format(bool v) { return v ? "true" : "false"; }
  template <typename T>
  static std::string format(const std::vector<T>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format(v[i]);
    return s + "]";
  }
  template <typename T>
  static std::string format(const T& v) {
    return fmt::format("{}", v);
  }

  std::string section_;
  std::vector<std::pair<std::string, std::string>> globals_;
  std::vector<std::pair<std::string, std::string>> lines_;
};

fs::path prepare_out_dir(const Global& g) {
  const fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void emit_echo(const Echo& echo, const fs::path& dir, const std::string& command, std::ostream& out) {
  const std::string text = echo.str();
  out << text;
  std::ofstream f(dir / (command + ".config.toml"));
  if (!f) throw IoError("cannot write " + (dir / (command + ".config.toml")).string());
  f << text;
}

std::vector<fs::path> png_files(const fs::path& input) {
  if (!fs::exists(input)) throw IoError("input '" + input.string() + "' does not exist");
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  return files;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError(fmt::format("--{} expects NAME=VALUE, got '{}'", flag, text));
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

WeightStore load_or_init(const std::string& path, const pipeline::VariantSpec& spec,
                         std::uint64_t seed) {
  if (!path.empty()) return WeightStore::load(path);
  return pipeline::init_weights(spec, seed);
}

int cmd_synth(const Global& g, const SynthArgs& a, std::ostream& out) {
  data::SynthOptions o;
  o.stage = data::parse_stage(a.stage);
  o.count = a.count;
  o.seed = g.seed;
  o.width = a.width;
  o.height = a.height;
  o.max_instruments = a.max_instruments;
  Echo echo("synth");
  echo.add_global(g);
  echo.add("stage", a.stage);
  echo.add("count", a.count);
  echo.add("width", a.width);
  echo.add("height", a.height);
  echo.add("max-instruments", a.max_instruments);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "synth", out);

  const auto m = data::synth_generate(o, dir);
  std::size_t instruments = 0;
  for (const auto& r : m.records) instruments += r.instruments.value_or(0);
  out << fmt::format("synth: {} frames (stage {}), {} instruments -> {}\n", m.records.size(),
                     data::stage_tag(o.stage), instruments, (dir / "manifest.json").string());
  return kOk;
}

int cmd_infer(const Global& g, const InferArgs& a, std::ostream& out) {
  pipeline::VariantSpec spec;
  spec.insertion = pipeline::parse_insertion(a.variant);
  spec.display_confidence = a.confidence;
  spec.validate();
  if (a.workers == 0) throw ConfigError("--workers must be >= 1");
  Echo echo("infer");
  echo.add_global(g);
  echo.add("input", a.input);
  echo.add("variant", a.variant);
  echo.add("weights", a.weights);
  echo.add("save-weights", a.save_weights);
  echo.add("confidence", a.confidence);
  echo.add("workers", a.workers);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "infer", out);

  const WeightStore weights = load_or_init(a.weights, spec, g.seed);
  if (!a.save_weights.empty()) weights.save(a.save_weights);
  const pipeline::SegmentationModel model(spec, weights);

  const auto files = png_files(a.input);
  std::vector<Tensor> images;
  for (const auto& f : files) {
    spdlog::debug("reading {}", f.string());
    images.push_back(image_to_tensor(read_rgb_png(f)));
  }
  const auto results = pipeline::infer_frames(images, model, a.workers);

  std::ofstream det(dir / "detections.jsonl");
  if (!det) throw IoError("cannot write " + (dir / "detections.jsonl").string());
  std::size_t total = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    write_labelmap(results[i].labels, dir / files[i].filename());
    nlohmann::json j;
    j["frame"] = files[i].stem().string();
    j["detections"] = nlohmann::json::array();
    for (std::size_t d = 0; d < results[i].detections.size(); ++d) {
      const auto& x = results[i].detections[d];
      j["detections"].push_back({{"id", d + 1},
                                 {"confidence", x.confidence},
                                 {"box", {x.box.x0, x.box.y0, x.box.x1, x.box.y1}}});
    }
    det << j.dump() << '\n';
    total += results[i].detections.size();
  }
  out << fmt::format("infer: {} frames, {} instances ({}) -> {}\n", files.size(), total,
                     spec.name(), dir.string());
  return kOk;
}

int cmd_eval(const Global& g, const EvalArgs& a, std::ostream& out) {
  if (!(a.tau >= 0.0)) throw ConfigError("--tau must be >= 0");
  Echo echo("eval");
  echo.add_global(g);
  echo.add("gt", a.gt);
  echo.add("pred", a.pred);
  echo.add("tau", a.tau);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "eval", out);

  std::vector<metrics::FrameEval> evals;
  for (const auto& gt_path : png_files(a.gt)) {
    const fs::path pred_path = fs::path(a.pred) / gt_path.filename();
    if (!fs::exists(pred_path)) throw IoError("no prediction for " + gt_path.filename().string());
    auto e = metrics::frame_scores(read_labelmap(gt_path).map, read_labelmap(pred_path).map, a.tau);
    e.frame_id = gt_path.stem().string();
    evals.push_back(std::move(e));
  }
  metrics::write_frame_evals(evals, dir / "frame_evals.jsonl");
  if (evals.empty()) {
    out << "eval: no frames\n";
    return kOk;
  }
  const auto agg = ranking::aggregate_algorithm(evals);
  double mean_dsc = 0, mean_nsd = 0;
  for (const auto& e : evals) {
    mean_dsc += e.mi_dsc / static_cast<double>(evals.size());
    mean_nsd += e.mi_nsd / static_cast<double>(evals.size());
  }
  out << fmt::format("eval: {} frames; mean MI_DSC {:.4f} MI_NSD {:.4f}; 5% percentile {:.4f} / {:.4f}\n",
                     evals.size(), mean_dsc, mean_nsd, agg.mi_dsc, agg.mi_nsd);
  return kOk;
}

int cmd_rank(const Global& g, const RankArgs& a, std::ostream& out) {
  const auto format = ranking::parse_report_format(a.format);
  if (a.algorithms.empty() == a.aggregates.empty()) {
    throw ConfigError("rank needs either --algorithm NAME=FILE entries or --aggregates FILE");
  }
  Echo echo("rank");
  echo.add_global(g);
  echo.add("algorithm", a.algorithms);
  echo.add("aggregates", a.aggregates);
  echo.add("fps", a.fps);
  echo.add("percentile", a.percentile);
  echo.add("format", a.format);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "rank", out);

  std::map<std::string, double> fps;
  for (const auto& f : a.fps) {
    const auto [name, value] = split_assignment(f, "fps");
    try {
      fps[name] = std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("--fps value for " + name + " is not a number");
    }
  }
  auto fps_of = [&](const std::string& name) -> std::optional<double> {
    const auto it = fps.find(name);
    return it == fps.end() ? std::nullopt : std::optional<double>(it->second);
  };

  ranking::StageReport report;
  if (!a.aggregates.empty()) {
    auto rows = ranking::read_aggregate_csv(a.aggregates);
    for (auto& r : rows) {
      if (auto f = fps_of(r.name)) r.fps = f;
    }
    report = ranking::build_report(rows);
  } else {
    std::vector<ranking::AlgorithmFrames> algs;
    for (const auto& spec : a.algorithms) {
      const auto [name, path] = split_assignment(spec, "algorithm");
      algs.push_back({name, metrics::read_frame_evals(path), fps_of(name)});
    }
    report = ranking::build_report(algs, a.percentile);
  }
  const std::string file = format == ranking::ReportFormat::kCsv    ? "report.csv"
                           : format == ranking::ReportFormat::kJson ? "report.json"
                                                                    : "boxplot.json";
  std::ofstream f(dir / file);
  if (!f) throw IoError("cannot write " + (dir / file).string());
  f << ranking::emit_report(report, format);

  out << fmt::format("{:>4} {:>4}  {:<24} {:>8} {:>8}\n", "dsc", "nsd", "name", "MI_DSC", "MI_NSD");
  for (const auto& r : report.rows) {
    out << fmt::format("{:>4} {:>4}  {:<24} {:>8.3f} {:>8.3f}\n", r.rank_dsc, r.rank_nsd, r.name,
                       r.mi_dsc, r.mi_nsd);
  }
  out << "rank: -> " << (dir / file).string() << "\n";
  return kOk;
}

int cmd_bench(const Global& g, const BenchArgs& a, std::ostream& out) {
  if (a.variants.empty()) throw ConfigError("bench needs at least one --variant");
  Echo echo("bench");
  echo.add_global(g);
  echo.add("variant", a.variants);
  echo.add("weights", a.weights);
  echo.add("input", a.input);
  echo.add("stage", a.stage);
  echo.add("frames", a.frames);
  echo.add("size", a.size);
  echo.add("repetitions", a.repetitions);
  echo.add("warmup", a.warmup);
  echo.add("suppress-detections", a.suppress);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "bench", out);

  std::vector<Tensor> frames;
  if (!a.input.empty()) {
    for (const auto& f : png_files(a.input)) frames.push_back(image_to_tensor(read_rgb_png(f)));
  } else {
    data::SynthOptions so;
    so.stage = data::parse_stage(a.stage);
    so.seed = g.seed;
    so.width = so.height = a.size;
    for (std::size_t i = 0; i < a.frames; ++i) frames.push_back(image_to_tensor(data::synth_frame(so, i).image));
  }
  if (frames.empty()) throw ContractViolation("bench: empty frame sequence");

  std::vector<pipeline::SegmentationModel> models;
  models.reserve(a.variants.size());
  for (const auto& v : a.variants) {
    pipeline::VariantSpec spec;
    spec.insertion = pipeline::parse_insertion(v);
    WeightStore w = load_or_init(a.weights, spec, g.seed);
    if (a.suppress) pipeline::suppress_detections(w, spec);
    models.emplace_back(spec, w);
  }
  std::vector<const pipeline::SegmentationModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  const auto results = bench::measure_interleaved(ptrs, frames, {a.repetitions, a.warmup});

  const std::size_t h = frames.front().dim(1), w = frames.front().dim(2);
  nlohmann::json runs = nlohmann::json::array(), ops = nlohmann::json::array();
  std::vector<bench::SummaryRow> rows;
  out << fmt::format("{:<16} {:>9} {:>9} {:>9} {:>12} {:>14}\n", "variant", "mean fps", "min", "max",
                     "attn ms/frm", "attn entries");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto oc = bench::op_count_report(models[i].spec(), h, w);
    runs.push_back(nlohmann::json::parse(bench::to_json(r)));
    ops.push_back(nlohmann::json::parse(bench::to_json(oc)));
    rows.push_back({r.variant, std::nullopt, std::nullopt, r.mean_fps});
    out << fmt::format("{:<16} {:>9.2f} {:>9.2f} {:>9.2f} {:>12.3f} {:>14}\n", r.variant, r.mean_fps,
                       *std::min_element(r.runs.begin(), r.runs.end()),
                       *std::max_element(r.runs.begin(), r.runs.end()), r.profile.attention * 1e3,
                       oc.attention_entries);
  }
  std::ofstream(dir / "bench.json") << runs.dump(2) << '\n';
  std::ofstream(dir / "op_count.json") << ops.dump(2) << '\n';
  std::ofstream(dir / "bench.csv") << bench::summary_csv(rows);
  out << fmt::format("bench: {} frames {}x{}, {} timed runs -> {}\n", frames.size(), h, w,
                     a.repetitions, dir.string());
  return kOk;
}

int cmd_gradcheck(const Global& g, const GradcheckArgs& a, std::ostream& out) {
  Echo echo("gradcheck");
  echo.add_global(g);
  echo.add("seeds", a.seeds);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "gradcheck", out);

  double worst = 0.0;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    Rng rng(derive_seed(g.seed, s));
    attention::AttentionConfig cfg{1 + rng.uniform_index(4), 2, 1 + rng.uniform_index(2), s % 2 == 0};
    const std::size_t h = 1 + rng.uniform_index(4), w = 1 + rng.uniform_index(4);
    const auto weights = attention::random_weights(cfg, rng);
    const Tensor x = verify::random_tensor({cfg.channels, h, w}, rng);
    const Tensor up = verify::random_tensor({cfg.channels, h, w}, rng);
    const auto gc = verify::gradient_check(x, weights, cfg, up, verify::kFiniteDifferenceStep);
    worst = std::max(worst, gc.max_relative_error);
    out << fmt::format("seed {:>2}: C={} {}x{} R={} shared={} groups={} max rel err {:.3g} ({})\n", s,
                       cfg.channels, h, w, cfg.recurrence, cfg.share_weights, gc.groups,
                       gc.max_relative_error, gc.worst_group);
  }
  const bool ok = worst <= verify::kGradientTolerance;
  out << fmt::format("gradcheck: {} (max {:.3g}, tolerance {:g})\n", ok ? "PASS" : "FAIL", worst,
                     verify::kGradientTolerance);
  return ok ? kOk : kFailure;
}

int cmd_selftest(const Global& g, const SelftestArgs& a, std::ostream& out, std::ostream& err) {
  Echo echo("selftest");
  echo.add_global(g);
  echo.add("quick", a.quick);
  echo.add("only", a.only);
  const fs::path dir = prepare_out_dir(g);
  emit_echo(echo, dir, "selftest", out);

  verify::SuiteOptions o;
  if (g.seed != 0) o.seed = g.seed;
  o.work_dir = dir / "selftest";
  fs::create_directories(o.work_dir);
  if (a.quick) {
    o.throughput_frames = 16;
    o.throughput_size = 64;
    o.repetitions = 3;
    o.warmup = 1;
  }
  o.run_cli = [&err](const std::vector<std::string>& args) {
    std::ostringstream sink;
    return run(args, sink, err);
  };
  bool all = true;
  for (int id = 1; id <= verify::kCriteria; ++id) {
    if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), id) == a.only.end()) continue;
    const auto r = verify::run_check(id, o);
    out << verify::format_line(r) << std::endl;
    all = all && r.passed;
  }
  return all ? kOk : kFailure;
}

void configure_logging(const Global& g) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("ccseg");
    l->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(g.quiet ? spdlog::level::warn
                     : g.verbose > 0 ? spdlog::level::debug
                                     : spdlog::level::info);
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& s) {
    return s == flag || s.rfind(flag + "=", 0) == 0;
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Criss-cross attention instance segmentation toolkit", "ccseg"};
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value config file; [section] per subcommand, flags win");

  Global g;
  app.add_option("--seed", g.seed, "Seed for generation and weight initialization");
  app.add_option("--out-dir", g.out_dir, std::string("Output directory (env ") + kOutDirEnv + ")");
  app.add_flag("-v,--verbose", g.verbose, "More logging");
  app.add_flag("-q,--quiet", g.quiet, "Warnings and errors only");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with manifest");
  synth->add_option("--stage", sa.stage, "train|1|2|3")->capture_default_str();
  synth->add_option("--count", sa.count)->capture_default_str();
  synth->add_option("--width", sa.width)->capture_default_str();
  synth->add_option("--height", sa.height)->capture_default_str();
  synth->add_option("--max-instruments", sa.max_instruments)->capture_default_str();

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Segment a PNG or a directory of PNGs");
  infer->add_option("--input", ia.input, "Image file or directory")->required();
  infer->add_option("--variant", ia.variant, "base|backbone|fpn|full")->capture_default_str();
  infer->add_option("--weights", ia.weights, "CCSEG1 weights file (default: seeded init)");
  infer->add_option("--save-weights", ia.save_weights, "Write the weights in use");
  infer->add_option("--confidence", ia.confidence, "Display threshold")->capture_default_str();
  infer->add_option("--workers", ia.workers, "Parallel frames")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score predicted label maps against ground truth");
  eval->add_option("--gt", ea.gt, "Ground-truth label map directory")->required();
  eval->add_option("--pred", ea.pred, "Predicted label map directory")->required();
  eval->add_option("--tau", ea.tau, "NSD tolerance in pixels")->capture_default_str();

  RankArgs ra;
  auto* rank = app.add_subcommand("rank", "Aggregate and rank algorithms");
  rank->add_option("--algorithm", ra.algorithms, "NAME=frame_evals.jsonl (repeatable)");
  rank->add_option("--aggregates", ra.aggregates, "CSV name,mi_dsc,mi_nsd[,fps]");
  rank->add_option("--fps", ra.fps, "NAME=FPS (repeatable)");
  rank->add_option("--percentile", ra.percentile)->capture_default_str();
  rank->add_option("--format", ra.format, "csv|json|boxplot-data")->capture_default_str();

  BenchArgs ba;
  auto* benchcmd = app.add_subcommand("bench", "Throughput and op counts per variant");
  benchcmd->add_option("--variant", ba.variants, "Variants (repeatable)")->capture_default_str();
  benchcmd->add_option("--weights", ba.weights, "CCSEG1 weights file (default: seeded init)");
  benchcmd->add_option("--input", ba.input, "Directory of frames instead of a synthetic sequence");
  benchcmd->add_option("--stage", ba.stage, "Synthetic sequence stage")->capture_default_str();
  benchcmd->add_option("--frames", ba.frames)->capture_default_str();
  benchcmd->add_option("--size", ba.size, "Synthetic frame side")->capture_default_str();
  benchcmd->add_option("--repetitions", ba.repetitions)->capture_default_str();
  benchcmd->add_option("--warmup", ba.warmup)->capture_default_str();
  benchcmd->add_flag("--suppress-detections", ba.suppress, "Force empty outputs");

  GradcheckArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of attention gradients");
  grad->add_option("--seeds", ga.seeds)->capture_default_str();

  SelftestArgs ta;
  auto* self = app.add_subcommand("selftest", "Run the acceptance checks");
  self->add_flag("--quick", ta.quick, "Shorter throughput run");
  self->add_option("--only", ta.only, "Criterion numbers to run");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return dynamic_cast<const CLI::FileError*>(&e) ? kIoFailure : kFailure;
  }
  if (!has_flag(args, "--out-dir")) {
    if (const char* env = std::getenv(kOutDirEnv); env && *env) g.out_dir = env;
  }
  configure_logging(g);

  try {
    if (*synth) return cmd_synth(g, sa, out);
    if (*infer) return cmd_infer(g, ia, out);
    if (*eval) return cmd_eval(g, ea, out);
    if (*rank) return cmd_rank(g, ra, out);
    if (*benchcmd) return cmd_bench(g, ba, out);
    if (*grad) return cmd_gradcheck(g, ga, out);
    if (*self) return cmd_selftest(g, ta, out, err);
  } catch (const data::ManifestError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == data::ManifestError::Kind::kMalformedRecord ? kFailure : kIoFailure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  err << app.help();
  return kFailure;
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace ccseg::cli
