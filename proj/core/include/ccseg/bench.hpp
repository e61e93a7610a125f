#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ccseg/pipeline.hpp"

namespace ccseg::bench {

struct BenchResult {
  std::string variant;
  std::size_t height = 0, width = 0;
  std::size_t frames = 0;
  std::vector<double> runs;  // fps per timed repetition
  double mean_fps = 0.0;
  pipeline::StageProfile profile;  // mean seconds per frame over timed runs
};

struct ThroughputOptions {
  std::size_t repetitions = 10;
  std::size_t warmup = 2;
};

double mean(const std::vector<double>& values);

// Sequential, single-threaded. Every run must reproduce the first run's outputs
// exactly; a mismatch throws ContractViolation.
BenchResult measure_throughput(const pipeline::SegmentationModel& model,
                               const std::vector<Tensor>& frames,
                               const ThroughputOptions& options = {});

// Like measure_throughput for several models. Models alternate frame by frame
// (rotating the start), and each run's fps is frames over that model's summed
// frame times.
std::vector<BenchResult> measure_interleaved(
    const std::vector<const pipeline::SegmentationModel*>& models,
    const std::vector<Tensor>& frames, const ThroughputOptions& options = {});

// Central interval of the runs, linear-interpolated percentiles.
struct RunSpread {
  double lo = 0.0, hi = 0.0;
};
RunSpread run_spread(const std::vector<double>& runs, double coverage = 0.95);

// Analytic complexity for one variant at one input size.
struct SiteCount {
  std::string site;  // "c3".."c5", "p3".."p7"
  std::size_t height = 0, width = 0, channels = 0;
  std::size_t criss_cross_entries = 0;  // h*w*(h+w-1), per pass
  std::size_t dense_entries = 0;        // (h*w)^2
  std::size_t macs = 0;                 // all passes, projections included
};

struct OpCountReport {
  std::string variant;
  std::size_t height = 0, width = 0;
  std::vector<SiteCount> sites;
  std::size_t attention_entries = 0;
  std::size_t dense_entries = 0;
  std::size_t backbone_macs = 0, attention_macs = 0, fpn_macs = 0, head_macs = 0;
  std::size_t total_macs() const { return backbone_macs + attention_macs + fpn_macs + head_macs; }
};

std::size_t dense_entry_count(std::size_t height, std::size_t width);
OpCountReport op_count_report(const pipeline::VariantSpec& spec, std::size_t height,
                              std::size_t width);

std::string to_json(const BenchResult& r);
std::string to_json(const OpCountReport& r);
// name,mi_dsc,mi_nsd,fps; scores left empty when absent.
struct SummaryRow {
  std::string name;
  std::optional<double> mi_dsc, mi_nsd;
  double fps = 0.0;
};
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace ccseg::bench
