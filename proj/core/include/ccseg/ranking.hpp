#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccseg/metrics.hpp"

namespace ccseg::ranking {

inline constexpr double kRobustnessPercentile = 0.05;

// Linear-interpolation quantile: h = (n - 1) p + 1 on the ascending sample
// (1-based), result x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double percentile(std::span<const double> values, double p);

struct Aggregate {
  double mi_dsc = 0.0;
  double mi_nsd = 0.0;
};

Aggregate aggregate_algorithm(std::span<const metrics::FrameEval> frames,
                              double p = kRobustnessPercentile);

struct RankedEntry {
  std::string name;
  double score = 0.0;
  std::size_t rank = 0;
};

// Descending by score, competition ranking (1, 1, 3, ...), ties ordered by name.
std::vector<RankedEntry> rank_algorithms(const std::vector<std::pair<std::string, double>>& entries);

struct ReportRow {
  std::string name;
  double mi_dsc = 0.0;
  double mi_nsd = 0.0;
  std::size_t rank_dsc = 0;
  std::size_t rank_nsd = 0;
  std::size_t frame_count = 0;
  std::optional<double> fps;
  std::vector<double> dsc_frames;  // per-frame scores, when known
  std::vector<double> nsd_frames;
};

struct StageReport {
  double percentile = kRobustnessPercentile;
  std::vector<ReportRow> rows;  // ascending rank_dsc, then rank_nsd, then name
};

struct AlgorithmFrames {
  std::string name;
  std::vector<metrics::FrameEval> frames;
  std::optional<double> fps;
};

struct AlgorithmAggregate {
  std::string name;
  Aggregate scores;
  std::optional<double> fps;
};

StageReport build_report(const std::vector<AlgorithmFrames>& algorithms,
                         double p = kRobustnessPercentile);
// For published aggregates where per-frame scores are unavailable.
StageReport build_report(const std::vector<AlgorithmAggregate>& algorithms);

enum class ReportFormat { kCsv, kJson, kBoxplotData };
ReportFormat parse_report_format(const std::string& text);

std::string emit_report(const StageReport& report, ReportFormat format);

// CSV with header name,mi_dsc,mi_nsd[,fps].
std::vector<AlgorithmAggregate> read_aggregate_csv(const std::filesystem::path& path);

}  // namespace ccseg::ranking
