#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ccseg::verify {

struct CheckResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs a command line (without the program name); returns its exit status.
using CliRunner = std::function<int(const std::vector<std::string>&)>;

struct SuiteOptions {
  std::uint64_t seed = 20200901;
  std::filesystem::path work_dir;  // scratch space for file-based checks
  std::size_t throughput_frames = 64;
  std::size_t throughput_size = 128;
  std::size_t repetitions = 10;
  std::size_t warmup = 2;
  CliRunner run_cli;  // required by the end-to-end check
};

// Tolerances.
inline constexpr double kNsdTolerance = 1e-9;
inline constexpr double kDenseTolerance = 1e-10;
inline constexpr double kGradientTolerance = 1e-4;
inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kDenseRatioBound = 0.04;
inline constexpr double kSaturationConfidence = 0.999;
inline constexpr std::size_t kMetricCases = 120;
inline constexpr std::size_t kInfluenceDraws = 20;
// Keeps softmax away from saturation so every real dependency exceeds the
// influence tolerance.
inline constexpr double kInfluenceInputScale = 0.5;
inline constexpr std::size_t kGradientSeeds = 10;
inline constexpr std::size_t kAffinitySizes = 50;

CheckResult check_metrics_oracles(const SuiteOptions& o);      // 1
CheckResult check_attention_structure(const SuiteOptions& o);  // 2
CheckResult check_gradients(const SuiteOptions& o);            // 3
CheckResult check_complexity(const SuiteOptions& o);           // 4
CheckResult check_pipeline_variants(const SuiteOptions& o);    // 5
CheckResult check_aggregation(const SuiteOptions& o);          // 6
CheckResult check_throughput(const SuiteOptions& o);           // 7
CheckResult check_data_pipeline(const SuiteOptions& o);        // 8
CheckResult check_end_to_end(const SuiteOptions& o);           // 9

inline constexpr int kCriteria = 9;
// Runs one criterion by number, timing it and turning exceptions into failures.
CheckResult run_check(int id, const SuiteOptions& o);

// "PASS  3  gradient check ... (1.2 s)"
std::string format_line(const CheckResult& r);

}  // namespace ccseg::verify
