#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccseg/label_map.hpp"

namespace ccseg::metrics {

inline constexpr double kDefaultTau = 13.0;

// 2|Y n Yhat| / (|Y| + |Yhat|). At least one mask must be nonempty.
double dsc(const BinaryMask& y, const BinaryMask& y_hat);

// Mask pixels with a 4-neighbour outside the mask; the image edge counts as outside.
BinaryMask boundary(const BinaryMask& mask);

struct DistanceMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

// Exact Euclidean distance from every pixel to the nearest set pixel of `points`.
// Separable lower-envelope algorithm over squared distances (two 1-D passes).
DistanceMap distance_transform(const BinaryMask& points);

// Normalized surface dice with tolerance `tau` in pixels. Both masks nonempty.
double nsd(const BinaryMask& y, const BinaryMask& y_hat, double tau = kDefaultTau);

struct Match {
  std::uint16_t gt = 0;
  std::uint16_t pred = 0;
  double dsc = 0.0;
  bool operator==(const Match&) const = default;
};

struct Matching {
  std::vector<Match> pairs;  // ascending gt id
  std::vector<std::uint16_t> unmatched_gt;
  std::vector<std::uint16_t> unmatched_pred;
  double total_dsc() const;
};

enum class MatchSolver { kAuto, kExhaustive, kHungarian };

// Pairwise Dice between every gt instance (rows) and pred instance (columns),
// ids ascending as returned by InstanceLabelMap::instance_ids().
std::vector<std::vector<double>> pairwise_dsc(const InstanceLabelMap& gt,
                                              const InstanceLabelMap& pred);

// One-to-one assignment maximizing summed Dice over pairs with Dice > 0.
// kAuto searches exhaustively when min(N, M) <= 6 and uses the Hungarian method
// otherwise. Ties go to the lexicographically smallest (gt, pred) pair list.
Matching match_instances(const InstanceLabelMap& gt, const InstanceLabelMap& pred,
                         MatchSolver solver = MatchSolver::kAuto);

struct InstanceScore {
  std::uint16_t gt = 0;
  std::uint16_t pred = 0;
  double dsc = 0.0;
  double nsd = 0.0;
};

struct FrameEval {
  std::string frame_id;
  double mi_dsc = 0.0;
  double mi_nsd = 0.0;
  std::vector<InstanceScore> matched;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  std::size_t n_matched = 0;
};

// Multi-instance scores: summed matched scores over matched + unmatched_gt +
// unmatched_pred. Both maps empty -> (1, 1); exactly one empty -> (0, 0).
FrameEval frame_scores(const InstanceLabelMap& gt, const InstanceLabelMap& pred,
                       double tau = kDefaultTau);

// JSON-lines persistence, one object per frame.
std::string to_json_line(const FrameEval& e);
FrameEval parse_json_line(const std::string& line);
void write_frame_evals(const std::vector<FrameEval>& evals, const std::filesystem::path& path);
std::vector<FrameEval> read_frame_evals(const std::filesystem::path& path);

}  // namespace ccseg::metrics
