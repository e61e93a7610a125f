#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccseg/error.hpp"
#include "ccseg/metrics.hpp"

namespace ccseg::metrics {

namespace {

constexpr std::size_t kExhaustiveLimit = 6;
// Sums differing only by summation order count as equal.
constexpr double kTieTolerance = 1e-12;

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;  // (gt idx, pred idx)

PairList sorted(PairList p) {
  std::sort(p.begin(), p.end());
  return p;
}

// Depth-first over the smaller side; candidates restricted to Dice > 0.
class ExhaustiveSearch {
 public:
  explicit ExhaustiveSearch(const std::vector<std::vector<double>>& scores) : scores_(scores) {
    rows_ = scores.size();
    cols_ = rows_ ? scores[0].size() : 0;
    transpose_ = cols_ < rows_;
  }

  PairList run() {
    const std::size_t outer = transpose_ ? cols_ : rows_;
    const std::size_t inner = transpose_ ? rows_ : cols_;
    used_.assign(inner, false);
    recurse(0, outer, 0.0);
    return best_;
  }

 private:
  double score(std::size_t o, std::size_t i) const {
    return transpose_ ? scores_[i][o] : scores_[o][i];
  }

  void recurse(std::size_t o, std::size_t outer, double sum) {
    if (o == outer) {
      PairList cand;
      for (const auto& [a, b] : current_) cand.emplace_back(transpose_ ? b : a, transpose_ ? a : b);
      cand = sorted(std::move(cand));
      const bool tie = std::abs(sum - best_sum_) <= kTieTolerance;
      if (!has_best_ || (!tie && sum > best_sum_) || (tie && cand < best_)) {
        has_best_ = true;
        best_sum_ = sum;
        best_ = std::move(cand);
      }
      return;
    }
    for (std::size_t i = 0; i < used_.size(); ++i) {
      const double s = score(o, i);
      if (used_[i] || !(s > 0.0)) continue;
      used_[i] = true;
      current_.emplace_back(o, i);
      recurse(o + 1, outer, sum + s);
      current_.pop_back();
      used_[i] = false;
    }
    recurse(o + 1, outer, sum);
  }

  const std::vector<std::vector<double>>& scores_;
  std::size_t rows_ = 0, cols_ = 0;
  bool transpose_ = false;
  std::vector<bool> used_;
  PairList current_;
  PairList best_;
  double best_sum_ = 0.0;
  bool has_best_ = false;
};

// Minimum-cost square assignment (shortest augmenting path, O(n^3)).
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

PairList solve_hungarian(const std::vector<std::vector<double>>& scores) {
  const std::size_t rows = scores.size(), cols = rows ? scores[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) cost[r][c] = -scores[r][c];
  }
  const auto assign = hungarian(cost);
  PairList out;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = assign[r];
    if (c < cols && scores[r][c] > 0.0) out.emplace_back(r, c);
  }
  return out;
}

}  // namespace

double Matching::total_dsc() const {
  double s = 0.0;
  for (const auto& p : pairs) s += p.dsc;
  return s;
}

std::vector<std::vector<double>> pairwise_dsc(const InstanceLabelMap& gt,
                                              const InstanceLabelMap& pred) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw ContractViolation("pairwise_dsc: label map extents differ");
  }
  const auto gt_ids = gt.instance_ids(), pred_ids = pred.instance_ids();
  std::vector<std::size_t> gt_index(65536, 0), pred_index(65536, 0);
  for (std::size_t i = 0; i < gt_ids.size(); ++i) gt_index[gt_ids[i]] = i;
  for (std::size_t i = 0; i < pred_ids.size(); ++i) pred_index[pred_ids[i]] = i;

  std::vector<std::size_t> gt_area(gt_ids.size(), 0), pred_area(pred_ids.size(), 0);
  std::vector<std::vector<std::size_t>> inter(gt_ids.size(),
                                              std::vector<std::size_t>(pred_ids.size(), 0));
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const std::uint16_t g = gt.labels[i], p = pred.labels[i];
    if (g) ++gt_area[gt_index[g]];
    if (p) ++pred_area[pred_index[p]];
    if (g && p) ++inter[gt_index[g]][pred_index[p]];
  }
  std::vector<std::vector<double>> out(gt_ids.size(), std::vector<double>(pred_ids.size(), 0.0));
  for (std::size_t r = 0; r < gt_ids.size(); ++r) {
    for (std::size_t c = 0; c < pred_ids.size(); ++c) {
      out[r][c] = 2.0 * static_cast<double>(inter[r][c]) /
                  static_cast<double>(gt_area[r] + pred_area[c]);
    }
  }
  return out;
}

Matching match_instances(const InstanceLabelMap& gt, const InstanceLabelMap& pred,
                         MatchSolver solver) {
  const auto gt_ids = gt.instance_ids(), pred_ids = pred.instance_ids();
  const auto scores = pairwise_dsc(gt, pred);
  PairList pairs;
  if (!gt_ids.empty() && !pred_ids.empty()) {
    const bool exhaustive =
        solver == MatchSolver::kExhaustive ||
        (solver == MatchSolver::kAuto && std::min(gt_ids.size(), pred_ids.size()) <= kExhaustiveLimit);
    pairs = exhaustive ? ExhaustiveSearch(scores).run() : sorted(solve_hungarian(scores));
  }
  Matching m;
  std::vector<bool> gt_used(gt_ids.size(), false), pred_used(pred_ids.size(), false);
  for (const auto& [r, c] : pairs) {
    m.pairs.push_back({gt_ids[r], pred_ids[c], scores[r][c]});
    gt_used[r] = pred_used[c] = true;
  }
  for (std::size_t r = 0; r < gt_ids.size(); ++r) {
    if (!gt_used[r]) m.unmatched_gt.push_back(gt_ids[r]);
  }
  for (std::size_t c = 0; c < pred_ids.size(); ++c) {
    if (!pred_used[c]) m.unmatched_pred.push_back(pred_ids[c]);
  }
  return m;
}

}  // namespace ccseg::metrics
