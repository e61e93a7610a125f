#include "ccseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "ccseg/error.hpp"

namespace ccseg {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

std::vector<std::uint16_t> InstanceLabelMap::instance_ids() const {
  std::vector<bool> seen(65536, false);
  for (std::uint16_t v : labels) seen[v] = true;
  std::vector<std::uint16_t> ids;
  for (std::size_t v = 1; v < seen.size(); ++v) {
    if (seen[v]) ids.push_back(static_cast<std::uint16_t>(v));
  }
  return ids;
}

BinaryMask InstanceLabelMap::mask_of(std::uint16_t id) const {
  BinaryMask m(width, height);
  for (std::size_t i = 0; i < labels.size(); ++i) m.pixels[i] = labels[i] == id ? 1 : 0;
  return m;
}

bool InstanceLabelMap::is_background_only() const {
  return std::all_of(labels.begin(), labels.end(), [](std::uint16_t v) { return v == 0; });
}

bool normalize_labels(InstanceLabelMap& map) {
  const auto ids = map.instance_ids();
  std::vector<std::uint16_t> remap(65536, 0);
  bool changed = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    remap[ids[i]] = static_cast<std::uint16_t>(i + 1);
    changed = changed || ids[i] != i + 1;
  }
  if (changed) {
    for (auto& v : map.labels) v = remap[v];
  }
  return changed;
}

}  // namespace ccseg

namespace ccseg::metrics {

namespace {

void require_same_extent(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (a.width != b.width || a.height != b.height) {
    throw ContractViolation(std::string(op) + ": mask extents " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " and " + std::to_string(b.width) + "x" +
                            std::to_string(b.height) + " differ");
  }
}

constexpr double kFar = std::numeric_limits<double>::infinity();

// Squared distance transform of one line, in place. Sites are entries < kFar.
void edt_1d(std::vector<double>& f, std::vector<int>& v, std::vector<double>& z,
            std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kFar) continue;
    const double fq = f[q] + static_cast<double>(q) * q;
    double s = -kFar;
    while (k >= 0) {
      const int p = v[k];
      s = (fq - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kFar : s;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kFar);
    return;
  }
  z[k + 1] = kFar;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

double dsc(const BinaryMask& y, const BinaryMask& y_hat) {
  require_same_extent(y, y_hat, "dsc");
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < y.pixels.size(); ++i) {
    const bool p = y.pixels[i] != 0, q = y_hat.pixels[i] != 0;
    a += p;
    b += q;
    both += p && q;
  }
  if (a + b == 0) throw ContractViolation("dsc: both masks are empty");
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

BinaryMask boundary(const BinaryMask& mask) {
  if (mask.empty()) throw ContractViolation("boundary: empty mask");
  const std::size_t w = mask.width, h = mask.height;
  BinaryMask out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
      if (edge || !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
          !mask.at(x, y + 1)) {
        out.at(x, y) = 1;
      }
    }
  }
  return out;
}

DistanceMap distance_transform(const BinaryMask& points) {
  if (points.empty()) throw ContractViolation("distance_transform: empty point set");
  const std::size_t w = points.width, h = points.height;
  std::vector<double> sq(w * h);
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = points.pixels[i] ? 0.0 : kFar;

  const std::size_t n = std::max(w, h);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  // columns
  std::vector<double> f(h), out(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) f[y] = sq[y * w + x];
    edt_1d(f, v, z, out);
    for (std::size_t y = 0; y < h; ++y) sq[y * w + x] = out[y];
  }
  // rows
  f.resize(w);
  out.resize(w);
  for (std::size_t y = 0; y < h; ++y) {
    std::copy(sq.begin() + y * w, sq.begin() + (y + 1) * w, f.begin());
    edt_1d(f, v, z, out);
    std::copy(out.begin(), out.end(), sq.begin() + y * w);
  }
  DistanceMap dm{w, h, std::move(sq)};
  for (double& d : dm.values) d = std::sqrt(d);
  return dm;
}

double nsd(const BinaryMask& y, const BinaryMask& y_hat, double tau) {
  require_same_extent(y, y_hat, "nsd");
  if (y.empty() || y_hat.empty()) throw ContractViolation("nsd: both masks must be nonempty");
  if (!(tau >= 0.0)) throw ContractViolation("nsd: tau must be nonnegative");
  const BinaryMask by = boundary(y), bh = boundary(y_hat);
  const DistanceMap to_y = distance_transform(by), to_h = distance_transform(bh);
  std::size_t close = 0, total = 0;
  for (std::size_t i = 0; i < by.pixels.size(); ++i) {
    if (by.pixels[i]) {
      ++total;
      close += to_h.values[i] <= tau;
    }
    if (bh.pixels[i]) {
      ++total;
      close += to_y.values[i] <= tau;
    }
  }
  return static_cast<double>(close) / static_cast<double>(total);
}

FrameEval frame_scores(const InstanceLabelMap& gt, const InstanceLabelMap& pred, double tau) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw ContractViolation("frame_scores: label maps are " + std::to_string(gt.width) + "x" +
                            std::to_string(gt.height) + " and " + std::to_string(pred.width) +
                            "x" + std::to_string(pred.height));
  }
  FrameEval e;
  e.n_gt = gt.instance_ids().size();
  e.n_pred = pred.instance_ids().size();
  if (e.n_gt == 0 && e.n_pred == 0) {
    e.mi_dsc = e.mi_nsd = 1.0;
    return e;
  }
  if (e.n_gt == 0 || e.n_pred == 0) return e;

  const Matching m = match_instances(gt, pred);
  double dsc_sum = 0.0, nsd_sum = 0.0;
  for (const Match& p : m.pairs) {
    const double s = nsd(gt.mask_of(p.gt), pred.mask_of(p.pred), tau);
    e.matched.push_back({p.gt, p.pred, p.dsc, s});
    dsc_sum += p.dsc;
    nsd_sum += s;
  }
  e.n_matched = m.pairs.size();
  const auto denom = static_cast<double>(e.n_gt + e.n_pred - e.n_matched);
  e.mi_dsc = dsc_sum / denom;
  e.mi_nsd = nsd_sum / denom;
  return e;
}

std::string to_json_line(const FrameEval& e) {
  nlohmann::json j;
  j["frame"] = e.frame_id;
  j["mi_dsc"] = e.mi_dsc;
  j["mi_nsd"] = e.mi_nsd;
  j["n_gt"] = e.n_gt;
  j["n_pred"] = e.n_pred;
  j["n_matched"] = e.n_matched;
  auto& inst = j["instances"] = nlohmann::json::array();
  for (const auto& s : e.matched) {
    inst.push_back({{"gt", s.gt}, {"pred", s.pred}, {"dsc", s.dsc}, {"nsd", s.nsd}});
  }
  return j.dump();
}

FrameEval parse_json_line(const std::string& line) {
  FrameEval e;
  try {
    const auto j = nlohmann::json::parse(line);
    e.frame_id = j.at("frame").get<std::string>();
    e.mi_dsc = j.at("mi_dsc").get<double>();
    e.mi_nsd = j.at("mi_nsd").get<double>();
    e.n_gt = j.value("n_gt", std::size_t{0});
    e.n_pred = j.value("n_pred", std::size_t{0});
    e.n_matched = j.value("n_matched", std::size_t{0});
    if (j.contains("instances")) {
      for (const auto& s : j.at("instances")) {
        e.matched.push_back({s.at("gt").get<std::uint16_t>(), s.at("pred").get<std::uint16_t>(),
                             s.at("dsc").get<double>(), s.at("nsd").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ContractViolation(std::string("malformed FrameEval record: ") + ex.what());
  }
  if (!(e.mi_dsc >= 0.0 && e.mi_dsc <= 1.0 && e.mi_nsd >= 0.0 && e.mi_nsd <= 1.0)) {
    throw ContractViolation("FrameEval record '" + e.frame_id + "' has scores outside [0,1]");
  }
  return e;
}

void write_frame_evals(const std::vector<FrameEval>& evals, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& e : evals) out << to_json_line(e) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<FrameEval> read_frame_evals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<FrameEval> evals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    evals.push_back(parse_json_line(line));
  }
  return evals;
}

}  // namespace ccseg::metrics
