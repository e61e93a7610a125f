#include "ccseg/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ccseg/error.hpp"

namespace ccseg::ranking {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw ContractViolation("percentile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("percentile: p outside [0,1]");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double h = static_cast<double>(x.size() - 1) * p + 1.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));  // 1-based
  if (lo >= x.size()) return x.back();
  const double frac = h - static_cast<double>(lo);
  return x[lo - 1] + frac * (x[lo] - x[lo - 1]);
}

Aggregate aggregate_algorithm(std::span<const metrics::FrameEval> frames, double p) {
  if (frames.empty()) throw ContractViolation("aggregate_algorithm: no frames");
  std::vector<double> d, n;
  d.reserve(frames.size());
  n.reserve(frames.size());
  for (const auto& f : frames) {
    d.push_back(f.mi_dsc);
    n.push_back(f.mi_nsd);
  }
  return {percentile(d, p), percentile(n, p)};
}

std::vector<RankedEntry> rank_algorithms(
    const std::vector<std::pair<std::string, double>>& entries) {
  std::set<std::string> names;
  for (const auto& [name, score] : entries) {
    if (!names.insert(name).second) {
      throw ContractViolation("rank_algorithms: duplicate algorithm name '" + name + "'");
    }
  }
  std::vector<RankedEntry> out;
  for (const auto& [name, score] : entries) out.push_back({name, score, 0});
  std::sort(out.begin(), out.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = (i > 0 && out[i].score == out[i - 1].score) ? out[i - 1].rank : i + 1;
  }
  return out;
}

namespace {

void assign_ranks(StageReport& report) {
  std::vector<std::pair<std::string, double>> d, n;
  for (const auto& r : report.rows) {
    d.emplace_back(r.name, r.mi_dsc);
    n.emplace_back(r.name, r.mi_nsd);
  }
  const auto rd = rank_algorithms(d), rn = rank_algorithms(n);
  for (auto& row : report.rows) {
    for (const auto& e : rd) {
      if (e.name == row.name) row.rank_dsc = e.rank;
    }
    for (const auto& e : rn) {
      if (e.name == row.name) row.rank_nsd = e.rank;
    }
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.rank_dsc != b.rank_dsc) return a.rank_dsc < b.rank_dsc;
    if (a.rank_nsd != b.rank_nsd) return a.rank_nsd < b.rank_nsd;
    return a.name < b.name;
  });
}

std::string num(double v) { return fmt::format("{}", v); }

nlohmann::json box_stats(std::vector<double> frames, double p) {
  std::sort(frames.begin(), frames.end());
  nlohmann::json j;
  j["frames"] = frames;
  if (!frames.empty()) {
    j["min"] = frames.front();
    j["q1"] = percentile(frames, 0.25);
    j["median"] = percentile(frames, 0.5);
    j["q3"] = percentile(frames, 0.75);
    j["max"] = frames.back();
    j["p05"] = percentile(frames, p);
  }
  return j;
}

}  // namespace

StageReport build_report(const std::vector<AlgorithmFrames>& algorithms, double p) {
  StageReport report;
  report.percentile = p;
  for (const auto& a : algorithms) {
    const Aggregate agg = aggregate_algorithm(a.frames, p);
    ReportRow row{a.name, agg.mi_dsc, agg.mi_nsd, 0, 0, a.frames.size(), a.fps, {}, {}};
    for (const auto& f : a.frames) {
      row.dsc_frames.push_back(f.mi_dsc);
      row.nsd_frames.push_back(f.mi_nsd);
    }
    report.rows.push_back(std::move(row));
  }
  assign_ranks(report);
  return report;
}

StageReport build_report(const std::vector<AlgorithmAggregate>& algorithms) {
  StageReport report;
  for (const auto& a : algorithms) {
    report.rows.push_back({a.name, a.scores.mi_dsc, a.scores.mi_nsd, 0, 0, 0, a.fps, {}, {}});
  }
  assign_ranks(report);
  return report;
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  if (text == "boxplot-data" || text == "boxplot") return ReportFormat::kBoxplotData;
  throw ConfigError("unknown report format '" + text + "' (expected csv|json|boxplot-data)");
}

std::string emit_report(const StageReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: {
      std::ostringstream os;
      os << "name,mi_dsc,mi_nsd,rank_dsc,rank_nsd,fps\n";
      for (const auto& r : report.rows) {
        os << r.name << ',' << num(r.mi_dsc) << ',' << num(r.mi_nsd) << ',' << r.rank_dsc << ','
           << r.rank_nsd << ',' << (r.fps ? num(*r.fps) : std::string()) << '\n';
      }
      return os.str();
    }
    case ReportFormat::kJson: {
      nlohmann::json j;
      j["percentile"] = report.percentile;
      j["algorithms"] = nlohmann::json::array();
      for (const auto& r : report.rows) {
        nlohmann::json a{{"name", r.name},          {"mi_dsc", r.mi_dsc},
                         {"mi_nsd", r.mi_nsd},      {"rank_dsc", r.rank_dsc},
                         {"rank_nsd", r.rank_nsd},  {"frames", r.frame_count}};
        a["fps"] = r.fps ? nlohmann::json(*r.fps) : nlohmann::json(nullptr);
        j["algorithms"].push_back(std::move(a));
      }
      return j.dump(2) + "\n";
    }
    case ReportFormat::kBoxplotData: {
      nlohmann::json j;
      j["percentile"] = report.percentile;
      j["algorithms"] = nlohmann::json::array();
      for (const auto& r : report.rows) {
        j["algorithms"].push_back({{"name", r.name},
                                   {"mi_dsc", box_stats(r.dsc_frames, report.percentile)},
                                   {"mi_nsd", box_stats(r.nsd_frames, report.percentile)}});
      }
      return j.dump(2) + "\n";
    }
  }
  throw ConfigError("unknown report format");
}

std::vector<AlgorithmAggregate> read_aggregate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<AlgorithmAggregate> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) {
      throw ContractViolation(path.string() + ":" + std::to_string(lineno) +
                              ": expected name,mi_dsc,mi_nsd[,fps]");
    }
    try {
      AlgorithmAggregate a{cells[0], {std::stod(cells[1]), std::stod(cells[2])}, std::nullopt};
      if (cells.size() > 3 && !cells[3].empty()) a.fps = std::stod(cells[3]);
      out.push_back(std::move(a));
    } catch (const std::exception&) {
      throw ContractViolation(path.string() + ":" + std::to_string(lineno) +
                              ": non-numeric score");
    }
  }
  return out;
}

}  // namespace ccseg::ranking
