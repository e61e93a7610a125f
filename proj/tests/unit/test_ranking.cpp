#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ccseg/error.hpp"
#include "ccseg/ranking.hpp"
#include "ccseg/rng.hpp"

namespace ccseg::ranking {
namespace {

std::vector<AlgorithmAggregate> published() {
  return {{"www", {0.31, 0.35}, 5},          {"Uniandes", {0.26, 0.29}, 5},
          {"SQUASH", {0.22, 0.26}, 5},       {"CASIA_SRL", {0.19, 0.27}, 5},
          {"fisensee", {0.17, 0.16}, 18},    {"caresyntax", {0.00, 0.00}, 5},
          {"VIE", {0.00, 0.00}, 5},          {"CCAM-Backbone", {0.313, 0.338}, 49},
          {"CCAM-Full", {0.308, 0.333}, 45}, {"CCAM-FPN", {0.000, 0.000}, 60},
          {"Base YOLACT++", {0.000, 0.000}, 75}};
}

std::vector<std::pair<std::string, double>> dsc_entries() {
  std::vector<std::pair<std::string, double>> e;
  for (const auto& a : published()) e.emplace_back(a.name, a.scores.mi_dsc);
  return e;
}

metrics::FrameEval frame(double d, double n) {
  metrics::FrameEval e;
  e.mi_dsc = d;
  e.mi_nsd = n;
  return e;
}

TEST(Percentile, ClosedForms) {
  EXPECT_EQ(percentile(std::vector<double>{0.2}, 0.05), 0.2);
  EXPECT_EQ(percentile(std::vector<double>{0.2}, 0.9), 0.2);
  std::vector<double> v101, v100;
  for (int i = 0; i <= 100; ++i) v101.push_back(i / 100.0);
  for (int i = 1; i <= 100; ++i) v100.push_back(i / 100.0);
  EXPECT_EQ(percentile(v101, 0.05), 0.05);
  EXPECT_EQ(percentile(v100, 0.05), 0.0595);
}

TEST(Percentile, UnsortedInputAndEndpoints) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + rng.uniform_index(40));
    for (auto& x : v) x = rng.uniform();
    EXPECT_EQ(percentile(v, 0.0), *std::min_element(v.begin(), v.end()));
    EXPECT_EQ(percentile(v, 1.0), *std::max_element(v.begin(), v.end()));
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    EXPECT_EQ(percentile(v, 0.37), percentile(s, 0.37));
  }
  EXPECT_THROW(percentile(std::vector<double>{}, 0.5), ContractViolation);
  EXPECT_THROW(percentile(std::vector<double>{1.0}, 1.5), ContractViolation);
}

TEST(Percentile, Monotone) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(2 + rng.uniform_index(30)), b;
    for (auto& x : a) x = rng.uniform();
    for (double x : a) b.push_back(x + rng.uniform() * 0.1);
    const double p = rng.uniform();
    EXPECT_LE(percentile(a, p), percentile(b, p));
  }
}

TEST(Aggregate, Examples) {
  const std::vector<metrics::FrameEval> perfect(10, frame(1.0, 1.0));
  const Aggregate a = aggregate_algorithm(perfect);
  EXPECT_EQ(a.mi_dsc, 1.0);
  EXPECT_EQ(a.mi_nsd, 1.0);

  const std::vector<metrics::FrameEval> constant(7, frame(0.42, 0.17));
  const Aggregate c = aggregate_algorithm(constant);
  EXPECT_DOUBLE_EQ(c.mi_dsc, 0.42);
  EXPECT_DOUBLE_EQ(c.mi_nsd, 0.17);

  // 6 of 100 frames fail completely: h = 5.95 lands between two zeros.
  std::vector<metrics::FrameEval> failing(94, frame(0.9, 0.8));
  for (int i = 0; i < 6; ++i) failing.push_back(frame(0.0, 0.0));
  const Aggregate f = aggregate_algorithm(failing);
  EXPECT_EQ(f.mi_dsc, 0.0);
  // Exactly 5 of 100: interpolates 95% of the way to the first success.
  std::vector<metrics::FrameEval> five(95, frame(0.9, 0.8));
  for (int i = 0; i < 5; ++i) five.push_back(frame(0.0, 0.0));
  EXPECT_NEAR(aggregate_algorithm(five).mi_dsc, 0.95 * 0.9, 1e-12);

  EXPECT_THROW(aggregate_algorithm(std::vector<metrics::FrameEval>{}), ContractViolation);
}

TEST(Rank, PublishedDscOrdering) {
  const auto r = rank_algorithms(dsc_entries());
  const std::vector<std::string> order = {"CCAM-Backbone", "www",       "CCAM-Full", "Uniandes",
                                          "SQUASH",        "CASIA_SRL", "fisensee"};
  for (std::size_t i = 0; i < order.size(); ++i) {
    EXPECT_EQ(r[i].name, order[i]);
    EXPECT_EQ(r[i].rank, i + 1);
  }
  std::set<std::string> tie;
  for (std::size_t i = order.size(); i < r.size(); ++i) {
    EXPECT_EQ(r[i].rank, 8u);
    tie.insert(r[i].name);
  }
  EXPECT_EQ(tie, (std::set<std::string>{"caresyntax", "VIE", "CCAM-FPN", "Base YOLACT++"}));
}

TEST(Rank, CompetitionStyle) {
  const auto one = rank_algorithms({{"solo", 0.5}});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].rank, 1u);
  const auto r = rank_algorithms({{"b", 0.7}, {"c", 0.2}, {"a", 0.7}});
  EXPECT_EQ(r[0].name, "a");
  EXPECT_EQ(r[0].rank, 1u);
  EXPECT_EQ(r[1].name, "b");
  EXPECT_EQ(r[1].rank, 1u);
  EXPECT_EQ(r[2].rank, 3u);
  EXPECT_THROW(rank_algorithms({{"x", 0.1}, {"x", 0.2}}), ContractViolation);
  EXPECT_TRUE(rank_algorithms({}).empty());
}

TEST(Rank, PermutationAndMonotoneTransformInvariant) {
  const auto base = rank_algorithms(dsc_entries());
  std::mt19937 gen(3);
  for (int t = 0; t < 20; ++t) {
    auto e = dsc_entries();
    std::shuffle(e.begin(), e.end(), gen);
    const auto r = rank_algorithms(e);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_EQ(r[i].name, base[i].name);
      EXPECT_EQ(r[i].rank, base[i].rank);
    }
    for (auto& [name, s] : e) s = std::exp(3.0 * s) + 7.0;
    const auto m = rank_algorithms(e);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(m[i].name, base[i].name);
      EXPECT_EQ(m[i].rank, base[i].rank);
    }
  }
}

TEST(Report, EmptyCsvIsHeaderOnly) {
  EXPECT_EQ(emit_report(StageReport{}, ReportFormat::kCsv), "name,mi_dsc,mi_nsd,rank_dsc,rank_nsd,fps\n");
}

TEST(Report, PublishedCsvRows) {
  const StageReport report = build_report(published());
  std::istringstream csv(emit_report(report, ReportFormat::kCsv));
  std::string line;
  std::getline(csv, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 11u);
  const std::vector<std::string> names = {"CCAM-Backbone", "www",       "CCAM-Full", "Uniandes",
                                          "SQUASH",        "CASIA_SRL", "fisensee"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(rows[i][0], names[i]);
    EXPECT_EQ(rows[i][3], std::to_string(i + 1));
  }
  EXPECT_EQ(rows[0][1], "0.313");
  EXPECT_EQ(rows[0][2], "0.338");
  EXPECT_EQ(rows[0][4], "2");  // www leads MI_NSD
  EXPECT_EQ(rows[1][4], "1");
  EXPECT_EQ(rows[0][5], "49");
  EXPECT_EQ(rows[5][0], "CASIA_SRL");
  EXPECT_EQ(rows[5][4], "5");  // 0.27 beats SQUASH's 0.26
  EXPECT_EQ(rows[4][4], "6");
  for (std::size_t i = 7; i < 11; ++i) {
    EXPECT_EQ(rows[i][3], "8");
    EXPECT_EQ(rows[i][4], "8");
  }
}

TEST(Report, JsonAndFormatParsing) {
  const auto j = nlohmann::json::parse(emit_report(build_report(published()), ReportFormat::kJson));
  ASSERT_EQ(j["algorithms"].size(), 11u);
  EXPECT_EQ(j["algorithms"][0]["name"], "CCAM-Backbone");
  EXPECT_EQ(j["algorithms"][0]["fps"], 49.0);
  EXPECT_EQ(parse_report_format("boxplot-data"), ReportFormat::kBoxplotData);
  EXPECT_THROW(parse_report_format("xml"), ConfigError);
}

TEST(Report, BoxplotP05MatchesAggregate) {
  Rng rng(4);
  std::vector<AlgorithmFrames> algs;
  for (std::string name : {"alpha", "beta", "gamma"}) {
    AlgorithmFrames a{name, {}, std::nullopt};
    const std::size_t n = 20 + rng.uniform_index(60);
    for (std::size_t i = 0; i < n; ++i) a.frames.push_back(frame(rng.uniform(), rng.uniform()));
    algs.push_back(std::move(a));
  }
  const StageReport report = build_report(algs);
  const auto j = nlohmann::json::parse(emit_report(report, ReportFormat::kBoxplotData));
  for (const auto& a : algs) {
    const Aggregate agg = aggregate_algorithm(a.frames);
    const auto it = std::find_if(j["algorithms"].begin(), j["algorithms"].end(),
                                 [&](const nlohmann::json& x) { return x["name"] == a.name; });
    ASSERT_NE(it, j["algorithms"].end());
    EXPECT_EQ((*it)["mi_dsc"]["p05"].get<double>(), agg.mi_dsc);
    EXPECT_EQ((*it)["mi_nsd"]["p05"].get<double>(), agg.mi_nsd);
    const auto frames = (*it)["mi_dsc"]["frames"].get<std::vector<double>>();
    EXPECT_TRUE(std::is_sorted(frames.begin(), frames.end()));
    EXPECT_EQ(frames.size(), a.frames.size());
  }
  for (const auto& row : report.rows) {
    const auto& a = *std::find_if(algs.begin(), algs.end(), [&](auto& x) { return x.name == row.name; });
    EXPECT_EQ(row.frame_count, a.frames.size());
  }
}

TEST(Report, AggregateCsvRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ccseg_test_aggregates.csv";
  {
    std::ofstream f(path);
    f << "name,mi_dsc,mi_nsd,fps\n";
    for (const auto& a : published()) f << a.name << ',' << a.scores.mi_dsc << ',' << a.scores.mi_nsd << ',' << *a.fps << "\r\n";
  }
  const auto rows = read_aggregate_csv(path);
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[7].name, "CCAM-Backbone");
  EXPECT_DOUBLE_EQ(rows[7].scores.mi_nsd, 0.338);
  EXPECT_DOUBLE_EQ(*rows[10].fps, 75.0);
  {
    std::ofstream f(path);
    f << "name,mi_dsc,mi_nsd\nbad,zero,0.1\n";
  }
  EXPECT_THROW(read_aggregate_csv(path), ContractViolation);
  std::filesystem::remove(path);
  EXPECT_THROW(read_aggregate_csv(path), IoError);
}

}  // namespace
}  // namespace ccseg::ranking
