#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ccseg/datakit.hpp"
#include "ccseg/error.hpp"

namespace ccseg::data {

namespace fs = std::filesystem;

std::string stage_tag(Stage s) {
  switch (s) {
    case Stage::kTrain:
      return "train";
    case Stage::kStage1:
      return "1";
    case Stage::kStage2:
      return "2";
    case Stage::kStage3:
      return "3";
  }
  return "?";
}

Stage parse_stage(const std::string& tag) {
  if (tag == "train") return Stage::kTrain;
  if (tag == "1" || tag == "stage1") return Stage::kStage1;
  if (tag == "2" || tag == "stage2") return Stage::kStage2;
  if (tag == "3" || tag == "stage3") return Stage::kStage3;
  throw ConfigError("unknown stage '" + tag + "' (expected train|1|2|3)");
}

StageCounts DatasetManifest::counts() const {
  StageCounts c;
  for (const auto& r : records) {
    switch (r.stage) {
      case Stage::kTrain:
        ++c.train;
        break;
      case Stage::kStage1:
        ++c.stage1;
        break;
      case Stage::kStage2:
        ++c.stage2;
        break;
      case Stage::kStage3:
        ++c.stage3;
        break;
    }
  }
  return c;
}

std::vector<FrameRecord> DatasetManifest::stage(Stage s) const {
  std::vector<FrameRecord> out;
  for (const auto& r : records) {
    if (r.stage == s) out.push_back(r);
  }
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  using Kind = ManifestError::Kind;
  std::ifstream in(path);
  if (!in) throw ManifestError(Kind::kMissingFile, "manifest '" + path.string() + "' not found");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(Kind::kMalformedRecord,
                        "manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw ManifestError(Kind::kMalformedRecord,
                        "manifest '" + path.string() + "' lacks a \"records\" array");
  }
  const fs::path base = path.parent_path();
  DatasetManifest m;
  std::size_t index = 0;
  for (const auto& r : doc["records"]) {
    const std::string where =
        r.is_object() && r.contains("frame_id") && r["frame_id"].is_string()
            ? "frame '" + r["frame_id"].get<std::string>() + "'"
            : "record #" + std::to_string(index);
    auto field = [&](const char* key) -> std::string {
      if (!r.is_object() || !r.contains(key) || !r[key].is_string() ||
          r[key].get<std::string>().empty()) {
        throw ManifestError(Kind::kMalformedRecord,
                            where + ": missing or empty \"" + std::string(key) + "\"");
      }
      return r[key].get<std::string>();
    };
    FrameRecord rec;
    rec.frame_id = field("frame_id");
    rec.procedure = r.contains("procedure") && r["procedure"].is_string()
                        ? r["procedure"].get<std::string>()
                        : std::string();
    try {
      rec.stage = parse_stage(field("stage"));
    } catch (const ConfigError& e) {
      throw ManifestError(Kind::kMalformedRecord, where + ": " + e.what());
    }
    rec.image = base / field("image");
    rec.annotation = base / field("annotation");
    if (r.contains("instruments") && r["instruments"].is_number_unsigned()) {
      rec.instruments = r["instruments"].get<std::size_t>();
    }
    for (const fs::path* p : {&rec.image, &rec.annotation}) {
      if (!fs::exists(*p)) {
        throw ManifestError(Kind::kDanglingPath,
                            where + ": path '" + p->string() + "' does not exist");
      }
    }
    m.records.push_back(std::move(rec));
    ++index;
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  const fs::path abs_base = fs::absolute(base.empty() ? fs::path(".") : base).lexically_normal();
  auto rel = [&](const fs::path& p) {
    const fs::path abs = fs::absolute(p).lexically_normal();
    const fs::path r = abs.lexically_relative(abs_base);
    if (r.empty() || *r.begin() == "..") return abs.generic_string();
    return r.generic_string();
  };
  nlohmann::json doc;
  doc["version"] = 1;
  doc["records"] = nlohmann::json::array();
  for (const auto& r : manifest.records) {
    nlohmann::json j{{"frame_id", r.frame_id},   {"procedure", r.procedure},
                     {"stage", stage_tag(r.stage)}, {"image", rel(r.image)},
                     {"annotation", rel(r.annotation)}};
    if (r.instruments) j["instruments"] = *r.instruments;
    doc["records"].push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

InstanceLabelMap read_annotation(const FrameRecord& record) {
  return read_labelmap(record.annotation).map;
}

FilterResult filter_empty_frames(const DatasetManifest& manifest,
                                 const AnnotationSource& annotations) {
  FilterResult out;
  std::size_t training_kept = 0;
  for (const auto& r : manifest.records) {
    if (r.stage == Stage::kTrain) {
      if (annotations(r).is_background_only()) {
        ++out.removed;
        continue;
      }
      ++training_kept;
    }
    out.manifest.records.push_back(r);
  }
  out.training_empty = training_kept == 0;
  if (out.training_empty && manifest.counts().train > 0) {
    spdlog::warn("filter_empty_frames: all {} training frames are background-only",
                 manifest.counts().train);
  }
  return out;
}

Split split_train_val(const std::vector<FrameRecord>& records, double fraction,
                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractViolation("split_train_val: fraction must lie in (0,1)");
  }
  if (records.empty()) throw ContractViolation("split_train_val: no records to split");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(records.size()) * fraction));
  Split s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? s.train : s.val).push_back(records[order[i]]);
  }
  return s;
}

}  // namespace ccseg::data
