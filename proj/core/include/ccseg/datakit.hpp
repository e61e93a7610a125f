#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccseg/image_io.hpp"
#include "ccseg/label_map.hpp"
#include "ccseg/rng.hpp"

namespace ccseg::data {

enum class Stage { kTrain, kStage1, kStage2, kStage3 };

std::string stage_tag(Stage s);  // "train", "1", "2", "3"
Stage parse_stage(const std::string& tag);

struct FrameRecord {
  std::string frame_id;
  std::string procedure;
  Stage stage = Stage::kTrain;
  std::filesystem::path image;       // absolute after load
  std::filesystem::path annotation;  // absolute after load
  std::optional<std::size_t> instruments;
};

struct StageCounts {
  std::size_t train = 0, stage1 = 0, stage2 = 0, stage3 = 0;
  bool operator==(const StageCounts&) const = default;
};

// Manifest JSON:
//   {"version": 1,
//    "records": [{"frame_id": "...", "procedure": "...", "stage": "train"|"1"|"2"|"3",
//                 "image": "rel/or/abs.png", "annotation": "rel/or/abs.png",
//                 "instruments": 2 (optional)}]}
// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::vector<FrameRecord> records;

  StageCounts counts() const;
  std::vector<FrameRecord> stage(Stage s) const;
};

class ManifestError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kMalformedRecord, kDanglingPath };
  ManifestError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
// Paths are written relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

using AnnotationSource = std::function<InstanceLabelMap(const FrameRecord&)>;
// Reads the record's annotation PNG.
InstanceLabelMap read_annotation(const FrameRecord& record);

struct FilterResult {
  DatasetManifest manifest;
  std::size_t removed = 0;
  bool training_empty = false;  // every training frame was background-only
};

// Drops training frames whose annotation is all background.
FilterResult filter_empty_frames(const DatasetManifest& manifest,
                                 const AnnotationSource& annotations = read_annotation);

struct Split {
  std::vector<FrameRecord> train;
  std::vector<FrameRecord> val;
};

// Seeded Fisher-Yates shuffle; |train| = round(n * fraction).
Split split_train_val(const std::vector<FrameRecord>& records, double fraction, std::uint64_t seed);

struct AugmentationConfig {
  double brightness = 32.0 / 255.0;  // +- additive, in [0,1] intensity units
  double contrast_lo = 0.5, contrast_hi = 1.5;
  double saturation_lo = 0.5, saturation_hi = 1.5;
  double hue_degrees = 18.0;  // +-
  double photometric_probability = 0.5;
  double scale_lo = 1.0, scale_hi = 1.0;
  double min_crop_fraction = 0.3;  // crop side as a fraction of the scaled side
  double crop_probability = 0.5;
  double mirror_probability = 0.5;
  std::size_t crop_attempts = 50;

  void validate() const;
  // Every range collapsed, probabilities zero.
  static AugmentationConfig identity();
};

struct CropRect {
  std::size_t x = 0, y = 0, width = 0, height = 0;
};

// One concrete sample of the augmentation families.
struct AugmentDraw {
  double brightness = 0.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue_degrees = 0.0;
  double scale = 1.0;
  std::optional<CropRect> crop;  // in scaled coordinates
  bool mirror = false;

  static AugmentDraw identity() { return {}; }
};

// Samples a draw. Downscales that would drop an instance are redrawn (up to
// cfg.crop_attempts tries, then scale_hi). Crops keep at least one instance pixel
// when the label map has any (up to cfg.crop_attempts tries, then a minimal crop
// around the instance pixel nearest the centre).
AugmentDraw sample_augmentation(const AugmentationConfig& cfg, const InstanceLabelMap& labels,
                                Rng& rng);

struct Augmented {
  RgbImage image;
  InstanceLabelMap labels;
};

// Photometric ops touch the image only; scale, crop and mirror are applied to
// both, with nearest-neighbour label resampling.
Augmented augment(const RgbImage& image, const InstanceLabelMap& labels, const AugmentDraw& draw);

struct SynthOptions {
  Stage stage = Stage::kTrain;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t width = 256;
  std::size_t height = 256;
  std::size_t max_instruments = 3;
};

enum class ShapeFamily { kStraight, kGrasper, kTapered, kCurved };
inline constexpr std::size_t kShapeFamilies = 4;

struct SynthFrame {
  RgbImage image;
  InstanceLabelMap labels;
  std::vector<ShapeFamily> families;  // one per visible instrument, label order
};

// Renders one frame. Pure function of (options.stage, seed, index, extents).
SynthFrame synth_frame(const SynthOptions& options, std::size_t index);

// Writes images/, annotations/ and manifest.json under `out_dir`; returns the manifest.
DatasetManifest synth_generate(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace ccseg::data
