#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subseg/classify.hpp"
#include "subseg/image.hpp"
#include "subseg/regions.hpp"

namespace subseg {

struct SynthConfig {
  int image_w = 512;
  int image_h = 512;
  int n_images = 100;
  double anomaly_probability = 0.5;
  double anomaly_area_min = 0.002;  // fraction of object area
  double anomaly_area_max = 0.02;
  double texture_scale = 1.0;
  double noise_sigma = 4.0;
  std::uint64_t rng_seed = 42;
  double train_fraction = 0.7;
};

void validate(const SynthConfig& cfg);

struct GroundTruth {
  ObjectMask object_mask;
  ObjectMask anomaly_mask;
  ClassLabel image_label = ClassLabel::Benign;
};

struct SyntheticImage {
  RgbImage image;
  GroundTruth truth;
};

/// Renders image `index` of the dataset; depends only on (cfg, index).
SyntheticImage generate_image(const SynthConfig& cfg, int index);

enum class Split { Train, Test };
std::string_view to_string(Split split);

struct ManifestRecord {
  std::string image_id;
  std::string image_path;  // relative to the manifest directory
  std::string object_mask_path;
  std::optional<std::string> anomaly_mask_path;
  ClassLabel image_label = ClassLabel::Benign;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
};

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Writes images/, masks/ and manifest.jsonl under out_dir. The first
/// round(n * train_fraction) images form the train split.
DatasetManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Parses JSON lines and checks ids are unique and referenced files exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

GroundTruth load_ground_truth(const DatasetManifest& manifest, const ManifestRecord& record);

/// Subcomponent crops are anomalous when at least `tau` of their support overlaps the
/// anomaly mask; object crops when the anomaly mask is non-empty.
std::vector<ClassLabel> label_regions(std::span<const RegionCrop> crops, const GroundTruth& gt,
                                      double tau = 0.25);

}  // namespace subseg
