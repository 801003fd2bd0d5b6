#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "subseg/classify.hpp"
#include "subseg/regions.hpp"
#include "subseg/slic.hpp"
#include "subseg/synthgen.hpp"

namespace subseg {

struct PipelineOptions {
  SlicParams slic;
  double tau = 0.25;                  // region overlap threshold for ground truth
  bool threshold_isolation = false;   // estimate the object mask instead of loading it
  double luminance_threshold = 30.0;
};

/// Crops for one image under one strategy, with their ground-truth labels.
struct ImageRegions {
  std::string image_id;
  std::vector<RegionCrop> crops;
  std::vector<ClassLabel> truth;
  ClassLabel image_truth = ClassLabel::Benign;
  SuperpixelMap map;  // subcomponent strategy only
};

/// Object strategy: one crop of the isolated object. Subcomponent strategy: SLIC over the
/// isolated object, one crop per superpixel.
std::vector<RegionCrop> extract_regions(const RgbImage& img, const ObjectMask& object_mask,
                                        Level strategy, const SlicParams& slic,
                                        const std::string& image_id,
                                        SuperpixelMap* map_out = nullptr);

ImageRegions load_image_regions(const DatasetManifest& manifest, const ManifestRecord& record,
                                Level strategy, const PipelineOptions& options);

/// Featurised, labelled regions of every record in `split`, in manifest order.
std::vector<LabeledFeatures> collect_features(const DatasetManifest& manifest, Split split,
                                              Level strategy, const PipelineOptions& options);

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace subseg
