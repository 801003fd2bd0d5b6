#include "subseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "subseg/color.hpp"
#include "subseg/isolate.hpp"
#include "subseg/png_io.hpp"

namespace subseg {

std::vector<RegionCrop> extract_regions(const RgbImage& img, const ObjectMask& object_mask,
                                        Level strategy, const SlicParams& slic,
                                        const std::string& image_id, SuperpixelMap* map_out) {
  if (strategy == Level::Object) {
    std::vector<RegionCrop> out;
    out.push_back(extract_object_region(img, object_mask, image_id));
    return out;
  }
  SlicResult seg = segment(srgb_to_lab(img), object_mask, slic);
  auto crops = extract_subcomponent_regions(img, seg.map, image_id);
  if (map_out) *map_out = std::move(seg.map);
  return crops;
}

ImageRegions load_image_regions(const DatasetManifest& manifest, const ManifestRecord& record,
                                Level strategy, const PipelineOptions& options) {
  const RgbImage img = read_rgb_png(manifest.resolve(record.image_path));
  const GroundTruth gt = load_ground_truth(manifest, record);
  const ObjectMask object = options.threshold_isolation
                                ? threshold_segment(img, options.luminance_threshold)
                                : gt.object_mask;
  ImageRegions out;
  out.image_id = record.image_id;
  out.crops = extract_regions(img, object, strategy, options.slic, record.image_id, &out.map);
  out.truth = label_regions(out.crops, gt, options.tau);
  out.image_truth = gt.image_label;
  return out;
}

std::vector<LabeledFeatures> collect_features(const DatasetManifest& manifest, Split split,
                                              Level strategy, const PipelineOptions& options) {
  std::vector<const ManifestRecord*> records;
  for (const auto& r : manifest.records) {
    if (r.split == split) records.push_back(&r);
  }
  std::vector<std::vector<LabeledFeatures>> per_image(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    ImageRegions regions = load_image_regions(manifest, *records[i], strategy, options);
    auto& out = per_image[i];
    out.reserve(regions.crops.size());
    for (std::size_t c = 0; c < regions.crops.size(); ++c) {
      out.push_back({featurize(regions.crops[c]), regions.truth[c]});
    }
  });
  std::vector<LabeledFeatures> all;
  for (auto& v : per_image) {
    std::move(v.begin(), v.end(), std::back_inserter(all));
  }
  return all;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace subseg
