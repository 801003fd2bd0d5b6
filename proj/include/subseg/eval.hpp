#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subseg/classify.hpp"
#include "subseg/pipeline.hpp"
#include "subseg/regions.hpp"
#include "subseg/synthgen.hpp"

namespace subseg {

/// Positive class is anomaly.
struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  void add(ClassLabel truth, ClassLabel predicted);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

enum class Granularity { Region, Image };
std::string_view to_string(Granularity g);

struct MetricsReport {
  double accuracy = 0, precision = 0, f1 = 0, tp_rate = 0, fp_rate = 0;
  ConfusionCounts counts;
  Level strategy = Level::Object;
  Granularity granularity = Granularity::Region;
};

/// Ratios with zero denominators report 0. Throws a data error on empty counts.
MetricsReport compute_metrics(const ConfusionCounts& c, Level strategy = Level::Object,
                              Granularity granularity = Granularity::Region);

struct DecisionRule {
  enum class Kind { Any, Fraction } kind = Kind::Any;
  double tau = 0.0;

  /// "any" or "fraction:<tau>".
  static DecisionRule parse(std::string_view s);
  std::string to_string() const;
};

/// Image-level verdict from its regions' predictions.
ClassLabel image_decision(std::span<const Prediction> preds, const DecisionRule& rule);

struct ImageTiming {
  std::string image_id;
  double milliseconds = 0;
};

struct StrategyEvaluation {
  MetricsReport region;
  MetricsReport image;
  std::vector<ImageTiming> timings;  // per test image, regions -> predictions
};

/// Scores every test-split image with `classifier`.
StrategyEvaluation evaluate_strategy(const DatasetManifest& manifest, Level strategy,
                                     const RegionClassifier& classifier,
                                     const PipelineOptions& options, const DecisionRule& rule);

struct ComparisonConfig {
  PipelineOptions pipeline;
  TrainConfig train;
  DecisionRule rule;
};

struct ComparisonResult {
  std::vector<MetricsReport> rows;  // object/region, object/image, subcomponent/region, subcomponent/image
  std::vector<double> final_losses;
  std::vector<ImageTiming> subcomponent_timings;
};

/// Trains one classifier per strategy on the train split and evaluates both on the test
/// split at region and image granularity.
ComparisonResult run_comparison(const DatasetManifest& manifest, const ComparisonConfig& config);

inline constexpr const char* kComparisonHeader = "strategy,granularity,A,P,F1,TP,FP,tp,fp,tn,fn";
std::string comparison_csv(std::span<const MetricsReport> rows);
std::string comparison_table(std::span<const MetricsReport> rows);

}  // namespace subseg
