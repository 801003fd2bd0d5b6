#include "subseg/eval.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "subseg/error.hpp"

namespace subseg {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void ConfusionCounts::add(ClassLabel truth, ClassLabel predicted) {
  const bool t = truth == ClassLabel::Anomaly, p = predicted == ClassLabel::Anomaly;
  if (t && p) ++tp;
  else if (!t && p) ++fp;
  else if (!t && !p) ++tn;
  else ++fn;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

std::string_view to_string(Granularity g) { return g == Granularity::Region ? "region" : "image"; }

MetricsReport compute_metrics(const ConfusionCounts& c, Level strategy, Granularity granularity) {
  if (c.total() == 0) throw data_error("cannot compute metrics over empty counts");
  MetricsReport r;
  r.counts = c;
  r.strategy = strategy;
  r.granularity = granularity;
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.tp_rate = ratio(c.tp, c.tp + c.fn);
  r.fp_rate = ratio(c.fp, c.fp + c.tn);
  const double pr = r.precision + r.tp_rate;
  r.f1 = pr > 0 ? 2 * r.precision * r.tp_rate / pr : 0.0;
  return r;
}

DecisionRule DecisionRule::parse(std::string_view s) {
  if (s == "any") return {};
  constexpr std::string_view prefix = "fraction:";
  if (s.substr(0, prefix.size()) == prefix) {
    const std::string value(s.substr(prefix.size()));
    try {
      std::size_t used = 0;
      const double tau = std::stod(value, &used);
      if (used == value.size() && tau > 0 && tau <= 1) return {Kind::Fraction, tau};
    } catch (const std::exception&) {
    }
  }
  throw usage_error("decision rule must be 'any' or 'fraction:<tau>' with tau in (0,1]");
}

std::string DecisionRule::to_string() const {
  if (kind == Kind::Any) return "any";
  std::ostringstream os;
  os << "fraction:" << tau;
  return os.str();
}

ClassLabel image_decision(std::span<const Prediction> preds, const DecisionRule& rule) {
  if (preds.empty()) throw data_error("image_decision needs at least one region");
  std::size_t anomalous = 0;
  for (const auto& p : preds) anomalous += p.label == ClassLabel::Anomaly ? 1 : 0;
  if (rule.kind == DecisionRule::Kind::Any) {
    return anomalous > 0 ? ClassLabel::Anomaly : ClassLabel::Benign;
  }
  const double fraction = static_cast<double>(anomalous) / static_cast<double>(preds.size());
  return fraction >= rule.tau ? ClassLabel::Anomaly : ClassLabel::Benign;
}

StrategyEvaluation evaluate_strategy(const DatasetManifest& manifest, Level strategy,
                                     const RegionClassifier& classifier,
                                     const PipelineOptions& options, const DecisionRule& rule) {
  std::vector<const ManifestRecord*> records;
  for (const auto& r : manifest.records) {
    if (r.split == Split::Test) records.push_back(&r);
  }
  if (records.empty()) throw data_error("manifest has no test split");
  struct PerImage {
    ConfusionCounts region, image;
    double ms = 0;
  };
  std::vector<PerImage> results(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const ImageRegions regions = load_image_regions(manifest, *records[i], strategy, options);
    std::vector<Prediction> preds;
    preds.reserve(regions.crops.size());
    for (const auto& crop : regions.crops) preds.push_back(classifier.classify(crop));
    const ClassLabel verdict = image_decision(preds, rule);
    const auto stop = std::chrono::steady_clock::now();
    PerImage& out = results[i];
    for (std::size_t c = 0; c < preds.size(); ++c) out.region.add(regions.truth[c], preds[c].label);
    out.image.add(regions.image_truth, verdict);
    out.ms = std::chrono::duration<double, std::milli>(stop - start).count();
  });
  ConfusionCounts region, image;
  StrategyEvaluation eval;
  for (std::size_t i = 0; i < results.size(); ++i) {
    region += results[i].region;
    image += results[i].image;
    eval.timings.push_back({records[i]->image_id, results[i].ms});
  }
  eval.region = compute_metrics(region, strategy, Granularity::Region);
  eval.image = compute_metrics(image, strategy, Granularity::Image);
  return eval;
}

ComparisonResult run_comparison(const DatasetManifest& manifest, const ComparisonConfig& config) {
  ComparisonResult result;
  for (const Level strategy : {Level::Object, Level::Subcomponent}) {
    const auto data = collect_features(manifest, Split::Train, strategy, config.pipeline);
    TrainResult trained = train(data, config.train);
    result.final_losses.push_back(trained.loss_history.back());
    const ReferenceClassifier classifier(std::move(trained.model));
    StrategyEvaluation eval =
        evaluate_strategy(manifest, strategy, classifier, config.pipeline, config.rule);
    result.rows.push_back(eval.region);
    result.rows.push_back(eval.image);
    if (strategy == Level::Subcomponent) result.subcomponent_timings = std::move(eval.timings);
  }
  return result;
}

std::string comparison_csv(std::span<const MetricsReport> rows) {
  std::ostringstream os;
  os << kComparisonHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%.4f,%.4f,%llu,%llu,%llu,%llu\n",
                  std::string(to_string(r.strategy)).c_str(),
                  std::string(to_string(r.granularity)).c_str(), 100 * r.accuracy,
                  100 * r.precision, 100 * r.f1, 100 * r.tp_rate, 100 * r.fp_rate,
                  static_cast<unsigned long long>(r.counts.tp),
                  static_cast<unsigned long long>(r.counts.fp),
                  static_cast<unsigned long long>(r.counts.tn),
                  static_cast<unsigned long long>(r.counts.fn));
    os << buf;
  }
  return os.str();
}

std::string comparison_table(std::span<const MetricsReport> rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-13s %-11s %7s %7s %7s %7s %7s %7s %7s %7s %7s\n", "strategy",
                "granularity", "A", "P", "F1", "TP(%)", "FP(%)", "tp", "fp", "tn", "fn");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-13s %-11s %7.2f %7.2f %7.2f %7.2f %7.2f %7llu %7llu %7llu %7llu\n",
                  std::string(to_string(r.strategy)).c_str(),
                  std::string(to_string(r.granularity)).c_str(), 100 * r.accuracy,
                  100 * r.precision, 100 * r.f1, 100 * r.tp_rate, 100 * r.fp_rate,
                  static_cast<unsigned long long>(r.counts.tp),
                  static_cast<unsigned long long>(r.counts.fp),
                  static_cast<unsigned long long>(r.counts.tn),
                  static_cast<unsigned long long>(r.counts.fn));
    os << buf;
  }
  return os.str();
}

}  // namespace subseg
