#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "subseg/error.hpp"
#include "subseg/eval.hpp"

namespace subseg {
namespace {

void expect_report(const MetricsReport& r, double a, double p, double f1, double tpr, double fpr) {
  EXPECT_NEAR(r.accuracy, a, 1e-12);
  EXPECT_NEAR(r.precision, p, 1e-12);
  EXPECT_NEAR(r.f1, f1, 1e-12);
  EXPECT_NEAR(r.tp_rate, tpr, 1e-12);
  EXPECT_NEAR(r.fp_rate, fpr, 1e-12);
}

TEST(Metrics, EnumeratedFixtures) {
  expect_report(compute_metrics({10, 0, 10, 0}), 1, 1, 1, 1, 0);
  expect_report(compute_metrics({9, 1, 9, 1}), 0.9, 0.9, 0.9, 0.9, 0.1);
  expect_report(compute_metrics({0, 0, 10, 0}), 1, 0, 0, 0, 0);
  expect_report(compute_metrics({0, 10, 0, 0}), 0, 0, 0, 0, 1);
  expect_report(compute_metrics({0, 0, 0, 5}), 0, 0, 0, 0, 0);
  expect_report(compute_metrics({3, 1, 4, 2}), 0.7, 0.75, 2 * 0.75 * 0.6 / 1.35, 0.6, 0.2);
}

TEST(Metrics, EmptyCountsRejected) {
  try {
    compute_metrics({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Metrics, IdentitiesAndPolaritySymmetry) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 500; ++t) {
    ConfusionCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    if (c.total() == 0) continue;
    const MetricsReport r = compute_metrics(c);
    const double tp = c.tp, fp = c.fp, tn = c.tn, fn = c.fn;
    EXPECT_NEAR(r.accuracy, (tp + tn) / (tp + fp + tn + fn), 1e-12);
    EXPECT_NEAR(r.precision, tp + fp > 0 ? tp / (tp + fp) : 0.0, 1e-12);
    EXPECT_NEAR(r.tp_rate, tp + fn > 0 ? tp / (tp + fn) : 0.0, 1e-12);
    EXPECT_NEAR(r.fp_rate, fp + tn > 0 ? fp / (fp + tn) : 0.0, 1e-12);
    const double pr = r.precision + r.tp_rate;
    EXPECT_NEAR(r.f1, pr > 0 ? 2 * r.precision * r.tp_rate / pr : 0.0, 1e-12);
    for (const double v : {r.accuracy, r.precision, r.f1, r.tp_rate, r.fp_rate}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const MetricsReport s = compute_metrics({c.tn, c.fn, c.tp, c.fp});
    EXPECT_EQ(s.counts.tp, c.tn);
    EXPECT_EQ(s.counts.fp, c.fn);
    EXPECT_NEAR(s.accuracy, r.accuracy, 1e-12);
    if (c.fp + c.tn > 0) EXPECT_NEAR(s.tp_rate, 1.0 - r.fp_rate, 1e-12);
  }
}

TEST(Confusion, AddAndCombine) {
  ConfusionCounts a;
  a.add(ClassLabel::Anomaly, ClassLabel::Anomaly);
  a.add(ClassLabel::Benign, ClassLabel::Anomaly);
  a.add(ClassLabel::Benign, ClassLabel::Benign);
  a.add(ClassLabel::Anomaly, ClassLabel::Benign);
  a.add(ClassLabel::Anomaly, ClassLabel::Benign);
  EXPECT_EQ(a, (ConfusionCounts{1, 1, 1, 2}));
  ConfusionCounts b{1, 2, 3, 4};
  ConfusionCounts ab = a;
  ab += b;
  ConfusionCounts ba = b;
  ba += a;
  EXPECT_EQ(ab, ba);
  EXPECT_EQ(ab.total(), 15u);
}

std::vector<Prediction> preds(int anomalies, int total) {
  std::vector<Prediction> out;
  for (int i = 0; i < total; ++i) {
    out.push_back(prediction_from_probability(i < anomalies ? 0.9 : 0.1));
  }
  return out;
}

TEST(ImageDecision, Rules) {
  const DecisionRule any = DecisionRule::parse("any");
  EXPECT_EQ(image_decision(preds(0, 10), any), ClassLabel::Benign);
  EXPECT_EQ(image_decision(preds(1, 50), any), ClassLabel::Anomaly);
  EXPECT_EQ(image_decision(preds(3, 10), DecisionRule::parse("fraction:0.25")), ClassLabel::Anomaly);
  EXPECT_EQ(image_decision(preds(3, 10), DecisionRule::parse("fraction:0.5")), ClassLabel::Benign);
  EXPECT_THROW(image_decision({}, any), Error);
  EXPECT_THROW(DecisionRule::parse("most"), Error);
  EXPECT_THROW(DecisionRule::parse("fraction:1.5"), Error);
  EXPECT_EQ(DecisionRule::parse("fraction:0.25").to_string(), "fraction:0.25");
  EXPECT_EQ(any.to_string(), "any");
}

TEST(ImageDecision, AnyEqualsSmallFraction) {
  for (int n = 1; n <= 12; ++n) {
    for (int k = 0; k <= n; ++k) {
      const auto p = preds(k, n);
      DecisionRule f{DecisionRule::Kind::Fraction, 1.0 / n};
      EXPECT_EQ(image_decision(p, DecisionRule{}), image_decision(p, f)) << k << "/" << n;
    }
  }
}

TEST(ComparisonTable, CsvLayout) {
  std::vector<MetricsReport> rows{compute_metrics({9, 1, 9, 1}, Level::Object, Granularity::Image),
                                  compute_metrics({10, 0, 10, 0}, Level::Subcomponent,
                                                  Granularity::Region)};
  const std::string csv = comparison_csv(rows);
  EXPECT_EQ(csv,
            "strategy,granularity,A,P,F1,TP,FP,tp,fp,tn,fn\n"
            "object,image,90.0000,90.0000,90.0000,90.0000,10.0000,9,1,9,1\n"
            "subcomponent,region,100.0000,100.0000,100.0000,100.0000,0.0000,10,0,10,0\n");
  const std::string table = comparison_table(rows);
  EXPECT_NE(table.find("subcomponent"), std::string::npos);
  EXPECT_NE(table.find("90.00"), std::string::npos);
}

// Perfect and inverted external scorers over a small generated dataset.
TEST(EvaluateStrategy, OracleScorers) {
  const auto dir = std::filesystem::temp_directory_path() / "subseg_eval_oracle";
  std::filesystem::remove_all(dir);
  SynthConfig cfg;
  cfg.image_w = cfg.image_h = 96;
  cfg.n_images = 6;
  cfg.train_fraction = 0.5;
  cfg.anomaly_area_min = 0.02;
  cfg.anomaly_area_max = 0.05;
  const DatasetManifest manifest = generate_dataset(cfg, dir);
  PipelineOptions opts;
  opts.slic.k = 16;

  for (const Level level : {Level::Object, Level::Subcomponent}) {
    ExternalScores perfect, inverted;
    ConfusionCounts truth_counts;
    for (const auto& rec : manifest.records) {
      if (rec.split != Split::Test) continue;
      const ImageRegions r = load_image_regions(manifest, rec, level, opts);
      for (std::size_t i = 0; i < r.crops.size(); ++i) {
        const bool anomaly = r.truth[i] == ClassLabel::Anomaly;
        perfect.set(r.crops[i].file_name(), anomaly ? 1.0 : 0.0);
        inverted.set(r.crops[i].file_name(), anomaly ? 0.0 : 1.0);
        truth_counts.add(r.truth[i], r.truth[i]);
      }
    }
    const auto good = evaluate_strategy(manifest, level, perfect, opts, DecisionRule{});
    EXPECT_EQ(good.region.accuracy, 1.0);
    EXPECT_EQ(good.region.fp_rate, 0.0);
    EXPECT_EQ(good.region.counts, truth_counts);
    EXPECT_EQ(good.timings.size(), 3u);

    const auto bad = evaluate_strategy(manifest, level, inverted, opts, DecisionRule{});
    const ConfusionCounts& c = bad.region.counts;
    EXPECT_EQ(c.tp, 0u);
    EXPECT_EQ(c.tn, 0u);
    EXPECT_EQ(c.fn, truth_counts.tp);
    EXPECT_EQ(c.fp, truth_counts.tn);
    EXPECT_EQ(bad.region.accuracy, 0.0);
    EXPECT_EQ(bad.region.tp_rate, 0.0);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace subseg
