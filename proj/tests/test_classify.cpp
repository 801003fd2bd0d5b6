#include <bit>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "subseg/classify.hpp"
#include "subseg/error.hpp"

namespace subseg {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kGridLen = kPoolGrid * kPoolGrid * 3;

TEST(Featurize, ConstantWhite) {
  const FeatureVector fv = featurize(RgbImage(224, 224, kWhite));
  ASSERT_EQ(fv.length(), kFeatureLength);
  ASSERT_EQ(kFeatureLength, 280u);
  for (std::size_t c = 0; c < kPoolGrid * kPoolGrid; ++c) {
    EXPECT_NEAR(fv.values[3 * c], 100.0, 1e-6);
    EXPECT_NEAR(fv.values[3 * c + 1], 0.0, 1e-6);
    EXPECT_NEAR(fv.values[3 * c + 2], 0.0, 1e-6);
  }
  for (int ch = 0; ch < 3; ++ch) {
    int nonzero = 0;
    double sum = 0;
    for (int b = 0; b < kColorBins; ++b) {
      const double v = fv.values[kGridLen + ch * kColorBins + b];
      nonzero += v != 0.0;
      sum += v;
    }
    EXPECT_EQ(nonzero, 1) << "channel " << ch;
    EXPECT_DOUBLE_EQ(sum, 1.0);
  }
  const std::size_t g0 = kGridLen + 3 * kColorBins;
  EXPECT_DOUBLE_EQ(fv.values[g0], 1.0);
  for (int b = 1; b < kGradientBins; ++b) EXPECT_EQ(fv.values[g0 + b], 0.0);
}

TEST(Featurize, SmallTranslationKeepsPooledGrid) {
  // A 5x5 dark square moved within the same 28x28 pool cell.
  RgbImage a(224, 224), b(224, 224);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      a.set(30 + x, 31 + y, Rgb{20, 60, 90});
      b.set(45 + x, 40 + y, Rgb{20, 60, 90});
    }
  }
  const FeatureVector fa = featurize(a), fb = featurize(b);
  for (std::size_t i = 0; i < kGridLen; ++i) EXPECT_NEAR(fa.values[i], fb.values[i], 1e-9) << i;
  // A different cell changes the grid.
  RgbImage c(224, 224);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) c.set(100 + x, 100 + y, Rgb{20, 60, 90});
  }
  const FeatureVector fc = featurize(c);
  EXPECT_NE(std::vector<double>(fa.values.begin(), fa.values.begin() + kGridLen),
            std::vector<double>(fc.values.begin(), fc.values.begin() + kGridLen));
}

TEST(Featurize, DeterministicAndFinite) {
  std::mt19937 rng(3);
  RgbImage img(190, 150);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
  const FeatureVector a = featurize(img);
  const FeatureVector b = featurize(img);
  EXPECT_EQ(a.values, b.values);
  for (const double v : a.values) EXPECT_TRUE(std::isfinite(v));
}

ClassifierModel identity_model(int inputs, int hidden) {
  ClassifierModel m;
  m.net = Mlp(inputs, hidden);
  m.architecture = m.net.descriptor();
  m.feature_mean.assign(inputs, 0.0);
  m.feature_std.assign(inputs, 1.0);
  return m;
}

TEST(Predict, ZeroModelTiesToBenign) {
  const ClassifierModel m = identity_model(static_cast<int>(kFeatureLength), 32);
  EXPECT_EQ(m.architecture, "mlp:280-32tanh-2softmax");
  const Prediction p = predict(m, featurize(RgbImage(224, 224, Rgb{1, 2, 3})));
  EXPECT_EQ(p.scores[0], 0.5);
  EXPECT_EQ(p.scores[1], 0.5);
  EXPECT_EQ(p.label, ClassLabel::Benign);
  EXPECT_EQ(p.probability, 0.5);
}

TEST(Predict, SoftmaxOfLogThree) {
  const Prediction p = prediction_from_logits({std::log(3.0), 0.0});
  EXPECT_NEAR(p.scores[0], 0.75, 1e-12);
  EXPECT_NEAR(p.scores[1], 0.25, 1e-12);
  EXPECT_EQ(p.label, ClassLabel::Benign);
  const Prediction q = prediction_from_logits({-800.0, 900.0});
  EXPECT_EQ(q.label, ClassLabel::Anomaly);
  EXPECT_NEAR(q.scores[0] + q.scores[1], 1.0, 1e-12);
}

TEST(Predict, LengthMismatch) {
  const ClassifierModel m = identity_model(3, 0);
  EXPECT_THROW(predict(m, FeatureVector{{1.0, 2.0}}), Error);
}

TEST(Predict, ScoresSumToOne) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0, 3);
  ClassifierModel m = identity_model(5, 4);
  for (auto& p : m.net.params) p = nd(rng);
  for (int t = 0; t < 200; ++t) {
    FeatureVector fv{{nd(rng), nd(rng), nd(rng), nd(rng), nd(rng)}};
    const Prediction p = predict(m, fv);
    EXPECT_NEAR(p.scores[0] + p.scores[1], 1.0, 1e-6);
    EXPECT_EQ(p.label == ClassLabel::Anomaly, p.scores[1] > p.scores[0]);
    EXPECT_EQ(predict(m, fv).scores, p.scores);
  }
}

TEST(Training, UpsamplingBalancesEpoch) {
  std::vector<ClassLabel> labels(100, ClassLabel::Benign);
  for (int i = 0; i < 10; ++i) labels[i * 7] = ClassLabel::Anomaly;
  std::mt19937_64 rng(1);
  const auto idx = balanced_indices(labels, true, rng);
  ASSERT_EQ(idx.size(), 180u);
  int anomalies = 0;
  std::vector<int> seen(100, 0);
  for (const auto i : idx) {
    anomalies += labels[i] == ClassLabel::Anomaly;
    seen[i] = 1;
  }
  EXPECT_EQ(anomalies, 90);
  for (const int s : seen) EXPECT_EQ(s, 1);
  std::mt19937_64 rng2(1);
  EXPECT_EQ(balanced_indices(labels, false, rng2).size(), 100u);
}

TEST(Training, UniformIndexInRange) {
  std::mt19937_64 rng(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[uniform_index(rng, 7)];
  for (const int h : hits) EXPECT_GT(h, 800);
}

TEST(Training, PlainSgdStep) {
  std::vector<double> p{2.0}, v{0.0};
  const std::vector<double> g{0.37};
  sgd_step(p, v, g, 0.001, 0.0);
  EXPECT_EQ(p[0], 2.0 - 0.001 * 0.37);
  sgd_step(p, v, g, 0.001, 0.0);
  EXPECT_EQ(v[0], -0.001 * 0.37);

  // With momentum the velocity accumulates: v2 = mu * v1 - lr * g.
  std::vector<double> q{0.0}, w{0.0};
  sgd_step(q, w, g, 0.1, 0.9);
  sgd_step(q, w, g, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(w[0], 0.9 * (-0.037) - 0.037);
  EXPECT_DOUBLE_EQ(q[0], -0.037 + 0.9 * (-0.037) - 0.037);
}

std::vector<LabeledFeatures> separable_toy() {
  std::vector<LabeledFeatures> out;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const bool pos = i % 2 == 1;
    const double x = (pos ? 1.5 : -1.5) + 0.8 * u(rng);
    const double y = 2.0 * u(rng);
    out.push_back({FeatureVector{{x + 0.3 * y, y}}, pos ? ClassLabel::Anomaly : ClassLabel::Benign});
  }
  return out;
}

// Exhaustive search over directions for one that strictly separates the two classes.
bool linearly_separable(const std::vector<LabeledFeatures>& data) {
  for (int deg = 0; deg < 360; ++deg) {
    const double t = deg * M_PI / 180.0;
    double max_neg = -1e300, min_pos = 1e300;
    for (const auto& d : data) {
      const double proj = std::cos(t) * d.features.values[0] + std::sin(t) * d.features.values[1];
      if (d.label == ClassLabel::Anomaly) {
        min_pos = std::min(min_pos, proj);
      } else {
        max_neg = std::max(max_neg, proj);
      }
    }
    if (max_neg < min_pos) return true;
  }
  return false;
}

TEST(Training, SeparableToyIsLearned) {
  const auto data = separable_toy();
  ASSERT_TRUE(linearly_separable(data));
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 4;
  cfg.epochs = 100;
  cfg.hidden_units = 0;
  const TrainResult r = train(data, cfg);
  ASSERT_EQ(r.loss_history.size(), 100u);
  EXPECT_LT(r.loss_history.back(), 0.1);
  for (const auto& d : data) EXPECT_EQ(predict(r.model, d.features).label, d.label);
  EXPECT_EQ(r.model.architecture, "mlp:2-2softmax");
}

TEST(Training, LossFallsWithDefaults) {
  const TrainResult r = train(separable_toy(), TrainConfig{});
  ASSERT_EQ(r.loss_history.size(), 30u);
  EXPECT_LT(r.loss_history[29], r.loss_history[0]);
}

TEST(Training, SeededDeterminism) {
  const auto data = separable_toy();
  TrainConfig cfg;
  cfg.epochs = 5;
  const TrainResult a = train(data, cfg);
  const TrainResult b = train(data, cfg);
  EXPECT_EQ(a.model.net.params, b.model.net.params);
  EXPECT_EQ(a.loss_history, b.loss_history);
  cfg.rng_seed = 43;
  EXPECT_NE(train(data, cfg).model.net.params, a.model.net.params);
}

TEST(Training, Errors) {
  std::vector<LabeledFeatures> one_class{{FeatureVector{{1.0}}, ClassLabel::Benign},
                                         {FeatureVector{{2.0}}, ClassLabel::Benign}};
  try {
    train(one_class, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("single-class dataset"), std::string::npos);
  }
  std::vector<LabeledFeatures> bad{{FeatureVector{{NAN}}, ClassLabel::Benign},
                                   {FeatureVector{{2.0}}, ClassLabel::Anomaly}};
  EXPECT_THROW(train(bad, TrainConfig{}), Error);
  TrainConfig cfg;
  cfg.momentum = 1.0;
  EXPECT_THROW(validate(cfg), Error);
}

// Central differences of the independent loss oracle against the library's analytic
// gradient.
double oracle_relative_error(const ClassifierModel& m, const std::vector<LabeledFeatures>& batch,
                             double eps) {
  const auto analytic = batch_gradient(m, batch);
  auto loss = [&](const std::vector<double>& p) {
    double total = 0;
    for (const auto& s : batch) {
      total += oracle::mlp_loss(p, m.net.inputs, m.net.hidden, m.normalize(s.features.values),
                                static_cast<int>(s.label));
    }
    return total / static_cast<double>(batch.size());
  };
  std::vector<double> p = m.net.params;
  EXPECT_NEAR(loss(p), batch_loss(m, batch), 1e-12);
  double worst = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + eps;
    const double up = loss(p);
    p[i] = saved - eps;
    const double down = loss(p);
    p[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
    if (scale < 1e-10) continue;
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

TEST(GradientCheck, RandomModels) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int inputs = 2 + static_cast<int>(uniform_index(rng, 6));
    const int hidden = static_cast<int>(uniform_index(rng, 6));
    ClassifierModel m = identity_model(inputs, hidden);
    for (auto& p : m.net.params) p = 0.5 * nd(rng);
    for (int i = 0; i < inputs; ++i) {
      m.feature_mean[i] = nd(rng);
      m.feature_std[i] = 0.5 + std::abs(nd(rng));
    }
    std::vector<LabeledFeatures> batch(8);
    for (auto& s : batch) {
      for (int i = 0; i < inputs; ++i) s.features.values.push_back(2.0 * nd(rng));
      s.label = uniform_index(rng, 2) ? ClassLabel::Anomaly : ClassLabel::Benign;
    }
    EXPECT_LT(oracle_relative_error(m, batch, 1e-5), 1e-4) << "config " << t;
    EXPECT_LT(gradient_check(m, batch, 1e-5), 1e-4) << "config " << t;
  }
}

TEST(GradientCheck, QuadraticLossIsExact) {
  // loss(w) = 0.5 * sum_j (w . x_j - y_j)^2, gradient sum_j (w . x_j - y_j) x_j.
  const std::vector<std::vector<double>> xs{{1, 2, 0.5}, {-1, 0.25, 3}, {0.5, -2, 1}};
  const std::vector<double> ys{1.0, -2.0, 0.5};
  const std::vector<double> w{0.3, -0.7, 1.1};
  auto loss = [&](std::span<const double> p) {
    double s = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      double r = -ys[j];
      for (std::size_t i = 0; i < p.size(); ++i) r += p[i] * xs[j][i];
      s += 0.5 * r * r;
    }
    return s;
  };
  std::vector<double> grad(3, 0.0);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    double r = -ys[j];
    for (std::size_t i = 0; i < 3; ++i) r += w[i] * xs[j][i];
    for (std::size_t i = 0; i < 3; ++i) grad[i] += r * xs[j][i];
  }
  EXPECT_LT(max_relative_error(loss, grad, w, 1e-3), 1e-9);
}

TEST(GradientCheck, SymmetricDataHasZeroGradient) {
  const ClassifierModel m = identity_model(3, 0);
  const std::vector<LabeledFeatures> batch{{FeatureVector{{1.0, -2.0, 0.5}}, ClassLabel::Benign},
                                           {FeatureVector{{1.0, -2.0, 0.5}}, ClassLabel::Anomaly}};
  for (const double g : batch_gradient(m, batch)) EXPECT_LT(std::abs(g), 1e-8);
  EXPECT_EQ(gradient_check(m, batch, 1e-5), 0.0);
  EXPECT_THROW(gradient_check(m, batch, 0.0), Error);
  EXPECT_THROW(gradient_check(m, batch, 0.02), Error);
}

class ModelFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("subseg_model_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ModelFiles, RoundTrip) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden_units = 4;
  const ClassifierModel m = train(separable_toy(), cfg).model;
  save_model(dir_ / "m.bin", m);
  const ClassifierModel r = load_model(dir_ / "m.bin");
  EXPECT_EQ(r.architecture, m.architecture);
  EXPECT_EQ(r.net.inputs, m.net.inputs);
  EXPECT_EQ(r.net.hidden, m.net.hidden);
  EXPECT_EQ(r.net.params, m.net.params);
  EXPECT_EQ(r.feature_mean, m.feature_mean);
  EXPECT_EQ(r.feature_std, m.feature_std);
  EXPECT_EQ(r.class_labels, m.class_labels);
  EXPECT_EQ(r.train_config_used.epochs, 3);
  EXPECT_EQ(r.train_config_used.rng_seed, cfg.rng_seed);

  std::ifstream is(dir_ / "m.bin", std::ios::binary);
  char magic[8];
  is.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "SUBSEGMD");
  // Parameters are the trailing little-endian doubles.
  const auto size = fs::file_size(dir_ / "m.bin");
  is.seekg(static_cast<std::streamoff>(size - 8));
  unsigned char last[8];
  is.read(reinterpret_cast<char*>(last), 8);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | last[i];
  EXPECT_EQ(std::bit_cast<double>(bits), m.net.params.back());
}

TEST_F(ModelFiles, CorruptFilesRejected) {
  std::ofstream(dir_ / "junk.bin") << "not a model";
  EXPECT_THROW(load_model(dir_ / "junk.bin"), Error);
  EXPECT_THROW(load_model(dir_ / "absent.bin"), Error);
}

TEST_F(ModelFiles, ExternalScores) {
  std::ofstream(dir_ / "s.csv") << "crop_filename,anomaly_probability\na_object_0.png,0.9\n"
                                   "a_subcomponent_3.png,0.1\n";
  const ExternalScores s = ExternalScores::load(dir_ / "s.csv");
  RegionCrop crop;
  crop.source_image_id = "a";
  EXPECT_EQ(s.classify(crop).label, ClassLabel::Anomaly);
  crop.level = Level::Subcomponent;
  crop.segment_id = 3;
  EXPECT_EQ(s.classify(crop).label, ClassLabel::Benign);
  crop.segment_id = 4;
  EXPECT_THROW(s.classify(crop), Error);
  std::ofstream(dir_ / "bad.csv") << "x.png,1.5\n";
  EXPECT_THROW(ExternalScores::load(dir_ / "bad.csv"), Error);
}

TEST_F(ModelFiles, ExportCrops) {
  RegionCrop crop;
  crop.pixels = RgbImage(190, 150);
  crop.source_box = {1, 2, 5, 9};
  crop.level = Level::Subcomponent;
  crop.segment_id = 7;
  crop.source_image_id = "img";
  const std::vector<RegionCrop> crops{crop};
  export_crops(dir_ / "out", crops);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "img_subcomponent_7.png"));
  std::ifstream is(dir_ / "out" / "requests.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "crop_filename,image_id,level,segment_id,x0,y0,x1,y1");
  EXPECT_EQ(row, "img_subcomponent_7.png,img,subcomponent,7,1,2,5,9");
}

}  // namespace
}  // namespace subseg
