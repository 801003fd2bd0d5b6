#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subseg/regions.hpp"

namespace subseg {

enum class ClassLabel : int { Benign = 0, Anomaly = 1 };

std::string_view to_string(ClassLabel label);
ClassLabel parse_class_label(std::string_view s);

// Feature layout: 8x8 mean-pooled Lab grid, three 24-bin Lab histograms, one 16-bin
// histogram of L gradient magnitude.
inline constexpr int kPoolGrid = 8;
inline constexpr int kColorBins = 24;
inline constexpr int kGradientBins = 16;
inline constexpr double kGradientBinWidth = 2.0;
inline constexpr std::size_t kFeatureLength =
    kPoolGrid * kPoolGrid * 3 + kColorBins * 3 + kGradientBins;

struct FeatureVector {
  std::vector<double> values;
  std::size_t length() const { return values.size(); }
};

FeatureVector featurize(const RgbImage& pixels);
FeatureVector featurize(const RegionCrop& crop);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t rng_seed = 42;
  bool upsample_minority = true;
  double train_fraction = 0.7;
  int hidden_units = 32;
};

void validate(const TrainConfig& config);

/// Two-layer perceptron: input -> hidden (tanh) -> 2 logits. A hidden width of zero gives
/// a plain softmax regression. All parameters live in one flat vector:
/// W1 (hidden x input, row-major), b1, W2 (2 x hidden), b2.
struct Mlp {
  int inputs = 0;
  int hidden = 0;
  static constexpr int kOutputs = 2;
  std::vector<double> params;

  Mlp() = default;
  Mlp(int inputs, int hidden);

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(hidden) * inputs; }
  std::size_t w2_offset() const { return b1_offset() + hidden; }
  std::size_t b2_offset() const {
    return w2_offset() + static_cast<std::size_t>(kOutputs) * (hidden > 0 ? hidden : inputs);
  }
  std::size_t parameter_count() const { return b2_offset() + kOutputs; }
  std::string descriptor() const;

  std::array<double, 2> logits(std::span<const double> x) const;
  /// Cross-entropy of one sample; accumulates d(loss)/d(params) into grad when non-empty.
  double loss_and_gradient(std::span<const double> x, ClassLabel y, std::span<double> grad) const;
};

struct ClassifierModel {
  std::string architecture;
  Mlp net;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  TrainConfig train_config_used;
  std::array<std::string, 2> class_labels{"benign", "anomaly"};

  std::vector<double> normalize(std::span<const double> raw) const;
};

struct Prediction {
  ClassLabel label = ClassLabel::Benign;
  double probability = 0.5;
  std::array<double, 2> scores{0.5, 0.5};  // (benign, anomaly)
};

/// Numerically stable softmax; label is the argmax with ties going to benign.
Prediction prediction_from_logits(const std::array<double, 2>& logits);
/// Builds a prediction from an external anomaly probability.
Prediction prediction_from_probability(double anomaly_probability);

Prediction predict(const ClassifierModel& model, const FeatureVector& fv);

struct LabeledFeatures {
  FeatureVector features;
  ClassLabel label = ClassLabel::Benign;
};

/// Indices forming one training epoch: every sample once, plus minority samples drawn with
/// replacement until both classes have the majority count.
std::vector<std::size_t> balanced_indices(std::span<const ClassLabel> labels, bool upsample,
                                          std::mt19937_64& rng);

/// Uniform integer in [0, n) from raw engine output, identical across standard libraries.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

struct TrainResult {
  ClassifierModel model;
  std::vector<double> loss_history;  // mean loss per epoch
};

/// Momentum update applied per mini-batch: v = momentum * v - lr * grad; params += v.
void sgd_step(std::span<double> params, std::span<double> velocity, std::span<const double> grad,
              double learning_rate, double momentum);

TrainResult train(std::span<const LabeledFeatures> data, const TrainConfig& config);

/// Mean cross-entropy over a batch of raw feature vectors (normalised by the model).
double batch_loss(const ClassifierModel& model, std::span<const LabeledFeatures> batch);
std::vector<double> batch_gradient(const ClassifierModel& model,
                                   std::span<const LabeledFeatures> batch);

/// Largest |analytic - numeric| / max(|analytic|, |numeric|) over all parameters, using
/// central differences of step epsilon. Pairs where both sides are below 1e-10 count as 0.
double max_relative_error(const std::function<double(std::span<const double>)>& loss,
                          std::span<const double> analytic_gradient,
                          std::span<const double> params, double epsilon);
double gradient_check(const ClassifierModel& model, std::span<const LabeledFeatures> batch,
                      double epsilon);

void save_model(const std::filesystem::path& path, const ClassifierModel& model);
ClassifierModel load_model(const std::filesystem::path& path);

/// Exchangeable per-region classifier.
class RegionClassifier {
 public:
  virtual ~RegionClassifier() = default;
  virtual Prediction classify(const RegionCrop& crop) const = 0;
};

class ReferenceClassifier final : public RegionClassifier {
 public:
  explicit ReferenceClassifier(ClassifierModel model) : model_(std::move(model)) {}
  Prediction classify(const RegionCrop& crop) const override;
  const ClassifierModel& model() const { return model_; }

 private:
  ClassifierModel model_;
};

/// Scores produced by an outside process: CSV rows `crop_filename,anomaly_probability`.
class ExternalScores final : public RegionClassifier {
 public:
  static ExternalScores load(const std::filesystem::path& csv);
  Prediction classify(const RegionCrop& crop) const override;
  void set(std::string crop_filename, double anomaly_probability);

 private:
  std::map<std::string, double, std::less<>> scores_;
};

/// Writes each crop as `<dir>/<crop.file_name()>` and appends one line per crop to
/// `<dir>/requests.csv` (header written when the file is new).
void export_crops(const std::filesystem::path& dir, std::span<const RegionCrop> crops);

}  // namespace subseg
