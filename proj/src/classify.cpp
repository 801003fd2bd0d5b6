#include "subseg/classify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subseg/color.hpp"
#include "subseg/error.hpp"
#include "subseg/png_io.hpp"

namespace subseg {
namespace {

// Lab conversion with a small direct-mapped memo; crops repeat colours heavily (fill,
// flat interiors).
class LabCache {
 public:
  LabCache() : keys_(kSlots, kEmpty), values_(kSlots) {}

  const std::array<double, 3>& get(Rgb c) {
    const std::uint32_t key = (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b;
    const std::uint32_t slot = (key * 2654435761u) >> (32 - kBits);
    if (keys_[slot] != key) {
      keys_[slot] = key;
      values_[slot] = srgb_to_lab(c);
    }
    return values_[slot];
  }

 private:
  static constexpr int kBits = 14;
  static constexpr std::size_t kSlots = std::size_t{1} << kBits;
  static constexpr std::uint32_t kEmpty = 0xffffffffu;
  std::vector<std::uint32_t> keys_;
  std::vector<std::array<double, 3>> values_;
};

int bin_of(double v, double lo, double hi, int bins) {
  const double b = (v - lo) / (hi - lo) * bins;
  if (!(b > 0)) return 0;
  return b >= bins ? bins - 1 : static_cast<int>(b);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  const U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& os, const std::string& s) {
  put(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == EOF) throw data_error("model file truncated");
    u |= static_cast<U>(static_cast<U>(c & 0xff) << (8 * i));
  }
  return static_cast<T>(u);
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }

std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 20)) throw data_error("model file corrupt: oversized string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw data_error("model file truncated");
  return s;
}

constexpr char kMagic[8] = {'S', 'U', 'B', 'S', 'E', 'G', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

std::string_view to_string(ClassLabel label) {
  return label == ClassLabel::Anomaly ? "anomaly" : "benign";
}

ClassLabel parse_class_label(std::string_view s) {
  if (s == "anomaly") return ClassLabel::Anomaly;
  if (s == "benign") return ClassLabel::Benign;
  throw data_error("unknown class label '" + std::string(s) + "'");
}

FeatureVector featurize(const RgbImage& pixels) {
  const int w = pixels.width, h = pixels.height;
  const std::size_t n = pixels.pixel_count();
  thread_local LabCache cache;
  thread_local std::vector<double> light;
  light.resize(n);

  FeatureVector fv;
  fv.values.assign(kFeatureLength, 0.0);
  double* grid = fv.values.data();
  double* color_hist = grid + kPoolGrid * kPoolGrid * 3;
  double* grad_hist = color_hist + kColorBins * 3;

  // Pool cell of each column; cell bounds are i*w/8 .. (i+1)*w/8.
  std::vector<int> cell_x(w), cell_y(h);
  for (int x = 0; x < w; ++x) cell_x[x] = std::min(kPoolGrid - 1, (x * kPoolGrid + kPoolGrid - 1) / w);
  for (int c = 0; c < kPoolGrid; ++c) {
    for (int x = c * w / kPoolGrid; x < (c + 1) * w / kPoolGrid; ++x) cell_x[x] = c;
    for (int y = c * h / kPoolGrid; y < (c + 1) * h / kPoolGrid; ++y) cell_y[y] = c;
  }
  std::array<int, kPoolGrid * kPoolGrid> cell_count{};
  std::array<int, kColorBins * 3> hist_count{};

  const std::uint8_t* src = pixels.data.data();
  for (int y = 0; y < h; ++y) {
    double* cell_row = grid + cell_y[y] * kPoolGrid * 3;
    int* count_row = cell_count.data() + cell_y[y] * kPoolGrid;
    for (int x = 0; x < w; ++x, src += 3) {
      const auto& lab = cache.get({src[0], src[1], src[2]});
      light[static_cast<std::size_t>(y) * w + x] = lab[0];
      double* cell = cell_row + cell_x[x] * 3;
      cell[0] += lab[0];
      cell[1] += lab[1];
      cell[2] += lab[2];
      ++count_row[cell_x[x]];
      ++hist_count[bin_of(lab[0], 0.0, 100.0, kColorBins)];
      ++hist_count[kColorBins + bin_of(lab[1], -128.0, 128.0, kColorBins)];
      ++hist_count[2 * kColorBins + bin_of(lab[2], -128.0, 128.0, kColorBins)];
    }
  }
  for (int c = 0; c < kPoolGrid * kPoolGrid; ++c) {
    for (int k = 0; k < 3; ++k) grid[3 * c + k] = cell_count[c] ? grid[3 * c + k] / cell_count[c] : 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int b = 0; b < kColorBins * 3; ++b) color_hist[b] = hist_count[b] * inv_n;

  // Central differences on L with replicated borders.
  std::array<int, kGradientBins> grad_count{};
  for (int y = 0; y < h; ++y) {
    const double* row = light.data() + static_cast<std::size_t>(y) * w;
    const double* up = light.data() + static_cast<std::size_t>(std::max(0, y - 1)) * w;
    const double* down = light.data() + static_cast<std::size_t>(std::min(h - 1, y + 1)) * w;
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (row[std::min(w - 1, x + 1)] - row[std::max(0, x - 1)]);
      const double gy = 0.5 * (down[x] - up[x]);
      const double mag = std::sqrt(gx * gx + gy * gy);
      ++grad_count[bin_of(mag, 0.0, kGradientBinWidth * kGradientBins, kGradientBins)];
    }
  }
  for (int b = 0; b < kGradientBins; ++b) grad_hist[b] = grad_count[b] * inv_n;
  return fv;
}

FeatureVector featurize(const RegionCrop& crop) { return featurize(crop.pixels); }

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0)) throw usage_error("learning rate must be positive");
  if (!(c.momentum >= 0 && c.momentum < 1)) throw usage_error("momentum must lie in [0,1)");
  if (c.batch_size < 1) throw usage_error("batch size must be positive");
  if (c.epochs < 1) throw usage_error("epochs must be positive");
  if (!(c.train_fraction > 0 && c.train_fraction < 1)) {
    throw usage_error("train fraction must lie in (0,1)");
  }
  if (c.hidden_units < 0) throw usage_error("hidden units must be non-negative");
}

Mlp::Mlp(int in, int hid) : inputs(in), hidden(hid) { params.assign(parameter_count(), 0.0); }

std::string Mlp::descriptor() const {
  std::ostringstream os;
  os << "mlp:" << inputs;
  if (hidden > 0) os << "-" << hidden << "tanh";
  os << "-" << kOutputs << "softmax";
  return os.str();
}

std::array<double, 2> Mlp::logits(std::span<const double> x) const {
  std::array<double, 2> z{params[b2_offset()], params[b2_offset() + 1]};
  const double* w2 = params.data() + w2_offset();
  if (hidden == 0) {
    for (int o = 0; o < kOutputs; ++o) {
      for (int i = 0; i < inputs; ++i) z[o] += w2[o * inputs + i] * x[i];
    }
    return z;
  }
  const double* w1 = params.data() + w1_offset();
  const double* b1 = params.data() + b1_offset();
  for (int j = 0; j < hidden; ++j) {
    double a = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * inputs;
    for (int i = 0; i < inputs; ++i) a += row[i] * x[i];
    const double t = std::tanh(a);
    z[0] += w2[j] * t;
    z[1] += w2[hidden + j] * t;
  }
  return z;
}

double Mlp::loss_and_gradient(std::span<const double> x, ClassLabel y,
                              std::span<double> grad) const {
  const int target = static_cast<int>(y);
  std::vector<double> act;
  std::array<double, 2> z{params[b2_offset()], params[b2_offset() + 1]};
  const double* w2 = params.data() + w2_offset();
  const int width = hidden > 0 ? hidden : inputs;
  if (hidden == 0) {
    act.assign(x.begin(), x.end());
  } else {
    act.resize(hidden);
    const double* w1 = params.data() + w1_offset();
    const double* b1 = params.data() + b1_offset();
    for (int j = 0; j < hidden; ++j) {
      double a = b1[j];
      const double* row = w1 + static_cast<std::size_t>(j) * inputs;
      for (int i = 0; i < inputs; ++i) a += row[i] * x[i];
      act[j] = std::tanh(a);
    }
  }
  for (int o = 0; o < kOutputs; ++o) {
    for (int j = 0; j < width; ++j) z[o] += w2[o * width + j] * act[j];
  }
  const double zmax = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - zmax), e1 = std::exp(z[1] - zmax);
  const double log_sum = zmax + std::log(e0 + e1);
  const double loss = log_sum - z[target];
  if (grad.empty()) return loss;

  const double p[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
  const double dz[2] = {p[0] - (target == 0 ? 1.0 : 0.0), p[1] - (target == 1 ? 1.0 : 0.0)};
  double* gw2 = grad.data() + w2_offset();
  double* gb2 = grad.data() + b2_offset();
  for (int o = 0; o < kOutputs; ++o) {
    gb2[o] += dz[o];
    for (int j = 0; j < width; ++j) gw2[o * width + j] += dz[o] * act[j];
  }
  if (hidden == 0) return loss;
  double* gw1 = grad.data() + w1_offset();
  double* gb1 = grad.data() + b1_offset();
  for (int j = 0; j < hidden; ++j) {
    const double dh = w2[j] * dz[0] + w2[hidden + j] * dz[1];
    const double da = dh * (1.0 - act[j] * act[j]);
    gb1[j] += da;
    double* row = gw1 + static_cast<std::size_t>(j) * inputs;
    for (int i = 0; i < inputs; ++i) row[i] += da * x[i];
  }
  return loss;
}

std::vector<double> ClassifierModel::normalize(std::span<const double> raw) const {
  if (raw.size() != feature_mean.size()) {
    throw data_error("feature length " + std::to_string(raw.size()) + " does not match model (" +
                     std::to_string(feature_mean.size()) + ")");
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - feature_mean[i]) / feature_std[i];
  return out;
}

Prediction prediction_from_logits(const std::array<double, 2>& z) {
  const double zmax = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - zmax), e1 = std::exp(z[1] - zmax);
  Prediction p;
  p.scores = {e0 / (e0 + e1), e1 / (e0 + e1)};
  p.label = p.scores[1] > p.scores[0] ? ClassLabel::Anomaly : ClassLabel::Benign;
  p.probability = p.scores[static_cast<int>(p.label)];
  return p;
}

Prediction prediction_from_probability(double anomaly_probability) {
  if (!(anomaly_probability >= 0.0 && anomaly_probability <= 1.0)) {
    throw data_error("anomaly probability outside [0,1]");
  }
  Prediction p;
  p.scores = {1.0 - anomaly_probability, anomaly_probability};
  p.label = p.scores[1] > p.scores[0] ? ClassLabel::Anomaly : ClassLabel::Benign;
  p.probability = p.scores[static_cast<int>(p.label)];
  return p;
}

Prediction predict(const ClassifierModel& model, const FeatureVector& fv) {
  const std::vector<double> x = model.normalize(fv.values);
  return prediction_from_logits(model.net.logits(x));
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

std::vector<std::size_t> balanced_indices(std::span<const ClassLabel> labels, bool upsample,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) idx[i] = i;
  if (!upsample) return idx;
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& pool = by_class[minority];
  const std::size_t deficit = by_class[1 - minority].size() - pool.size();
  if (pool.empty()) return idx;
  for (std::size_t k = 0; k < deficit; ++k) idx.push_back(pool[uniform_index(rng, pool.size())]);
  return idx;
}

void sgd_step(std::span<double> params, std::span<double> velocity, std::span<const double> grad,
              double learning_rate, double momentum) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    velocity[p] = momentum * velocity[p] - learning_rate * grad[p];
    params[p] += velocity[p];
  }
}

TrainResult train(std::span<const LabeledFeatures> data, const TrainConfig& config) {
  validate(config);
  if (data.empty()) throw data_error("empty training set");
  const std::size_t dim = data.front().features.length();
  std::size_t counts[2] = {0, 0};
  for (const auto& d : data) {
    if (d.features.length() != dim) throw data_error("inconsistent feature lengths");
    for (const double v : d.features.values) {
      if (!std::isfinite(v)) throw data_error("non-finite feature value");
    }
    ++counts[static_cast<int>(d.label)];
  }
  if (counts[0] == 0 || counts[1] == 0) throw data_error("single-class dataset");

  TrainResult result;
  ClassifierModel& model = result.model;
  model.train_config_used = config;
  model.feature_mean.assign(dim, 0.0);
  model.feature_std.assign(dim, 0.0);
  for (const auto& d : data) {
    for (std::size_t i = 0; i < dim; ++i) model.feature_mean[i] += d.features.values[i];
  }
  for (auto& m : model.feature_mean) m /= static_cast<double>(data.size());
  for (const auto& d : data) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double dv = d.features.values[i] - model.feature_mean[i];
      model.feature_std[i] += dv * dv;
    }
  }
  for (auto& s : model.feature_std) {
    s = std::sqrt(s / static_cast<double>(data.size()));
    if (!(s > 1e-8)) s = 1.0;
  }

  std::vector<double> x(data.size() * dim);
  std::vector<ClassLabel> labels(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto z = model.normalize(data[n].features.values);
    std::copy(z.begin(), z.end(), x.begin() + static_cast<std::ptrdiff_t>(n * dim));
    labels[n] = data[n].label;
  }

  std::mt19937_64 rng(config.rng_seed);
  Mlp& net = model.net;
  net = Mlp(static_cast<int>(dim), config.hidden_units);
  model.architecture = net.descriptor();
  // Xavier-uniform weights, zero biases.
  auto init = [&](std::size_t offset, std::size_t count, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) net.params[offset + i] = (2 * uniform01(rng) - 1) * limit;
  };
  if (net.hidden > 0) {
    init(net.w1_offset(), net.b1_offset(), net.inputs, net.hidden);
    init(net.w2_offset(), net.b2_offset() - net.w2_offset(), net.hidden, Mlp::kOutputs);
  } else {
    init(net.w2_offset(), net.b2_offset() - net.w2_offset(), net.inputs, Mlp::kOutputs);
  }

  std::vector<std::size_t> order = balanced_indices(labels, config.upsample_minority, rng);
  std::vector<double> velocity(net.parameter_count(), 0.0);
  std::vector<double> grad(net.parameter_count());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t n = order[k];
        epoch_loss += net.loss_and_gradient(std::span<const double>(x.data() + n * dim, dim),
                                            labels[n], grad);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= scale;
      sgd_step(net.params, velocity, grad, config.learning_rate, config.momentum);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

double batch_loss(const ClassifierModel& model, std::span<const LabeledFeatures> batch) {
  double total = 0.0;
  for (const auto& s : batch) {
    total += model.net.loss_and_gradient(model.normalize(s.features.values), s.label, {});
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> batch_gradient(const ClassifierModel& model,
                                   std::span<const LabeledFeatures> batch) {
  std::vector<double> grad(model.net.parameter_count(), 0.0);
  for (const auto& s : batch) {
    model.net.loss_and_gradient(model.normalize(s.features.values), s.label, grad);
  }
  for (auto& g : grad) g /= static_cast<double>(batch.size());
  return grad;
}

double max_relative_error(const std::function<double(std::span<const double>)>& loss,
                          std::span<const double> analytic_gradient,
                          std::span<const double> params, double epsilon) {
  std::vector<double> p(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + epsilon;
    const double up = loss(p);
    p[i] = saved - epsilon;
    const double down = loss(p);
    p[i] = saved;
    const double numeric = (up - down) / (2 * epsilon);
    const double analytic = analytic_gradient[i];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    if (scale < 1e-10) continue;
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

double gradient_check(const ClassifierModel& model, std::span<const LabeledFeatures> batch,
                      double epsilon) {
  if (!(epsilon > 0 && epsilon <= 1e-2)) throw usage_error("epsilon must lie in (0, 1e-2]");
  const std::vector<double> analytic = batch_gradient(model, batch);
  ClassifierModel probe = model;
  auto loss = [&](std::span<const double> params) {
    std::copy(params.begin(), params.end(), probe.net.params.begin());
    return batch_loss(probe, batch);
  };
  return max_relative_error(loss, analytic, model.net.params, epsilon);
}

void save_model(const std::filesystem::path& path, const ClassifierModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write model " + path.string());
  os.write(kMagic, sizeof kMagic);
  put(os, kModelVersion);
  put_string(os, model.architecture);
  put_string(os, model.class_labels[0]);
  put_string(os, model.class_labels[1]);
  put(os, static_cast<std::uint32_t>(model.net.inputs));
  put(os, static_cast<std::uint32_t>(model.net.hidden));
  put(os, static_cast<std::uint32_t>(Mlp::kOutputs));
  const TrainConfig& c = model.train_config_used;
  put_f64(os, c.learning_rate);
  put_f64(os, c.momentum);
  put(os, static_cast<std::uint32_t>(c.batch_size));
  put(os, static_cast<std::uint32_t>(c.epochs));
  put(os, c.rng_seed);
  put(os, static_cast<std::uint8_t>(c.upsample_minority ? 1 : 0));
  put_f64(os, c.train_fraction);
  put(os, static_cast<std::uint32_t>(c.hidden_units));
  for (const double v : model.feature_mean) put_f64(os, v);
  for (const double v : model.feature_std) put_f64(os, v);
  put(os, static_cast<std::uint64_t>(model.net.params.size()));
  for (const double v : model.net.params) put_f64(os, v);
  if (!os) throw io_error("failed writing model " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open model " + path.string());
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw data_error(path.string() + " is not a model file");
  }
  if (get<std::uint32_t>(is) != kModelVersion) throw data_error("unsupported model version");
  ClassifierModel m;
  m.architecture = get_string(is);
  m.class_labels[0] = get_string(is);
  m.class_labels[1] = get_string(is);
  const auto inputs = static_cast<int>(get<std::uint32_t>(is));
  const auto hidden = static_cast<int>(get<std::uint32_t>(is));
  if (get<std::uint32_t>(is) != Mlp::kOutputs) throw data_error("model must have two outputs");
  TrainConfig& c = m.train_config_used;
  c.learning_rate = get_f64(is);
  c.momentum = get_f64(is);
  c.batch_size = static_cast<int>(get<std::uint32_t>(is));
  c.epochs = static_cast<int>(get<std::uint32_t>(is));
  c.rng_seed = get<std::uint64_t>(is);
  c.upsample_minority = get<std::uint8_t>(is) != 0;
  c.train_fraction = get_f64(is);
  c.hidden_units = static_cast<int>(get<std::uint32_t>(is));
  m.net = Mlp(inputs, hidden);
  m.feature_mean.resize(inputs);
  m.feature_std.resize(inputs);
  for (auto& v : m.feature_mean) v = get_f64(is);
  for (auto& v : m.feature_std) {
    v = get_f64(is);
    if (!(v > 0)) throw data_error("model normalisation std must be positive");
  }
  if (get<std::uint64_t>(is) != m.net.parameter_count()) {
    throw data_error("model weight count does not match its architecture");
  }
  for (auto& v : m.net.params) v = get_f64(is);
  if (m.architecture != m.net.descriptor()) throw data_error("model architecture mismatch");
  return m;
}

Prediction ReferenceClassifier::classify(const RegionCrop& crop) const {
  return predict(model_, featurize(crop));
}

ExternalScores ExternalScores::load(const std::filesystem::path& csv) {
  std::ifstream is(csv);
  if (!is) throw io_error("cannot open scores " + csv.string());
  ExternalScores out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw data_error(csv.string() + ":" + std::to_string(line_no) + ": expected two columns");
    }
    const std::string name = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (line_no == 1 && name == "crop_filename") continue;
    double p = 0;
    try {
      std::size_t used = 0;
      p = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw data_error(csv.string() + ":" + std::to_string(line_no) + ": bad probability");
    }
    out.set(name, p);
  }
  return out;
}

void ExternalScores::set(std::string crop_filename, double anomaly_probability) {
  if (!(anomaly_probability >= 0.0 && anomaly_probability <= 1.0)) {
    throw data_error("anomaly probability outside [0,1] for " + crop_filename);
  }
  scores_[std::move(crop_filename)] = anomaly_probability;
}

Prediction ExternalScores::classify(const RegionCrop& crop) const {
  const auto it = scores_.find(crop.file_name());
  if (it == scores_.end()) throw data_error("no external score for " + crop.file_name());
  return prediction_from_probability(it->second);
}

void export_crops(const std::filesystem::path& dir, std::span<const RegionCrop> crops) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "requests.csv";
  const bool fresh = !std::filesystem::exists(manifest);
  std::ofstream os(manifest, std::ios::app);
  if (!os) throw io_error("cannot write " + manifest.string());
  if (fresh) os << "crop_filename,image_id,level,segment_id,x0,y0,x1,y1\n";
  for (const auto& c : crops) {
    write_rgb_png(dir / c.file_name(), c.pixels);
    os << c.file_name() << ',' << c.source_image_id << ',' << to_string(c.level) << ','
       << (c.level == Level::Object ? 0 : c.segment_id) << ',' << c.source_box.x0 << ','
       << c.source_box.y0 << ',' << c.source_box.x1 << ',' << c.source_box.y1 << '\n';
  }
  if (!os) throw io_error("failed writing " + manifest.string());
}

}  // namespace subseg
