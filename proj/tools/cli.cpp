#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "subseg/classify.hpp"
#include "subseg/color.hpp"
#include "subseg/error.hpp"
#include "subseg/eval.hpp"
#include "subseg/isolate.hpp"
#include "subseg/pipeline.hpp"
#include "subseg/png_io.hpp"
#include "subseg/regions.hpp"
#include "subseg/render.hpp"
#include "subseg/slic.hpp"
#include "subseg/synthgen.hpp"

namespace subseg::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  // shared
  std::string manifest;
  std::string out_dir;
  std::string image;
  std::string mask;
  std::string model;
  std::string scores;
  std::string strategy = "subcomponent";
  std::string level = "subcomponent";
  std::string decision_rule = "any";
  std::string export_crops;
  std::string labels;
  std::string segment_labels;
  std::string loss_out;
  bool render = false;
  bool isolate = false;
  bool no_connectivity = false;
  bool no_upsample = false;
  double luminance_threshold = 30.0;
  int thickness = 2;

  SynthConfig synth;
  PipelineOptions pipeline;
  TrainConfig train;
};

void add_slic_options(CLI::App* app, Options& o) {
  app->add_option("--k", o.pipeline.slic.k, "desired superpixel count K");
  app->add_option("--m", o.pipeline.slic.m, "compactness weight");
  app->add_option("--max-iters", o.pipeline.slic.max_iters, "SLIC iteration cap");
  app->add_option("--residual-threshold", o.pipeline.slic.residual_threshold,
                  "stop once summed center displacement falls below this");
  app->add_option("--min-segment-fraction", o.pipeline.slic.min_segment_fraction,
                  "orphan fragments below this fraction of S^2 are merged");
  app->add_flag("--no-connectivity", o.no_connectivity, "skip connectivity enforcement");
}

void add_pipeline_options(CLI::App* app, Options& o) {
  add_slic_options(app, o);
  app->add_option("--tau", o.pipeline.tau, "overlap fraction that makes a region anomalous");
  app->add_flag("--isolate", o.isolate,
                "estimate object masks by luminance thresholding instead of loading them");
  app->add_option("--threshold", o.luminance_threshold, "luminance threshold for --isolate");
}

void add_train_options(CLI::App* app, Options& o) {
  app->add_option("--lr", o.train.learning_rate, "learning rate");
  app->add_option("--momentum", o.train.momentum, "SGD momentum");
  app->add_option("--batch-size", o.train.batch_size, "mini-batch size");
  app->add_option("--epochs", o.train.epochs, "training epochs");
  app->add_option("--seed", o.train.rng_seed, "training RNG seed");
  app->add_option("--hidden", o.train.hidden_units, "hidden layer width (0 = linear)");
  app->add_flag("--no-upsample", o.no_upsample, "disable minority-class upsampling");
}

void finalize(Options& o) {
  o.pipeline.slic.enforce_connectivity = !o.no_connectivity;
  o.pipeline.threshold_isolation = o.isolate;
  o.pipeline.luminance_threshold = o.luminance_threshold;
  o.train.upsample_minority = !o.no_upsample;
  if (!(o.pipeline.tau > 0 && o.pipeline.tau <= 1)) throw usage_error("--tau must lie in (0,1]");
  validate(o.train);
  validate(o.pipeline.slic, std::numeric_limits<std::size_t>::max());
}

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw usage_error(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string image_id_of(const std::string& path) { return fs::path(path).stem().string(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write " + path.string());
  os << text;
  if (!os) throw io_error("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_gen(Options& o, std::ostream& out) {
  validate(o.synth);
  const fs::path dir(o.out_dir);
  generate_dataset(o.synth, dir);
  out << (dir / kManifestName).string() << "\n";
  return 0;
}

int cmd_segment(Options& o, std::ostream& out) {
  const Level level = parse_level(o.level);
  const RgbImage img = read_rgb_png(o.image);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  const std::string id = image_id_of(o.image);
  OverlaySpec spec;
  spec.contour_thickness = o.thickness;

  if (level == Level::Object) {
    const ObjectMask mask = o.mask.empty()
                                ? threshold_segment(img, o.luminance_threshold)
                                : load_mask(o.mask, std::pair{img.width, img.height});
    const fs::path mask_path = dir / (id + "_mask.png");
    save_mask(mask_path, mask);
    out << mask_path.string() << "\n";
    if (o.render) {
      SuperpixelMap map{img.width, img.height, std::vector<std::int32_t>(mask.bits.size()), 1};
      for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        map.labels[i] = mask.bits[i] ? 0 : kBackgroundLabel;
      }
      const fs::path overlay = dir / (id + "_overlay.png");
      write_rgb_png(overlay, draw_segment_contours(img, map, spec));
      out << overlay.string() << "\n";
    }
    return 0;
  }

  const LabImage lab = srgb_to_lab(img);
  SlicResult seg;
  if (!o.mask.empty()) {
    seg = segment(lab, load_mask(o.mask, std::pair{img.width, img.height}), o.pipeline.slic);
  } else if (o.isolate) {
    seg = segment(lab, threshold_segment(img, o.luminance_threshold), o.pipeline.slic);
  } else {
    seg = segment(lab, o.pipeline.slic);
  }
  const fs::path labels = dir / (id + "_labels.png");
  write_superpixel_map(labels, seg.map, o.pipeline.slic);
  out << labels.string() << "\n";
  out << "num_segments=" << seg.map.num_segments << " iterations=" << seg.residual_history.size()
      << "\n";
  if (o.render) {
    const fs::path overlay = dir / (id + "_overlay.png");
    write_rgb_png(overlay, draw_segment_contours(img, seg.map, spec));
    out << overlay.string() << "\n";
  }
  return 0;
}

int cmd_train(Options& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o.manifest);
  const Level strategy = parse_level(o.strategy);
  const auto data = collect_features(manifest, Split::Train, strategy, o.pipeline);
  std::size_t anomalous = 0;
  for (const auto& d : data) anomalous += d.label == ClassLabel::Anomaly ? 1 : 0;
  out << "regions=" << data.size() << " anomaly=" << anomalous
      << " benign=" << data.size() - anomalous << "\n";
  const TrainResult result = train(data, o.train);
  std::ostringstream losses;
  losses << "epoch,loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    out << "epoch " << e + 1 << " loss " << std::setprecision(6) << result.loss_history[e] << "\n";
    losses << e + 1 << "," << result.loss_history[e] << "\n";
  }
  save_model(o.model, result.model);
  if (!o.loss_out.empty()) write_text(o.loss_out, losses.str());
  out << o.model << "\n";
  return 0;
}

int cmd_eval(Options& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o.manifest);
  const Level strategy = parse_level(o.strategy);
  if (!o.export_crops.empty()) {
    const fs::path dir(o.export_crops);
    ensure_dir(dir);
    std::error_code ec;
    fs::remove(dir / "requests.csv", ec);
    std::size_t total = 0;
    for (const auto& r : manifest.records) {
      if (r.split != Split::Test) continue;
      const ImageRegions regions = load_image_regions(manifest, r, strategy, o.pipeline);
      export_crops(dir, regions.crops);
      total += regions.crops.size();
    }
    out << "exported " << total << " crops to " << dir.string() << "\n";
    return 0;
  }
  const DecisionRule rule = DecisionRule::parse(o.decision_rule);
  std::unique_ptr<RegionClassifier> classifier;
  if (!o.scores.empty()) {
    classifier = std::make_unique<ExternalScores>(ExternalScores::load(o.scores));
  } else if (!o.model.empty()) {
    classifier = std::make_unique<ReferenceClassifier>(load_model(o.model));
  } else {
    throw usage_error("eval needs --model or --scores");
  }
  const StrategyEvaluation eval = evaluate_strategy(manifest, strategy, *classifier, o.pipeline, rule);
  const std::vector<MetricsReport> rows{eval.region, eval.image};
  out << comparison_table(rows);
  if (!o.out_dir.empty()) {
    ensure_dir(o.out_dir);
    write_text(fs::path(o.out_dir) / "metrics.csv", comparison_csv(rows));
    write_text(fs::path(o.out_dir) / "metrics.txt", comparison_table(rows));
  }
  return 0;
}

int cmd_compare(Options& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o.manifest);
  ComparisonConfig config{o.pipeline, o.train, DecisionRule::parse(o.decision_rule)};
  const auto start = std::chrono::steady_clock::now();
  const ComparisonResult result = run_comparison(manifest, config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double total_ms = 0, worst_ms = 0;
  for (const auto& t : result.subcomponent_timings) {
    out << "timing " << t.image_id << " " << std::fixed << std::setprecision(1) << t.milliseconds
        << " ms\n";
    total_ms += t.milliseconds;
    worst_ms = std::max(worst_ms, t.milliseconds);
  }
  out.unsetf(std::ios::fixed);
  out << std::setprecision(4);
  if (!result.subcomponent_timings.empty()) {
    out << "subcomponent per-image latency: mean "
        << total_ms / static_cast<double>(result.subcomponent_timings.size()) << " ms, max "
        << worst_ms << " ms (reference figure ~500 ms)\n";
  }
  out << comparison_table(result.rows);
  out << "total " << seconds << " s\n";
  if (!o.out_dir.empty()) {
    ensure_dir(o.out_dir);
    write_text(fs::path(o.out_dir) / "comparison.csv", comparison_csv(result.rows));
    write_text(fs::path(o.out_dir) / "comparison.txt", comparison_table(result.rows));
  }
  return 0;
}

std::vector<ClassLabel> read_segment_labels(const fs::path& path, int num_segments) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path.string());
  std::vector<int> seen(num_segments, 0);
  std::vector<ClassLabel> labels(num_segments, ClassLabel::Benign);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.find(',');
    if (line.empty() || comma == std::string::npos || line.rfind("segment_id", 0) == 0) continue;
    const int id = std::stoi(line.substr(0, comma));
    if (id < 0 || id >= num_segments) throw data_error("segment id out of range: " + line);
    labels[id] = parse_class_label(line.substr(comma + 1));
    seen[id] = 1;
  }
  for (int id = 0; id < num_segments; ++id) {
    if (!seen[id]) throw data_error("missing label for segment " + std::to_string(id));
  }
  return labels;
}

int cmd_render(Options& o, std::ostream& out) {
  const RgbImage img = read_rgb_png(o.image);
  const SuperpixelMap map = read_superpixel_map(o.labels);
  OverlaySpec spec;
  spec.contour_thickness = o.thickness;
  RgbImage overlay;
  if (!o.segment_labels.empty()) {
    overlay = draw_labeled_contours(img, map, read_segment_labels(o.segment_labels, map.num_segments), spec);
  } else if (!o.model.empty()) {
    const ReferenceClassifier classifier(load_model(o.model));
    std::vector<ClassLabel> labels(map.num_segments, ClassLabel::Benign);
    for (const auto& crop : extract_subcomponent_regions(img, map, image_id_of(o.image))) {
      labels[crop.segment_id] = classifier.classify(crop).label;
    }
    overlay = draw_labeled_contours(img, map, labels, spec);
  } else {
    overlay = draw_segment_contours(img, map, spec);
  }
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  const fs::path path = dir / (image_id_of(o.image) + "_overlay.png");
  write_rgb_png(path, overlay);
  out << path.string() << "\n";
  return 0;
}

std::string config_path_from(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  const char* env = std::getenv("SUBSEG_CONFIG");
  return env ? env : "";
}

}  // namespace

int run(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Object-level vs sub-component-level anomaly detection pipeline", "subseg"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "key=value defaults (also SUBSEG_CONFIG)");

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", o.out_dir, "output directory")->required();
  gen->add_option("--n", o.synth.n_images, "number of images");
  gen->add_option("--seed", o.synth.rng_seed, "dataset seed");
  gen->add_option("--width", o.synth.image_w, "image width");
  gen->add_option("--height", o.synth.image_h, "image height");
  gen->add_option("--anomaly-prob", o.synth.anomaly_probability, "probability of an anomaly");
  gen->add_option("--area-min", o.synth.anomaly_area_min, "smallest anomaly, fraction of object");
  gen->add_option("--area-max", o.synth.anomaly_area_max, "largest anomaly, fraction of object");
  gen->add_option("--texture-scale", o.synth.texture_scale, "stripe period multiplier");
  gen->add_option("--noise", o.synth.noise_sigma, "Gaussian pixel noise sigma");
  gen->add_option("--train-fraction", o.synth.train_fraction, "fraction of images in train split");

  auto* seg = app.add_subcommand("segment", "object mask or superpixel map for one image");
  seg->add_option("--image", o.image, "input PNG")->required();
  seg->add_option("--level", o.level, "object|subcomponent");
  seg->add_option("--out", o.out_dir, "output directory")->required();
  seg->add_option("--mask", o.mask, "object mask PNG (skips thresholding)");
  seg->add_flag("--render", o.render, "also write a contour overlay");
  seg->add_option("--thickness", o.thickness, "contour thickness");
  add_pipeline_options(seg, o);

  auto* trn = app.add_subcommand("train", "train the reference region classifier");
  trn->add_option("--manifest", o.manifest, "dataset manifest")->required();
  trn->add_option("--strategy", o.strategy, "object|subcomponent");
  trn->add_option("--model", o.model, "output model file")->required();
  trn->add_option("--loss-out", o.loss_out, "CSV of per-epoch loss");
  add_pipeline_options(trn, o);
  add_train_options(trn, o);

  auto* evl = app.add_subcommand("eval", "score the test split with a model or external scores");
  evl->add_option("--manifest", o.manifest, "dataset manifest")->required();
  evl->add_option("--strategy", o.strategy, "object|subcomponent");
  evl->add_option("--model", o.model, "model file");
  evl->add_option("--scores", o.scores, "external scorer CSV crop_filename,anomaly_probability");
  evl->add_option("--export-crops", o.export_crops, "write test crops + requests.csv and stop");
  evl->add_option("--decision-rule", o.decision_rule, "any | fraction:<tau>");
  evl->add_option("--out", o.out_dir, "directory for metrics.csv / metrics.txt");
  add_pipeline_options(evl, o);

  auto* cmp = app.add_subcommand("compare", "train and evaluate both strategies");
  cmp->add_option("--manifest", o.manifest, "dataset manifest")->required();
  cmp->add_option("--decision-rule", o.decision_rule, "any | fraction:<tau>");
  cmp->add_option("--out", o.out_dir, "directory for comparison.csv / comparison.txt");
  add_pipeline_options(cmp, o);
  add_train_options(cmp, o);

  auto* rnd = app.add_subcommand("render", "draw segment contours over an image");
  rnd->add_option("--image", o.image, "input PNG")->required();
  rnd->add_option("--labels", o.labels, "label map PNG written by segment")->required();
  rnd->add_option("--out", o.out_dir, "output directory")->required();
  rnd->add_option("--segment-labels", o.segment_labels, "CSV segment_id,anomaly|benign");
  rnd->add_option("--model", o.model, "classify each segment with this model");
  rnd->add_option("--thickness", o.thickness, "contour thickness");

  try {
    // Config values go in front of the user's flags; the last occurrence of an option wins.
    std::vector<std::string> args = input;
    const std::string config = config_path_from(input);
    if (!config.empty()) {
      const auto kv = read_config(config);
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i].rfind("-", 0) == 0) continue;
        CLI::App* sub = app.get_subcommand_no_throw(args[i]);
        if (!sub) continue;
        std::vector<std::string> injected;
        for (const auto& [key, value] : kv) {
          if (sub->get_option_no_throw("--" + key)) injected.push_back("--" + key + "=" + value);
        }
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, injected.begin(),
                    injected.end());
        break;
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Error& e) {
    err << "subseg: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Usage);
  } catch (const Error& e) {
    err << "subseg: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  }

  try {
    finalize(o);
    if (gen->parsed()) return cmd_gen(o, out);
    if (seg->parsed()) return cmd_segment(o, out);
    if (trn->parsed()) return cmd_train(o, out);
    if (evl->parsed()) return cmd_eval(o, out);
    if (cmp->parsed()) return cmd_compare(o, out);
    if (rnd->parsed()) return cmd_render(o, out);
    throw usage_error("no command given");
  } catch (const Error& e) {
    err << "subseg: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "subseg: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "subseg: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Data);
  }
}

}  // namespace subseg::cli
