#include "dsrcnn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "dsrcnn/image_io.hpp"
#include "dsrcnn/report.hpp"

namespace dsrcnn {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void require_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw CommandError("config: " + where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw CommandError("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read_field(const ordered_json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CommandError("config: bad value for " + where + "." + key);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CommandError("cannot write " + path.string());
  f << text;
  if (!f) throw CommandError("failed writing " + path.string());
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(path, os.str());
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw CommandError("cannot create output directory " + out.string());
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

RunConfig resolve(RunConfig config) {
  config.model.seed = config.seed;
  config.sgd.seed = config.seed;
  try {
    validate(config.model);
    validate(config.sgd);
    validate(config.metrics);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  return config;
}

std::string to_json_text(const RunConfig& c) {
  ordered_json doc;
  doc["seed"] = c.seed;
  doc["model"] = {{"input_channels", c.model.input_channels},
                  {"block_channels", c.model.block_channels},
                  {"convs_per_block", c.model.convs_per_block},
                  {"rcl_steps", c.model.rcl_steps},
                  {"kernel_side", c.model.kernel_side},
                  {"dropout_ratio", c.model.dropout_ratio}};
  doc["sgd"] = {{"learning_rate", c.sgd.learning_rate},
                {"momentum", c.sgd.momentum},
                {"weight_decay", c.sgd.weight_decay},
                {"iterations", c.sgd.iterations}};
  doc["metrics"] = {{"beta_sq", c.metrics.beta_sq},
                    {"weighted_beta_sq", c.metrics.weighted_beta_sq},
                    {"thresholds", c.metrics.thresholds}};
  return doc.dump(2) + "\n";
}

RunConfig parse_run_config(const std::string& text, RunConfig c) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CommandError(std::string("config: ") + e.what());
  }
  require_keys(doc, {"seed", "model", "sgd", "metrics"}, "top level");
  read_field(doc, "seed", c.seed, "config");
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    require_keys(m, {"input_channels", "block_channels", "convs_per_block", "rcl_steps", "kernel_side",
                     "dropout_ratio"},
                 "model");
    read_field(m, "input_channels", c.model.input_channels, "model");
    read_field(m, "block_channels", c.model.block_channels, "model");
    read_field(m, "convs_per_block", c.model.convs_per_block, "model");
    read_field(m, "rcl_steps", c.model.rcl_steps, "model");
    read_field(m, "kernel_side", c.model.kernel_side, "model");
    read_field(m, "dropout_ratio", c.model.dropout_ratio, "model");
  }
  if (doc.contains("sgd")) {
    const auto& s = doc["sgd"];
    require_keys(s, {"learning_rate", "momentum", "weight_decay", "iterations"}, "sgd");
    read_field(s, "learning_rate", c.sgd.learning_rate, "sgd");
    read_field(s, "momentum", c.sgd.momentum, "sgd");
    read_field(s, "weight_decay", c.sgd.weight_decay, "sgd");
    read_field(s, "iterations", c.sgd.iterations, "sgd");
  }
  if (doc.contains("metrics")) {
    const auto& m = doc["metrics"];
    require_keys(m, {"beta_sq", "weighted_beta_sq", "thresholds"}, "metrics");
    read_field(m, "beta_sq", c.metrics.beta_sq, "metrics");
    read_field(m, "weighted_beta_sq", c.metrics.weighted_beta_sq, "metrics");
    read_field(m, "thresholds", c.metrics.thresholds, "metrics");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path, RunConfig defaults) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CommandError("cannot read config " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return parse_run_config(os.str(), std::move(defaults));
}

PairScan match_by_stem(const fs::path& first_dir, const fs::path& second_dir) {
  for (const fs::path& d : {first_dir, second_dir}) {
    if (!fs::is_directory(d)) throw CommandError("not a directory: " + d.string());
  }
  PairScan scan;
  auto index = [&](const fs::path& dir) {
    std::map<std::string, fs::path> by_stem;
    for (const fs::path& p : image_files(dir)) {
      const std::string stem = p.stem().string();
      if (!by_stem.emplace(stem, p).second) {
        scan.issues.push_back("ambiguous stem '" + stem + "' in " + dir.string() + ", using " +
                              by_stem[stem].filename().string());
      }
    }
    return by_stem;
  };
  const auto a = index(first_dir);
  const auto b = index(second_dir);
  for (const auto& [stem, path] : a) {
    auto it = b.find(stem);
    if (it == b.end()) {
      scan.issues.push_back("no match for " + path.string());
    } else {
      scan.pairs.push_back({stem, path, it->second});
    }
  }
  for (const auto& [stem, path] : b) {
    if (!a.count(stem)) scan.issues.push_back("no match for " + path.string());
  }
  return scan;
}

PairScan scan_dataset(const fs::path& root) { return match_by_stem(root / "images", root / "masks"); }

int cmd_train(const RunConfig& raw, const fs::path& dataset, const fs::path& out, std::ostream& log) {
  const RunConfig config = resolve(raw);
  const PairScan scan = scan_dataset(dataset);
  for (const std::string& issue : scan.issues) log << "skipped: " << issue << '\n';

  std::vector<Sample> corpus;
  for (const FilePair& p : scan.pairs) {
    try {
      const Image img = read_image(p.first);
      const Image mask = read_image(p.second);
      if (img.height != mask.height || img.width != mask.width) {
        log << "skipped: " << p.name << ": image and mask sizes differ\n";
        continue;
      }
      if (img.height < kMinImageSide || img.width < kMinImageSide) {
        log << "skipped: " << p.name << ": smaller than " << kMinImageSide << "x" << kMinImageSide << '\n';
        continue;
      }
      corpus.push_back({p.name, image_to_tensor(img, config.model.input_channels), image_to_mask(mask)});
    } catch (const ImageError& e) {
      log << "skipped: " << p.name << ": " << e.what() << '\n';
    }
  }
  if (corpus.empty()) throw CommandError("no usable image/mask pairs under " + dataset.string());

  prepare_out(out);
  fs::remove(out / kAbortedFile);
  write_text(out / kConfigFile, to_json_text(config));

  Rng init_rng(config.seed);
  Model model = build_model(config.model, init_rng);
  std::vector<LossBreakdown> history;
  double epoch_sum = 0.0;
  std::size_t epoch_len = 0;
  auto flush_epoch = [&] {
    if (epoch_len == 0) return;
    log << "epoch " << (history.size() - 1) / corpus.size() + 1 << " mean total loss "
        << format_real(epoch_sum / static_cast<double>(epoch_len)) << '\n';
    epoch_sum = 0.0;
    epoch_len = 0;
  };
  auto on_iteration = [&](std::size_t it, const LossBreakdown& lb) {
    history.push_back(lb);
    epoch_sum += lb.total;
    ++epoch_len;
    if ((it + 1) % corpus.size() == 0) flush_epoch();
  };

  try {
    train(model, corpus, config.sgd, on_iteration);
  } catch (const TrainingAborted& e) {
    write_stream(out / kLossFile, [&](std::ostream& os) { write_loss_csv(os, history); });
    write_text(out / kAbortedFile, std::string(e.what()) + "\n");
    log << "training aborted after " << history.size() << " iterations: " << e.what() << '\n';
    return 2;
  }
  flush_epoch();
  save_weights(model, out / kWeightsFile);
  write_stream(out / kLossFile, [&](std::ostream& os) { write_loss_csv(os, history); });
  log << "wrote " << (out / kWeightsFile).string() << " after " << history.size() << " iterations\n";
  return 0;
}

int cmd_infer(const RunConfig& raw, const fs::path& weights, const fs::path& input, const fs::path& out,
              bool side_maps, std::ostream& log) {
  Model model;
  try {
    model = load_weights(weights);
  } catch (const WeightFileError& e) {
    throw CommandError(e.what());
  }
  RunConfig config = raw;
  config.model = model.config;
  config.seed = model.config.seed;

  std::vector<fs::path> inputs;
  if (fs::is_directory(input)) {
    inputs = image_files(input);
  } else if (fs::is_regular_file(input)) {
    inputs.push_back(input);
  } else {
    throw CommandError("no such input: " + input.string());
  }

  prepare_out(out);
  write_text(out / kConfigFile, to_json_text(config));
  std::size_t written = 0;
  for (const fs::path& path : inputs) {
    Image img;
    try {
      img = read_image(path);
    } catch (const ImageError& e) {
      log << "skipped: " << path.string() << ": " << e.what() << '\n';
      continue;
    }
    if (img.height < kMinImageSide || img.width < kMinImageSide) {
      log << "skipped: " << path.string() << ": " << img.width << "x" << img.height << " is below the "
          << kMinImageSide << "x" << kMinImageSide << " minimum\n";
      continue;
    }
    Rng unused(0);
    const ForwardResult r = forward(model, image_to_tensor(img, model.config.input_channels), Mode::kInfer, unused);
    const std::string stem = path.stem().string();
    write_png(out / (stem + ".png"), map_to_image(r.fused_map));
    if (side_maps) {
      for (std::size_t b = 0; b < kNumBlocks; ++b) {
        write_png(out / (stem + "_side" + std::to_string(b + 1) + ".png"), map_to_image(r.side_maps[b]));
      }
    }
    ++written;
  }
  log << "wrote " << written << " of " << inputs.size() << " saliency maps to " << out.string() << '\n';
  return written > 0 ? 0 : 1;
}

int cmd_eval(const RunConfig& raw, const fs::path& predictions, const fs::path& masks, const fs::path& out,
             std::ostream& log) {
  const RunConfig config = resolve(raw);
  const PairScan scan = match_by_stem(predictions, masks);
  for (const std::string& issue : scan.issues) log << "skipped: " << issue << '\n';

  std::vector<EvalPair> pairs;
  for (const FilePair& p : scan.pairs) {
    try {
      pairs.push_back({p.name, image_to_map(read_image(p.first)), image_to_mask(read_image(p.second))});
    } catch (const ImageError& e) {
      log << "skipped: " << p.name << ": " << e.what() << '\n';
    }
  }
  if (pairs.empty()) throw CommandError("no prediction/mask pairs to evaluate");

  MetricsReport report;
  try {
    report = evaluate_dataset(pairs, config.metrics);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  for (const RejectedPair& r : report.rejected) log << "skipped: " << r.name << ": " << r.reason << '\n';

  prepare_out(out);
  write_text(out / kConfigFile, to_json_text(config));
  write_stream(out / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, report); });
  write_stream(out / "pr_curve.csv", [&](std::ostream& os) { write_pr_curve_csv(os, report); });
  write_stream(out / "report.json", [&](std::ostream& os) { write_metrics_json(os, report); });
  write_stream(out / "pr_curve.svg", [&](std::ostream& os) { write_pr_curve_svg(os, report); });
  log << "evaluated " << report.images.size() << " pairs: mean F " << format_real(report.mean_f) << ", adaptive F "
      << format_real(report.adaptive_f) << ", MAE " << format_real(report.mae) << ", weighted F "
      << (report.weighted_f ? format_real(*report.weighted_f) : std::string("skipped")) << '\n';
  return 0;
}

}  // namespace dsrcnn
