#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsrcnn/metrics.hpp"
#include "dsrcnn/model.hpp"
#include "dsrcnn/training.hpp"

namespace dsrcnn {

/// A command could not run at all (bad layout, no usable data, bad config).
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run depends on. `seed` drives initialization, shuffling and
/// dropout; the seeds inside `model` and `sgd` are overwritten by resolve().
struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  SgdConfig sgd;
  MetricOptions metrics;
};

/// Copies `seed` into the nested configs and validates everything.
RunConfig resolve(RunConfig config);

/// JSON text with every field present. Parsing accepts any subset of fields
/// and rejects unknown keys.
std::string to_json_text(const RunConfig& config);
RunConfig parse_run_config(const std::string& text, RunConfig defaults = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults = {});

struct FilePair {
  std::string name;  // shared file stem
  std::filesystem::path first;
  std::filesystem::path second;
};

struct PairScan {
  std::vector<FilePair> pairs;      // sorted by name
  std::vector<std::string> issues;  // unmatched or ambiguous files
};

/// Pairs image files in two directories by stem.
PairScan match_by_stem(const std::filesystem::path& first_dir, const std::filesystem::path& second_dir);

/// `root/images` against `root/masks`.
PairScan scan_dataset(const std::filesystem::path& root);

/// Files written by cmd_train.
inline constexpr const char* kWeightsFile = "weights.bin";
inline constexpr const char* kLossFile = "loss.csv";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kAbortedFile = "ABORTED";

/// Trains on a dataset root and writes weights, loss history and the
/// resolved config into `out`. Returns 0 on success and 2 if training was
/// aborted (loss.csv then holds the partial history and ABORTED the reason).
int cmd_train(const RunConfig& config, const std::filesystem::path& dataset, const std::filesystem::path& out,
              std::ostream& log);

/// Writes `<stem>.png` (and `<stem>_side1..5.png` when `side_maps`) for one
/// image or every image in a directory. Returns 0 if at least one map was
/// written, 1 otherwise.
int cmd_infer(const RunConfig& config, const std::filesystem::path& weights, const std::filesystem::path& input,
              const std::filesystem::path& out, bool side_maps, std::ostream& log);

/// Compares predictions with masks matched by stem and writes metrics.csv,
/// pr_curve.csv, report.json and pr_curve.svg.
int cmd_eval(const RunConfig& config, const std::filesystem::path& predictions,
             const std::filesystem::path& masks, const std::filesystem::path& out, std::ostream& log);

}  // namespace dsrcnn
