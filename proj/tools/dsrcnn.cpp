#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dsrcnn/commands.hpp"
#include "dsrcnn/selftest.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<std::size_t> rcl_steps;
  std::vector<std::size_t> channels;
  std::optional<double> beta_sq;
  std::optional<std::size_t> thresholds;
};

dsrcnn::RunConfig resolve_config(const Overrides& o) {
  dsrcnn::RunConfig c;
  if (!o.config_path.empty()) c = dsrcnn::load_run_config(o.config_path, c);
  if (o.seed) c.seed = *o.seed;
  if (o.iterations) c.sgd.iterations = *o.iterations;
  if (o.lr) c.sgd.learning_rate = *o.lr;
  if (o.momentum) c.sgd.momentum = *o.momentum;
  if (o.rcl_steps) c.model.rcl_steps = *o.rcl_steps;
  if (!o.channels.empty()) std::copy(o.channels.begin(), o.channels.end(), c.model.block_channels.begin());
  if (o.beta_sq) c.metrics.beta_sq = *o.beta_sq;
  if (o.thresholds) c.metrics.thresholds = *o.thresholds;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deeply supervised recurrent convolutional saliency detection"};
  app.require_subcommand(1);

  Overrides o;
  std::string out = "out";
  auto shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "JSON run config; flags override its fields")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed for initialization, shuffling and dropout");
    cmd->add_option("--out", out, "Output directory")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Train on DIR/images + DIR/masks");
  std::string dataset;
  shared(train);
  train->add_option("dataset", dataset, "Dataset root")->required()->check(CLI::ExistingDirectory);
  train->add_option("--iterations", o.iterations, "SGD iterations (one image each)");
  train->add_option("--lr", o.lr, "Learning rate");
  train->add_option("--momentum", o.momentum, "Momentum in [0, 1)");
  train->add_option("--rcl-t", o.rcl_steps, "Recurrent iterations per RCL");
  train->add_option("--channels", o.channels, "Channels of the five blocks, e.g. 8,16,32,64,64")
      ->delimiter(',')
      ->expected(5);

  auto* infer = app.add_subcommand("infer", "Predict saliency maps for an image or a directory");
  std::string weights;
  std::string input;
  bool side_maps = false;
  shared(infer);
  infer->add_option("--weights", weights, "Weight file from train")->required()->check(CLI::ExistingFile);
  infer->add_option("input", input, "Image file or directory")->required()->check(CLI::ExistingPath);
  infer->add_flag("--side-maps", side_maps, "Also write the five side-output maps");

  auto* eval = app.add_subcommand("eval", "Score predicted maps against masks matched by file stem");
  std::string predictions;
  std::string masks;
  shared(eval);
  eval->add_option("predictions", predictions, "Directory of predicted maps")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("masks", masks, "Directory of ground-truth masks")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--beta-sq", o.beta_sq, "beta^2 of the F-measure");
  eval->add_option("--thresholds", o.thresholds, "Number of PR-curve thresholds");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in gradient and oracle checks");
  bool inject_fault = false;
  selftest->add_flag("--inject-fault", inject_fault)->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*selftest) return dsrcnn::run_selftest(std::cout, {inject_fault}) ? 0 : 1;
    const dsrcnn::RunConfig config = resolve_config(o);
    if (*train) return dsrcnn::cmd_train(config, dataset, out, std::cout);
    if (*infer) return dsrcnn::cmd_infer(config, weights, input, out, side_maps, std::cout);
    if (*eval) return dsrcnn::cmd_eval(config, predictions, masks, out, std::cout);
  } catch (const dsrcnn::CommandError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
