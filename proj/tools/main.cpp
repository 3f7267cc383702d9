#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sau/cli.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string data;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_data) {
  cmd->add_option("--config", f.config, "run configuration file (JSON)");
  cmd->add_option("--seed", f.seed, "override the run seed")->each([&f](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--out", f.out, "output directory");
  if (with_data) cmd->add_option("--data", f.data, "directory holding the dataset manifests");
}

sau::CliOverrides to_overrides(const CommonFlags& f) {
  sau::CliOverrides ov;
  if (!f.config.empty()) ov.config_path = f.config;
  if (f.seed_set) ov.seed = f.seed;
  if (!f.out.empty()) ov.out_dir = f.out;
  if (!f.data.empty()) ov.data_dir = f.data;
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-branch long-tailed training on real+synthetic data"};
  app.require_subcommand(1);

  CommonFlags make_f, gen_f, train_f, eval_f, ablate_f, grad_f;

  auto* make = app.add_subcommand("make-data", "build the long-tailed real split and test set");
  add_common(make, make_f, false);
  int classes = 0;
  long n0 = 0;
  double imbalance = 0.0;
  std::size_t dim = 0;
  make->add_option("--classes", classes, "number of classes");
  make->add_option("--n0", n0, "head class size");
  make->add_option("--if", imbalance, "imbalance factor (largest/smallest class)");
  make->add_option("--dim", dim, "feature dimension");

  auto* gen = app.add_subcommand("gen-synth", "generate the quality-filtered synthetic complement");
  add_common(gen, gen_f, true);

  auto* train = app.add_subcommand("train", "train and write metrics + checkpoint");
  add_common(train, train_f, true);
  long epochs = -1;
  train->add_option("--epochs", epochs, "override the epoch budget");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test manifest");
  add_common(eval, eval_f, true);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  auto* ablate = app.add_subcommand("ablate", "loss-variant and component sweeps on one dataset");
  add_common(ablate, ablate_f, false);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every loss");
  add_common(grad, grad_f, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(make)) {
      sau::CliOverrides ov = to_overrides(make_f);
      if (classes > 0) ov.classes = classes;
      if (n0 > 0) ov.n0 = n0;
      if (imbalance > 0.0) ov.imbalance = imbalance;
      if (dim > 0) ov.dim = dim;
      return sau::cmd_make_data(sau::resolve_config(ov), std::cout);
    }
    if (app.got_subcommand(gen))
      return sau::cmd_gen_synth(sau::resolve_config(to_overrides(gen_f)), std::cout);
    if (app.got_subcommand(train)) {
      sau::CliOverrides ov = to_overrides(train_f);
      if (epochs >= 0) ov.epochs = epochs;
      return sau::cmd_train(sau::resolve_config(ov), std::cout);
    }
    if (app.got_subcommand(eval))
      return sau::cmd_eval(sau::resolve_config(to_overrides(eval_f)), checkpoint, std::cout);
    if (app.got_subcommand(ablate))
      return sau::cmd_ablate(sau::resolve_config(to_overrides(ablate_f)), std::cout);
    if (app.got_subcommand(grad)) {
      std::uint64_t seed = grad_f.seed_set ? grad_f.seed : 1;
      return sau::cmd_gradcheck(seed, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
