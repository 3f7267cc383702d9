#include "sau/config.hpp"

#include <fstream>

#include "sau/common.hpp"

namespace sau {

namespace {

void check_keys(const nlohmann::json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(std::string("config: ") + where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) fail(std::string("config: unknown key '") + key + "' in " + where);
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string variant_name(ScVariant v) {
  switch (v) {
    case ScVariant::kSupCon:
      return "supcon";
    case ScVariant::kIgnoreNoise:
      return "L1";
    case ScVariant::kNoiseAsSingletons:
      return "L2";
    case ScVariant::kNoiseAsNegatives:
      return "L3";
  }
  fail("config: bad variant");
}

ScVariant parse_variant(const std::string& name) {
  if (name == "L1") return ScVariant::kIgnoreNoise;
  if (name == "L2") return ScVariant::kNoiseAsSingletons;
  if (name == "L3") return ScVariant::kNoiseAsNegatives;
  if (name == "supcon") return ScVariant::kSupCon;
  fail("config: unknown loss variant '" + name + "' (expected L1, L2, or L3)");
}

RunConfig default_run_config() {
  RunConfig rc;
  rc.train.lt = LtSpec{10, 500, 100.0, 0};
  rc.train.gen = make_gen_spec(10, Shape{16}, 0.35, 0.2, 0.0, 3.0, rc.gen_means_seed);
  rc.train.arch = ArchConfig{};
  rc.train.arch.input_dim = 16;
  rc.train.arch.n_classes = 10;
  rc.train.optim = OptimConfig{};
  rc.train.seed = 1;
  return rc;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  check_keys(j, "top level", {"seed", "data", "gen", "arch", "optim", "train", "paths"});
  RunConfig rc;

  std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 1);

  int n_classes = 10;
  long n0 = 500;
  double imbalance = 100.0;
  Shape feature_shape{16};
  long balance_target = 0;
  long test_per_class = 100;
  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, "data",
               {"n_classes", "n0", "imbalance_factor", "feature_shape", "balance_target",
                "test_per_class"});
    n_classes = get_or<int>(d, "n_classes", n_classes);
    n0 = get_or<long>(d, "n0", n0);
    imbalance = get_or<double>(d, "imbalance_factor", imbalance);
    if (d.contains("feature_shape")) feature_shape = d.at("feature_shape").get<Shape>();
    balance_target = get_or<long>(d, "balance_target", balance_target);
    test_per_class = get_or<long>(d, "test_per_class", test_per_class);
  }

  double spread = 0.35, noise_rate = 0.2, quality_threshold = 0.0, mean_scale = 3.0;
  std::uint64_t means_seed = 7;
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    check_keys(g, "gen",
               {"spread", "noise_rate", "quality_threshold", "mean_scale", "means_seed"});
    spread = get_or<double>(g, "spread", spread);
    noise_rate = get_or<double>(g, "noise_rate", noise_rate);
    quality_threshold = get_or<double>(g, "quality_threshold", quality_threshold);
    mean_scale = get_or<double>(g, "mean_scale", mean_scale);
    means_seed = get_or<std::uint64_t>(g, "means_seed", means_seed);
  }

  rc.gen_means_seed = means_seed;
  rc.train.lt = LtSpec{n_classes, n0, imbalance, seed};
  rc.train.gen = make_gen_spec(n_classes, feature_shape, spread, noise_rate, quality_threshold,
                               mean_scale, means_seed);
  rc.train.balance_target = balance_target;
  rc.train.test_per_class = test_per_class;
  rc.train.seed = seed;

  ArchConfig arch;
  arch.input_dim = numel(feature_shape);
  arch.n_classes = static_cast<std::size_t>(n_classes);
  if (j.contains("arch")) {
    const auto& a = j.at("arch");
    check_keys(a, "arch", {"encoder_hidden", "proj_hidden", "proj_dim", "proj_batchnorm"});
    arch.encoder_hidden =
        get_or<std::vector<std::size_t>>(a, "encoder_hidden", arch.encoder_hidden);
    arch.proj_hidden = get_or<std::vector<std::size_t>>(a, "proj_hidden", arch.proj_hidden);
    arch.proj_dim = get_or<std::size_t>(a, "proj_dim", arch.proj_dim);
    arch.proj_batchnorm = get_or<bool>(a, "proj_batchnorm", arch.proj_batchnorm);
  }
  rc.train.arch = arch;

  OptimConfig optim;
  if (j.contains("optim")) {
    const auto& o = j.at("optim");
    check_keys(o, "optim", {"lr0", "momentum", "weight_decay", "epochs"});
    optim.lr0 = get_or<double>(o, "lr0", optim.lr0);
    optim.momentum = get_or<double>(o, "momentum", optim.momentum);
    optim.weight_decay = get_or<double>(o, "weight_decay", optim.weight_decay);
    optim.total_epochs = get_or<long>(o, "epochs", optim.total_epochs);
  }
  rc.train.optim = optim;

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train",
               {"batch_size", "lambda_mixup", "beta_cutmix", "gamma_sc", "plain_ce", "mix_alpha",
                "tau", "knn_k", "loss_variant", "eval_hi", "eval_lo", "proto_chunk"});
    rc.train.batch_size = get_or<std::size_t>(t, "batch_size", rc.train.batch_size);
    rc.train.lambda_mixup = get_or<double>(t, "lambda_mixup", rc.train.lambda_mixup);
    rc.train.beta_cutmix = get_or<double>(t, "beta_cutmix", rc.train.beta_cutmix);
    rc.train.gamma_sc = get_or<double>(t, "gamma_sc", rc.train.gamma_sc);
    rc.train.plain_ce = get_or<bool>(t, "plain_ce", rc.train.plain_ce);
    rc.train.mix_alpha = get_or<double>(t, "mix_alpha", rc.train.mix_alpha);
    rc.train.tau = get_or<double>(t, "tau", rc.train.tau);
    rc.train.knn_k = get_or<std::size_t>(t, "knn_k", rc.train.knn_k);
    if (t.contains("loss_variant"))
      rc.train.loss_variant = parse_variant(t.at("loss_variant").get<std::string>());
    rc.train.eval_thresholds.hi = get_or<long>(t, "eval_hi", rc.train.eval_thresholds.hi);
    rc.train.eval_thresholds.lo = get_or<long>(t, "eval_lo", rc.train.eval_thresholds.lo);
    rc.train.proto_chunk = get_or<std::size_t>(t, "proto_chunk", rc.train.proto_chunk);
  }

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "paths", {"data_dir", "out_dir"});
    rc.data_dir = get_or<std::string>(p, "data_dir", rc.data_dir);
    rc.out_dir = get_or<std::string>(p, "out_dir", rc.out_dir);
  }

  validate(rc.train);
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    fail("config: parse failure in " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json run_config_to_json(const RunConfig& rc) {
  nlohmann::json j;
  j["seed"] = rc.train.seed;
  j["data"] = {{"n_classes", rc.train.lt.n_classes},
               {"n0", rc.train.lt.n0},
               {"imbalance_factor", rc.train.lt.imbalance_factor},
               {"feature_shape", rc.train.gen.feature_shape},
               {"balance_target", rc.train.balance_target},
               {"test_per_class", rc.train.test_per_class}};
  j["gen"] = {{"spread", rc.train.gen.spread},
              {"noise_rate", rc.train.gen.noise_rate},
              {"quality_threshold", rc.train.gen.quality_threshold},
              {"mean_scale", rc.train.gen.mean_scale},
              {"means_seed", rc.gen_means_seed}};
  j["arch"] = {{"encoder_hidden", rc.train.arch.encoder_hidden},
               {"proj_hidden", rc.train.arch.proj_hidden},
               {"proj_dim", rc.train.arch.proj_dim},
               {"proj_batchnorm", rc.train.arch.proj_batchnorm}};
  j["optim"] = {{"lr0", rc.train.optim.lr0},
                {"momentum", rc.train.optim.momentum},
                {"weight_decay", rc.train.optim.weight_decay},
                {"epochs", rc.train.optim.total_epochs}};
  j["train"] = {{"batch_size", rc.train.batch_size},
                {"lambda_mixup", rc.train.lambda_mixup},
                {"beta_cutmix", rc.train.beta_cutmix},
                {"gamma_sc", rc.train.gamma_sc},
                {"plain_ce", rc.train.plain_ce},
                {"mix_alpha", rc.train.mix_alpha},
                {"tau", rc.train.tau},
                {"knn_k", rc.train.knn_k},
                {"loss_variant", variant_name(rc.train.loss_variant)},
                {"eval_hi", rc.train.eval_thresholds.hi},
                {"eval_lo", rc.train.eval_thresholds.lo},
                {"proto_chunk", rc.train.proto_chunk}};
  j["paths"] = {{"data_dir", rc.data_dir}, {"out_dir", rc.out_dir}};
  return j;
}

}  // namespace sau
