#include "sau/gradcheck.hpp"

#include <cmath>

#include "sau/common.hpp"
#include "sau/contrastive.hpp"
#include "sau/dataset.hpp"
#include "sau/rng.hpp"
#include "sau/trainer.hpp"

namespace sau {

double objective_value(const ModelState& state, const ObjectiveFn& objective) {
  Tape t;
  std::vector<Var> params = register_params(t, state, false);
  Var root = objective(t, params);
  if (t.value(root).size() != 1) fail("gradcheck: objective must be scalar");
  return t.value(root)[0];
}

double fd_max_rel_error(const ModelState& state, const ObjectiveFn& objective, double fd_step) {
  ObjectiveGrads ad = compute_grad(state, objective);
  ModelState probe = state;
  double worst = 0.0;
  for (std::size_t p = 0; p < probe.params.size(); ++p) {
    Tensor& theta = probe.params[p].value;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      theta[k] = saved + fd_step;
      double up = objective_value(probe, objective);
      theta[k] = saved - fd_step;
      double down = objective_value(probe, objective);
      theta[k] = saved;
      double fd = (up - down) / (2.0 * fd_step);
      double adv = ad.grads[p][k];
      double denom = std::max({std::abs(adv), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(adv - fd) / denom);
    }
  }
  return worst;
}

namespace {

RngStream make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return RngStream(StreamKey{seed, a, b, c, Draw::kTestData});
}

ArchConfig random_arch(RngStream& rng) {
  ArchConfig a;
  a.input_dim = 3 + rng.below(14);
  a.encoder_hidden.clear();
  std::size_t enc_layers = 1 + rng.below(2);
  for (std::size_t l = 0; l < enc_layers; ++l) a.encoder_hidden.push_back(4 + rng.below(13));
  a.proj_hidden.clear();
  std::size_t proj_layers = rng.below(3);
  for (std::size_t l = 0; l < proj_layers; ++l) a.proj_hidden.push_back(4 + rng.below(13));
  a.proj_dim = 2 + rng.below(15);
  a.proj_batchnorm = true;
  a.n_classes = 2 + rng.below(3);
  return a;
}

Tensor random_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

Tensor random_unit_rows(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t = random_matrix(rows, cols, rng);
  for (std::size_t i = 0; i < rows; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < cols; ++j) norm += t.at(i, j) * t.at(i, j);
    norm = std::sqrt(std::max(norm, 1e-12));
    for (std::size_t j = 0; j < cols; ++j) t.at(i, j) /= norm;
  }
  return t;
}

struct Instance {
  ModelState state;
  ObjectiveFn objective;
};

/// families: 0 mixed CE, 1 supcon, 2 L1, 3 L2, 4 L3, 5 combined step
Instance build_instance(std::uint64_t seed, std::size_t family, std::size_t index,
                        std::size_t attempt) {
  RngStream rng = make_stream(seed, family, index, attempt);
  ArchConfig arch = random_arch(rng);
  Instance inst;
  inst.state = init_params(arch, rng.next_u64());
  const std::size_t b = 2 + rng.below(7);

  if (family == 0) {
    Tensor x = random_matrix(b, arch.input_dim, rng);
    std::vector<int> yi(b), yj(b);
    std::vector<double> lam(b);
    double shared_lam = rng.uniform();
    for (std::size_t i = 0; i < b; ++i) {
      yi[i] = static_cast<int>(rng.below(arch.n_classes));
      yj[i] = static_cast<int>(rng.below(arch.n_classes));
      lam[i] = shared_lam;
    }
    inst.objective = [x, yi, yj, lam, arch](Tape& t, const std::vector<Var>& params) {
      Var logits = classifier_graph(t, arch, params, encoder_graph(t, arch, params, t.input(x)));
      return t.mixed_ce_mean(logits, yi, yj, lam);
    };
    return inst;
  }

  if (family >= 1 && family <= 4) {
    ScVariant variant = ScVariant::kSupCon;
    if (family == 2) variant = ScVariant::kIgnoreNoise;
    if (family == 3) variant = ScVariant::kNoiseAsSingletons;
    if (family == 4) variant = ScVariant::kNoiseAsNegatives;

    Tensor v2 = random_matrix(b, arch.input_dim, rng);
    Tensor v3 = random_matrix(b, arch.input_dim, rng);
    std::vector<long long> ext(b);
    long long next_noise = -1;
    for (std::size_t i = 0; i < b; ++i) ext[i] = static_cast<long long>(rng.below(arch.n_classes));
    if (family != 1)
      for (std::size_t i = 0; i < b; ++i)
        if (rng.uniform() < 0.3) ext[i] = next_noise--;

    Tensor protos = random_unit_rows(2 * arch.n_classes, arch.proj_dim, rng);
    std::vector<long long> joint;
    for (std::size_t i = 0; i < b; ++i) joint.push_back(ext[i]);
    for (std::size_t i = 0; i < b; ++i) joint.push_back(ext[i]);
    for (int rep = 0; rep < 2; ++rep)
      for (std::size_t c = 0; c < arch.n_classes; ++c) joint.push_back(static_cast<long long>(c));

    SupConMasks masks = build_masks(joint, variant);
    double tau = 0.1 + 0.9 * rng.uniform();
    inst.objective = [v2, v3, protos, masks, tau, arch](Tape& t,
                                                        const std::vector<Var>& params) {
      Var z2 = projection_graph(t, arch, params, encoder_graph(t, arch, params, t.input(v2)));
      Var z3 = projection_graph(t, arch, params, encoder_graph(t, arch, params, t.input(v3)));
      Var zj = t.concat_rows({z2, z3, t.input(protos)});
      return supcon_graph(t, zj, masks, tau, true);
    };
    return inst;
  }

  // combined step objective on a synthetic batch pair
  TrainConfig cfg;
  cfg.arch = arch;
  cfg.batch_size = b;
  cfg.mix_alpha = 1.0;
  cfg.tau = 0.1 + 0.9 * rng.uniform();
  cfg.knn_k = 1 + rng.below(4);
  cfg.loss_variant = ScVariant::kNoiseAsSingletons;
  cfg.seed = rng.next_u64();

  std::vector<Sample> split(b);
  for (std::size_t i = 0; i < b; ++i) {
    split[i].features = Tensor({arch.input_dim});
    for (std::size_t j = 0; j < arch.input_dim; ++j) split[i].features[j] = rng.normal();
    split[i].label = static_cast<int>(rng.below(arch.n_classes));
    split[i].is_synthetic = rng.uniform() < 0.5;
    split[i].id = i;
  }
  std::vector<BatchPair> pairs = make_batch_pairs(split, b, 0, cfg.seed);
  PrototypeSet p2{random_unit_rows(arch.n_classes, arch.proj_dim, rng),
                  std::vector<std::uint8_t>(arch.n_classes, 1)};
  PrototypeSet p3{random_unit_rows(arch.n_classes, arch.proj_dim, rng),
                  std::vector<std::uint8_t>(arch.n_classes, 1)};
  auto fs = std::make_shared<FrozenStep>(
      freeze_step(inst.state, pairs[0], {p2, p3}, cfg, 0, 0));
  inst.objective = [fs, arch](Tape& t, const std::vector<Var>& params) {
    return step_objective(t, params, arch, *fs).root;
  };
  return inst;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, std::size_t instances,
                                                 double fd_step) {
  const char* names[6] = {"mixed_ce", "supcon", "l1_ignore_noise", "l2_noise_singletons",
                          "l3_noise_negatives", "overall_step"};
  std::vector<GradCheckResult> results;
  for (std::size_t family = 0; family < 6; ++family) {
    GradCheckResult r;
    r.name = names[family];
    r.instances = instances;
    for (std::size_t index = 0; index < instances; ++index) {
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt > 50) fail("gradcheck: could not build a kink-free instance");
        // redraw instances that sit on a rectifier kink or hit a degenerate
        // projection row; both violate the smoothness central differences need
        try {
          Instance inst = build_instance(seed, family, index, attempt);
          Tape probe;
          std::vector<Var> pv = register_params(probe, inst.state, false);
          probe.value(inst.objective(probe, pv));
          if (probe.min_relu_margin() < 10.0 * fd_step) continue;
          r.max_rel_err = std::max(r.max_rel_err, fd_max_rel_error(inst.state, inst.objective,
                                                                   fd_step));
          r.coords += parameter_count(inst.state.arch);
        } catch (const Error&) {
          continue;
        }
        break;
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace sau
