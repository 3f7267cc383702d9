#include "sau/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sau/common.hpp"
#include "sau/mixer.hpp"

namespace sau {

int eval_group(long real_count, const EvalThresholds& thr) {
  if (real_count > thr.hi) return 0;
  if (real_count < thr.lo) return 2;
  return 1;
}

void validate(const TrainConfig& cfg) {
  validate(cfg.lt);
  validate(cfg.gen);
  validate(cfg.arch);
  validate(cfg.optim);
  if (cfg.lt.n_classes != cfg.gen.n_classes) fail("config: lt/gen class count mismatch");
  if (cfg.arch.n_classes != static_cast<std::size_t>(cfg.lt.n_classes))
    fail("config: arch n_classes does not match data");
  if (cfg.arch.input_dim != numel(cfg.gen.feature_shape))
    fail("config: arch input_dim does not match feature shape");
  if (cfg.batch_size < 2) fail("config: batch_size must be >= 2");
  if (!(cfg.tau > 0.0)) fail("config: tau must be positive");
  if (!(cfg.mix_alpha > 0.0)) fail("config: mix alpha must be positive");
  if (cfg.knn_k < 1) fail("config: knn k must be >= 1");
  if (cfg.eval_thresholds.lo >= cfg.eval_thresholds.hi)
    fail("config: eval thresholds must satisfy lo < hi");
  if (cfg.lambda_mixup < 0.0 || cfg.beta_cutmix < 0.0 || cfg.gamma_sc < 0.0)
    fail("config: loss weights must be >= 0");
  if (cfg.lambda_mixup == 0.0 && cfg.beta_cutmix == 0.0 && cfg.gamma_sc == 0.0 && !cfg.plain_ce)
    fail("config: objective is empty (all weights zero, plain CE off)");
  if (cfg.balance_target < 0) fail("config: balance_target must be >= 0");
  if (cfg.test_per_class < 1) fail("config: test_per_class must be >= 1");
  if (cfg.proto_chunk < 2) fail("config: proto_chunk must be >= 2");
}

TrainData build_toy_data(const TrainConfig& cfg, bool with_synthetic) {
  validate(cfg);
  TrainData data;
  std::vector<long> counts = long_tailed_counts(cfg.lt);

  // full balanced pool, then the seeded subsample
  std::vector<Sample> pool;
  std::uint64_t next_id = 0;
  for (int c = 0; c < cfg.lt.n_classes; ++c) {
    RngStream rng(StreamKey{cfg.seed, 0, 0, static_cast<std::uint64_t>(c), Draw::kRealData});
    std::vector<Sample> drawn = draw_clean_class_samples(cfg.gen, c, cfg.lt.n0, rng, false);
    for (Sample& s : drawn) {
      s.id = next_id++;
      pool.push_back(std::move(s));
    }
  }
  data.real_train = build_lt_split(pool, counts, cfg.seed);
  data.real_counts = class_counts(data.real_train, cfg.lt.n_classes);

  if (with_synthetic) {
    long target = cfg.balance_target > 0 ? cfg.balance_target : cfg.lt.n0;
    std::vector<long> needed = complement_counts(data.real_counts, target);
    data.syn_train = generate_complement(cfg.gen, needed, cfg.seed);
  }
  for (Sample& s : data.syn_train) s.id = next_id++;

  for (int c = 0; c < cfg.lt.n_classes; ++c) {
    RngStream rng(StreamKey{cfg.seed, 0, 0, static_cast<std::uint64_t>(c), Draw::kTestData});
    std::vector<Sample> drawn =
        draw_clean_class_samples(cfg.gen, c, cfg.test_per_class, rng, false);
    for (Sample& s : drawn) {
      s.id = next_id++;
      data.test.push_back(std::move(s));
    }
  }
  return data;
}

namespace {

Tensor stack_flat(const std::vector<const Tensor*>& rows) {
  if (rows.empty()) fail("trainer: empty batch");
  const std::size_t d = rows[0]->size();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->size() != d) fail("trainer: inconsistent feature sizes in batch");
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = (*rows[i])[j];
  }
  return out;
}

Tensor flatten_samples(const std::vector<Sample>& samples, std::size_t lo, std::size_t hi) {
  std::vector<const Tensor*> rows;
  rows.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) rows.push_back(&samples[i].features);
  return stack_flat(rows);
}

}  // namespace

std::pair<PrototypeSet, PrototypeSet> refresh_prototypes(const ModelState& model,
                                                         const std::vector<Sample>& real_split,
                                                         std::uint64_t epoch,
                                                         const TrainConfig& cfg) {
  if (real_split.empty()) fail("prototypes: empty real split");
  const std::size_t n = real_split.size();
  std::vector<long long> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = real_split[i].label;

  auto pass = [&](Draw purpose) {
    Tensor z_all({n, model.arch.proj_dim});
    for (std::size_t lo = 0; lo < n; lo += cfg.proto_chunk) {
      std::size_t hi = std::min(n, lo + cfg.proto_chunk);
      std::vector<const Tensor*> rows;
      std::vector<Tensor> views;
      views.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        RngStream rng(StreamKey{cfg.seed, epoch, 0, real_split[i].id, purpose});
        views.push_back(augment(real_split[i].features, AugPolicy::kContrastive, rng));
      }
      for (const Tensor& v : views) rows.push_back(&v);
      Tensor x = stack_flat(rows);
      Tensor z = project(model, encode(model, x));
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z_all.at(i, j) = z.at(i - lo, j);
    }
    return compute_prototypes(z_all, labels, model.arch.n_classes);
  };

  return {pass(Draw::kProtoView2), pass(Draw::kProtoView3)};
}

FrozenStep freeze_step(const ModelState& model, const BatchPair& pair,
                       const std::pair<PrototypeSet, PrototypeSet>& protos,
                       const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t step) {
  const std::size_t b = pair.batch1.size();
  if (b == 0 || pair.batch2.size() != b) fail("train step: malformed batch pair");

  FrozenStep fs;
  fs.lambda = cfg.lambda_mixup;
  fs.beta = cfg.beta_cutmix;
  fs.gamma = cfg.gamma_sc;
  fs.plain_ce = cfg.plain_ce;
  fs.tau = cfg.tau;

  fs.y1.resize(b);
  fs.y2.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    fs.y1[i] = pair.batch1[i].label;
    fs.y2[i] = pair.batch2[i].label;
  }

  {
    std::vector<const Tensor*> rows;
    for (const BatchOneItem& it : pair.batch1) rows.push_back(&it.views.v1);
    fs.v1 = stack_flat(rows);
  }

  const bool need_mix = fs.lambda > 0.0 || fs.beta > 0.0;
  if (need_mix) {
    Tensor v1b;
    {
      std::vector<const Tensor*> rows;
      for (const BatchTwoItem& it : pair.batch2) rows.push_back(&it.v1);
      v1b = stack_flat(rows);
    }
    if (fs.lambda > 0.0) {
      RngStream rng(StreamKey{cfg.seed, epoch, step, 0, Draw::kMixupLambda});
      fs.lam_mix = sample_mix_ratio(cfg.mix_alpha, rng);
      fs.xm = Tensor(fs.v1.shape());
      for (std::size_t i = 0; i < fs.v1.size(); ++i)
        fs.xm[i] = fs.lam_mix * fs.v1[i] + (1.0 - fs.lam_mix) * v1b[i];
    }
    if (fs.beta > 0.0) {
      RngStream lr(StreamKey{cfg.seed, epoch, step, 0, Draw::kCutmixLambda});
      double lam = sample_mix_ratio(cfg.mix_alpha, lr);
      const Tensor& shape_ref = pair.batch1[0].views.v1;
      // cut geometry follows the raw feature layout
      std::size_t w = 0, h = 0;
      switch (shape_ref.rank()) {
        case 1:
          w = shape_ref.dim(0);
          h = 1;
          break;
        case 2:
          h = shape_ref.dim(0);
          w = shape_ref.dim(1);
          break;
        case 3:
          h = shape_ref.dim(1);
          w = shape_ref.dim(2);
          break;
        default:
          fail("train step: unsupported feature rank");
      }
      RngStream br(StreamKey{cfg.seed, epoch, step, 0, Draw::kCutmixBox});
      CutBox box = cutmix_box(w, h, lam, br);
      fs.xc = Tensor({b, fs.v1.cols()});
      double lam_realized = 1.0;
      for (std::size_t i = 0; i < b; ++i) {
        MixedExample me = cutmix(pair.batch1[i].views.v1, fs.y1[i], pair.batch2[i].v1,
                                 fs.y2[i], box);
        lam_realized = me.lam;
        Tensor flat = me.x.flat();
        for (std::size_t j = 0; j < flat.size(); ++j) fs.xc.at(i, j) = flat[j];
      }
      fs.lam_cut = lam_realized;
    }
  }

  if (fs.gamma > 0.0) {
    fs.has_sc = true;
    {
      std::vector<const Tensor*> rows;
      for (const BatchOneItem& it : pair.batch1) rows.push_back(&it.views.v2);
      fs.v2 = stack_flat(rows);
      rows.clear();
      for (const BatchOneItem& it : pair.batch1) rows.push_back(&it.views.v3);
      fs.v3 = stack_flat(rows);
    }

    Tensor z2 = project(model, encode(model, fs.v2));
    Tensor z3 = project(model, encode(model, fs.v3));

    // per-view correction references: real rows of this batch + valid prototypes
    std::vector<std::size_t> syn_rows, real_rows;
    for (std::size_t i = 0; i < b; ++i)
      (pair.batch1[i].is_synthetic ? syn_rows : real_rows).push_back(i);

    std::vector<long long> ext(b);
    for (std::size_t i = 0; i < b; ++i) ext[i] = fs.y1[i];
    fs.noise_count = 0;

    if (!syn_rows.empty()) {
      auto make_ref = [&](const Tensor& z, const PrototypeSet& ps, std::vector<long long>& yref) {
        std::size_t n_protos = 0;
        for (std::uint8_t v : ps.valid) n_protos += v ? 1 : 0;
        Tensor ref({real_rows.size() + n_protos, z.cols()});
        yref.clear();
        std::size_t r = 0;
        for (std::size_t i : real_rows) {
          for (std::size_t j = 0; j < z.cols(); ++j) ref.at(r, j) = z.at(i, j);
          yref.push_back(fs.y1[i]);
          ++r;
        }
        for (std::size_t c = 0; c < ps.P.rows(); ++c) {
          if (!ps.valid[c]) continue;
          for (std::size_t j = 0; j < z.cols(); ++j) ref.at(r, j) = ps.P.at(c, j);
          yref.push_back(static_cast<long long>(c));
          ++r;
        }
        return ref;
      };
      auto take_rows = [&](const Tensor& z) {
        Tensor out({syn_rows.size(), z.cols()});
        for (std::size_t i = 0; i < syn_rows.size(); ++i)
          for (std::size_t j = 0; j < z.cols(); ++j) out.at(i, j) = z.at(syn_rows[i], j);
        return out;
      };
      std::vector<long long> yref2, yref3;
      Tensor ref2 = make_ref(z2, protos.first, yref2);
      Tensor ref3 = make_ref(z3, protos.second, yref3);
      std::vector<long long> cor2 = knn_correct(take_rows(z2), ref2, yref2, cfg.knn_k);
      std::vector<long long> cor3 = knn_correct(take_rows(z3), ref3, yref3, cfg.knn_k);
      std::vector<long long> y_org(syn_rows.size());
      for (std::size_t i = 0; i < syn_rows.size(); ++i) y_org[i] = fs.y1[syn_rows[i]];
      CorrectionResult cr = relabel(y_org, cor2, cor3, -1);
      fs.noise_count = cr.noise_count;
      for (std::size_t i = 0; i < syn_rows.size(); ++i) ext[syn_rows[i]] = cr.y_new[i];
    }

    // joint set: z2 rows, z3 rows, then valid prototype rows of both views
    std::vector<long long> joint;
    joint.reserve(2 * b);
    for (std::size_t i = 0; i < b; ++i) joint.push_back(ext[i]);
    for (std::size_t i = 0; i < b; ++i) joint.push_back(ext[i]);

    std::size_t proto_count = 0;
    for (const PrototypeSet* ps : {&protos.first, &protos.second})
      for (std::uint8_t v : ps->valid) proto_count += v ? 1 : 0;
    fs.proto_rows = Tensor({proto_count, model.arch.proj_dim});
    std::size_t r = 0;
    for (const PrototypeSet* ps : {&protos.first, &protos.second})
      for (std::size_t c = 0; c < ps->P.rows(); ++c) {
        if (!ps->valid[c]) continue;
        for (std::size_t j = 0; j < ps->P.cols(); ++j) fs.proto_rows.at(r, j) = ps->P.at(c, j);
        joint.push_back(static_cast<long long>(c));
        ++r;
      }
    fs.joint_labels = std::move(joint);
    fs.masks = build_masks(fs.joint_labels, cfg.loss_variant);
  }

  return fs;
}

StepVars step_objective(Tape& t, const std::vector<Var>& params, const ArchConfig& arch,
                        const FrozenStep& fs) {
  StepVars sv;
  std::vector<Var> parts;
  std::vector<double> coeffs;

  const std::size_t b = fs.y1.size();

  if (fs.plain_ce) {
    Var logits = classifier_graph(t, arch, params, encoder_graph(t, arch, params, t.input(fs.v1)));
    sv.loss_plain = t.mixed_ce_mean(logits, fs.y1, fs.y1, std::vector<double>(b, 1.0));
    parts.push_back(sv.loss_plain);
    coeffs.push_back(1.0);
  }
  if (fs.lambda > 0.0) {
    Var logits = classifier_graph(t, arch, params, encoder_graph(t, arch, params, t.input(fs.xm)));
    sv.loss_mixup =
        t.mixed_ce_mean(logits, fs.y1, fs.y2, std::vector<double>(b, fs.lam_mix));
    parts.push_back(sv.loss_mixup);
    coeffs.push_back(fs.lambda);
  }
  if (fs.beta > 0.0) {
    Var logits = classifier_graph(t, arch, params, encoder_graph(t, arch, params, t.input(fs.xc)));
    sv.loss_cutmix =
        t.mixed_ce_mean(logits, fs.y1, fs.y2, std::vector<double>(b, fs.lam_cut));
    parts.push_back(sv.loss_cutmix);
    coeffs.push_back(fs.beta);
  }
  if (fs.has_sc) {
    Var z2 = projection_graph(t, arch, params, encoder_graph(t, arch, params, t.input(fs.v2)));
    Var z3 = projection_graph(t, arch, params, encoder_graph(t, arch, params, t.input(fs.v3)));
    std::vector<Var> rows{z2, z3};
    if (fs.proto_rows.rows() > 0) rows.push_back(t.input(fs.proto_rows));
    Var zj = t.concat_rows(rows);
    sv.loss_sc = supcon_graph(t, zj, fs.masks, fs.tau, true);
    parts.push_back(sv.loss_sc);
    coeffs.push_back(fs.gamma);
  }
  if (parts.empty()) fail("train step: empty objective");
  sv.root = t.lincomb(parts, coeffs);
  return sv;
}

StepResult train_step(ModelState& model, const BatchPair& pair,
                      const std::pair<PrototypeSet, PrototypeSet>& protos,
                      const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t step,
                      double lr) {
  FrozenStep fs = freeze_step(model, pair, protos, cfg, epoch, step);

  Tape t;
  std::vector<Var> params = register_params(t, model, true);
  StepVars sv = step_objective(t, params, model.arch, fs);
  t.backward(sv.root);
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Var p : params) grads.push_back(t.grad(p));
  sgd_step(model, grads, lr, cfg.optim);

  StepResult res;
  res.objective = t.value(sv.root)[0];
  res.noise_count = fs.noise_count;
  if (sv.loss_mixup.valid()) res.loss_mixup = t.value(sv.loss_mixup)[0];
  if (sv.loss_cutmix.valid()) res.loss_cutmix = t.value(sv.loss_cutmix)[0];
  if (sv.loss_sc.valid()) res.loss_sc = t.value(sv.loss_sc)[0];
  return res;
}

EvalBreakdown evaluate(const ModelState& model, const std::vector<Sample>& test_set,
                       const std::vector<long>& real_train_counts, const EvalThresholds& thr) {
  if (test_set.empty()) fail("evaluate: empty test set");
  const std::size_t n_classes = model.arch.n_classes;
  if (real_train_counts.size() != n_classes)
    fail("evaluate: real count vector does not match class count");
  if (thr.lo >= thr.hi) fail("evaluate: thresholds must satisfy lo < hi");

  std::vector<long> correct(n_classes, 0), total(n_classes, 0);
  const std::size_t chunk = 512;
  for (std::size_t lo = 0; lo < test_set.size(); lo += chunk) {
    std::size_t hi = std::min(test_set.size(), lo + chunk);
    Tensor x = flatten_samples(test_set, lo, hi);
    Tensor logits = classify(model, encode(model, x));
    for (std::size_t i = lo; i < hi; ++i) {
      int y = test_set[i].label;
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
        fail("evaluate: test label out of range");
      std::size_t pred = 0;
      for (std::size_t j = 1; j < logits.cols(); ++j)
        if (logits.at(i - lo, j) > logits.at(i - lo, pred)) pred = j;
      ++total[static_cast<std::size_t>(y)];
      if (pred == static_cast<std::size_t>(y)) ++correct[static_cast<std::size_t>(y)];
    }
  }

  EvalBreakdown out;
  out.per_class.assign(n_classes, 0.0);
  out.group_of_class.assign(n_classes, 0);
  double sum = 0.0;
  std::size_t counted = 0;
  double gsum[3] = {0, 0, 0};
  std::size_t gcount[3] = {0, 0, 0};
  for (std::size_t c = 0; c < n_classes; ++c) {
    out.group_of_class[c] = eval_group(real_train_counts[c], thr);
    if (total[c] == 0) continue;
    out.per_class[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    sum += out.per_class[c];
    ++counted;
    gsum[out.group_of_class[c]] += out.per_class[c];
    ++gcount[out.group_of_class[c]];
  }
  if (counted == 0) fail("evaluate: no test classes");
  out.top1 = sum / static_cast<double>(counted);
  out.many = gcount[0] ? gsum[0] / static_cast<double>(gcount[0]) : 0.0;
  out.med = gcount[1] ? gsum[1] / static_cast<double>(gcount[1]) : 0.0;
  out.few = gcount[2] ? gsum[2] / static_cast<double>(gcount[2]) : 0.0;
  return out;
}

FitResult fit_on(const TrainData& data, const TrainConfig& cfg) {
  validate(cfg);
  if (data.real_train.empty()) fail("fit: empty real training split");

  std::vector<Sample> split = data.real_train;
  split.insert(split.end(), data.syn_train.begin(), data.syn_train.end());
  {
    std::unordered_set<std::uint64_t> seen;
    for (const Sample& s : split) {
      validate_sample(s, cfg.lt.n_classes);
      if (!seen.insert(s.id).second)
        fail("fit: duplicate sample id " + std::to_string(s.id) + " in training split");
    }
  }
  if (cfg.batch_size > split.size()) fail("fit: batch size exceeds training split");

  FitResult result;
  result.model = init_params(cfg.arch, cfg.seed);

  for (long epoch = 0; epoch < cfg.optim.total_epochs; ++epoch) {
    double lr = cosine_lr(epoch, cfg.optim.total_epochs, cfg.optim.lr0);
    std::pair<PrototypeSet, PrototypeSet> protos;
    if (cfg.gamma_sc > 0.0)
      protos = refresh_prototypes(result.model, data.real_train,
                                  static_cast<std::uint64_t>(epoch), cfg);

    std::vector<BatchPair> pairs =
        make_batch_pairs(split, cfg.batch_size, static_cast<std::uint64_t>(epoch), cfg.seed);

    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = lr;
    double sm = 0, sc = 0, ss = 0;
    long noise = 0;
    for (std::size_t s = 0; s < pairs.size(); ++s) {
      StepResult sr = train_step(result.model, pairs[s], protos, cfg,
                                 static_cast<std::uint64_t>(epoch), s, lr);
      sm += sr.loss_mixup;
      sc += sr.loss_cutmix;
      ss += sr.loss_sc;
      noise += static_cast<long>(sr.noise_count);
    }
    const double inv_steps = 1.0 / static_cast<double>(pairs.size());
    rep.loss_mixup = sm * inv_steps;
    rep.loss_cutmix = sc * inv_steps;
    rep.loss_sc = ss * inv_steps;
    rep.noise_count = noise;

    EvalBreakdown ev = evaluate(result.model, data.test, data.real_counts, cfg.eval_thresholds);
    rep.test_top1 = ev.top1;
    rep.many = ev.many;
    rep.med = ev.med;
    rep.few = ev.few;
    result.reports.push_back(rep);
    result.model.epoch = static_cast<std::uint64_t>(epoch + 1);
  }
  return result;
}

FitResult fit(const TrainConfig& cfg) { return fit_on(build_toy_data(cfg), cfg); }

}  // namespace sau
