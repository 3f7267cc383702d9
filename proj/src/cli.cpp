#include "sau/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sau/common.hpp"
#include "sau/gradcheck.hpp"
#include "sau/io.hpp"

namespace sau {

const char* kMetricsHeader =
    "epoch,lr,loss_mixup,loss_cutmix,loss_sc,noise_count,test_top1,many,med,few";

RunConfig resolve_config(const CliOverrides& ov) {
  RunConfig rc = ov.config_path ? load_run_config(*ov.config_path) : default_run_config();
  if (ov.seed) {
    rc.train.seed = *ov.seed;
    rc.train.lt.seed = *ov.seed;
  }
  if (ov.out_dir) rc.out_dir = *ov.out_dir;
  if (ov.data_dir) rc.data_dir = *ov.data_dir;
  if (ov.epochs) rc.train.optim.total_epochs = std::max<long>(*ov.epochs, 0);

  const bool regen = ov.classes || ov.dim;
  if (ov.classes) {
    rc.train.lt.n_classes = *ov.classes;
    rc.train.arch.n_classes = static_cast<std::size_t>(*ov.classes);
  }
  if (ov.n0) rc.train.lt.n0 = *ov.n0;
  if (ov.imbalance) rc.train.lt.imbalance_factor = *ov.imbalance;
  if (ov.dim) {
    rc.train.arch.input_dim = *ov.dim;
  }
  if (regen) {
    Shape shape = ov.dim ? Shape{*ov.dim} : rc.train.gen.feature_shape;
    rc.train.gen = make_gen_spec(rc.train.lt.n_classes, shape, rc.train.gen.spread,
                                 rc.train.gen.noise_rate, rc.train.gen.quality_threshold,
                                 rc.train.gen.mean_scale, rc.gen_means_seed);
  }
  if (rc.train.optim.total_epochs > 0) validate(rc.train);
  return rc;
}

std::string format_metrics_row(const EpochReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%ld,%.10g,%.10g,%.10g,%.10g,%ld,%.10g,%.10g,%.10g,%.10g",
                r.epoch, r.lr, r.loss_mixup, r.loss_cutmix, r.loss_sc, r.noise_count,
                r.test_top1, r.many, r.med, r.few);
  return buf;
}

void write_metrics(const std::filesystem::path& path, const std::vector<EpochReport>& reports) {
  std::ofstream os(path);
  if (!os) fail("metrics: cannot open " + path.string() + " for writing");
  os << kMetricsHeader << '\n';
  for (const EpochReport& r : reports) os << format_metrics_row(r) << '\n';
  if (!os) fail("metrics: write failed");
}

std::uint64_t dataset_hash(const TrainData& data) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  auto mix_samples = [&](const std::vector<Sample>& ss) {
    for (const Sample& s : ss) {
      mix(s.id);
      mix(static_cast<std::uint64_t>(s.label));
      mix(s.is_synthetic ? 1 : 0);
      for (std::size_t i = 0; i < s.features.size(); ++i) {
        std::uint64_t bits;
        double v = s.features[i];
        std::memcpy(&bits, &v, 8);
        mix(bits);
      }
    }
  };
  mix_samples(data.real_train);
  mix_samples(data.syn_train);
  mix_samples(data.test);
  return h;
}

namespace {

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

TrainData load_train_data(const RunConfig& rc, std::ostream& out) {
  std::filesystem::path dir(rc.data_dir);
  TrainData data;
  data.real_train = load_dataset(dir / "real.jsonl");
  data.test = load_dataset(dir / "test.jsonl");
  std::filesystem::path synth = dir / "synth.jsonl";
  if (std::filesystem::exists(synth))
    data.syn_train = load_dataset(synth);
  else
    out << "note: no synthetic manifest at " << synth.string() << ", training on real data only\n";
  data.real_counts = class_counts(data.real_train, rc.train.lt.n_classes);
  return data;
}

}  // namespace

int cmd_make_data(const RunConfig& rc, std::ostream& out) {
  std::filesystem::path dir = ensure_dir(rc.out_dir);
  TrainData data = build_toy_data(rc.train, /*with_synthetic=*/false);
  save_dataset(dir / "real.jsonl", data.real_train);
  save_dataset(dir / "test.jsonl", data.test);
  out << "real split (";
  out << data.real_train.size() << " samples) per-class counts:";
  for (long c : data.real_counts) out << ' ' << c;
  out << "\ntest set: " << data.test.size() << " samples ("
      << rc.train.test_per_class << " per class)\n";
  out << "wrote " << (dir / "real.jsonl").string() << " and " << (dir / "test.jsonl").string()
      << '\n';
  return 0;
}

int cmd_gen_synth(const RunConfig& rc, std::ostream& out) {
  std::filesystem::path dir = ensure_dir(rc.out_dir);
  std::vector<Sample> real = load_dataset(std::filesystem::path(rc.data_dir) / "real.jsonl");
  std::vector<long> counts = class_counts(real, rc.train.lt.n_classes);
  long target = rc.train.balance_target > 0 ? rc.train.balance_target : rc.train.lt.n0;
  for (long c : counts) target = std::max(target, c);
  std::vector<long> needed = complement_counts(counts, target);

  std::vector<Sample> synth = generate_complement(rc.train.gen, needed, rc.train.seed);
  std::uint64_t next_id = 0;
  for (const Sample& s : real) next_id = std::max(next_id, s.id + 1);
  for (Sample& s : synth) s.id = next_id++;
  save_dataset(dir / "synth.jsonl", synth);

  std::vector<long> syn_counts = class_counts(synth, rc.train.lt.n_classes);
  out << "complement target " << target << "; per-class real+synthetic:";
  for (std::size_t c = 0; c < counts.size(); ++c) out << ' ' << (counts[c] + syn_counts[c]);
  out << "\nwrote " << (dir / "synth.jsonl").string() << " (" << synth.size() << " samples)\n";
  return 0;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  std::filesystem::path dir = ensure_dir(rc.out_dir);
  TrainData data = load_train_data(rc, out);
  FitResult res;
  if (rc.train.optim.total_epochs == 0) {
    res.model = init_params(rc.train.arch, rc.train.seed);
  } else {
    res = fit_on(data, rc.train);
  }
  write_metrics(dir / "metrics.csv", res.reports);
  save_checkpoint(dir / "checkpoint.ckpt", res.model);
  out << kMetricsHeader << '\n';
  for (const EpochReport& r : res.reports) out << format_metrics_row(r) << '\n';
  out << "wrote " << (dir / "metrics.csv").string() << " and "
      << (dir / "checkpoint.ckpt").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& checkpoint_path, std::ostream& out) {
  ModelState model = load_checkpoint(checkpoint_path);
  std::filesystem::path dir(rc.data_dir);
  std::vector<Sample> test = load_dataset(dir / "test.jsonl");
  std::vector<Sample> real = load_dataset(dir / "real.jsonl");
  if (!test.empty() && numel(test[0].features.shape()) != model.arch.input_dim)
    fail("eval: checkpoint/arch mismatch (test features have " +
         std::to_string(numel(test[0].features.shape())) + " elements, model expects " +
         std::to_string(model.arch.input_dim) + ")");
  std::vector<long> counts = class_counts(real, static_cast<int>(model.arch.n_classes));
  EvalBreakdown ev = evaluate(model, test, counts, rc.train.eval_thresholds);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "top1=%.10g many=%.10g med=%.10g few=%.10g", ev.top1, ev.many,
                ev.med, ev.few);
  out << buf << '\n';
  return 0;
}

int cmd_ablate(const RunConfig& rc, std::ostream& out) {
  std::filesystem::path dir = ensure_dir(rc.out_dir);
  TrainData data = build_toy_data(rc.train);
  const std::uint64_t dh = dataset_hash(data);

  struct Row {
    std::string section, name;
    double top1, many, med, few;
  };
  std::vector<Row> rows;

  auto run = [&](const std::string& section, const std::string& name, TrainConfig cfg) {
    FitResult res = fit_on(data, cfg);
    const EpochReport& last = res.reports.back();
    rows.push_back({section, name, last.test_top1, last.many, last.med, last.few});
    out << section << '/' << name << ": top1=" << last.test_top1 << " (data_hash=" << std::hex
        << dh << std::dec << ")\n";
  };

  for (ScVariant v :
       {ScVariant::kIgnoreNoise, ScVariant::kNoiseAsSingletons, ScVariant::kNoiseAsNegatives}) {
    TrainConfig cfg = rc.train;
    cfg.loss_variant = v;
    run("noise_dropping", variant_name(v), cfg);
  }

  struct ComponentRow {
    const char* name;
    bool ce, mix, cut, sc;
  };
  const ComponentRow grid[] = {
      {"ce", true, false, false, false},
      {"mixup", false, true, false, false},
      {"cutmix", false, false, true, false},
      {"mixup+cutmix", false, true, true, false},
      {"mixup+sc", false, true, false, true},
      {"cutmix+sc", false, false, true, true},
      {"mixup+cutmix+sc", false, true, true, true},
  };
  for (const ComponentRow& g : grid) {
    TrainConfig cfg = rc.train;
    cfg.plain_ce = g.ce;
    cfg.lambda_mixup = g.mix ? rc.train.lambda_mixup : 0.0;
    cfg.beta_cutmix = g.cut ? rc.train.beta_cutmix : 0.0;
    cfg.gamma_sc = g.sc ? rc.train.gamma_sc : 0.0;
    run("components", g.name, cfg);
  }

  std::ofstream csv(dir / "ablation.csv");
  if (!csv) fail("ablate: cannot open output csv");
  csv << "section,name,top1,many,med,few,data_hash\n";
  for (const Row& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%.10g,%.10g,%016" PRIx64,
                  r.section.c_str(), r.name.c_str(), r.top1, r.many, r.med, r.few, dh);
    csv << buf << '\n';
  }

  // observed ordering of the three noise-dropping variants
  out << "noise-dropping ordering (best first):";
  std::vector<std::pair<double, std::string>> order;
  for (const Row& r : rows)
    if (r.section == "noise_dropping") order.push_back({r.top1, r.name});
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [acc, name] : order) out << ' ' << name << "(" << acc << ")";
  out << "\nwrote " << (dir / "ablation.csv").string() << '\n';
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  // constant objective probe: gradients must be exactly zero
  {
    ArchConfig arch;
    arch.input_dim = 4;
    arch.encoder_hidden = {4};
    arch.proj_hidden = {};
    arch.proj_dim = 3;
    arch.n_classes = 2;
    ModelState state = init_params(arch, seed);
    ObjectiveGrads g = compute_grad(state, [](Tape& t, const std::vector<Var>&) {
      return t.input(Tensor({1}, 5.0));
    });
    double max_abs = 0.0;
    for (const Tensor& gr : g.grads)
      for (std::size_t i = 0; i < gr.size(); ++i) max_abs = std::max(max_abs, std::abs(gr[i]));
    out << "constant probe: max |grad| = " << max_abs << '\n';
    if (max_abs != 0.0) return 1;
  }

  std::vector<GradCheckResult> results = run_gradcheck_suite(seed, 20, 1e-4);
  bool ok = true;
  for (const GradCheckResult& r : results) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "loss %-22s max_rel_err=%.3e over %zu instances (%zu coords)",
                  r.name.c_str(), r.max_rel_err, r.instances, r.coords);
    out << buf << '\n';
    ok = ok && r.max_rel_err < 1e-3;
  }
  out << (ok ? "gradcheck: PASS\n" : "gradcheck: FAIL\n");
  return ok ? 0 : 1;
}

}  // namespace sau
