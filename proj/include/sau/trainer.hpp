#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sau/contrastive.hpp"
#include "sau/dataset.hpp"
#include "sau/model.hpp"
#include "sau/syngen.hpp"

namespace sau {

struct EvalThresholds {
  long hi = 100;  // many: real count > hi
  long lo = 20;   // few: real count < lo; medium otherwise
};

/// 0 = many, 1 = medium, 2 = few.
int eval_group(long real_count, const EvalThresholds& thr);

struct TrainConfig {
  LtSpec lt;
  GenSpec gen;
  ArchConfig arch;
  OptimConfig optim;
  std::size_t batch_size = 128;
  double lambda_mixup = 1.0;
  double beta_cutmix = 1.0;
  double gamma_sc = 1.0;
  bool plain_ce = false;  // baseline/ablation path: unmixed CE on view 1
  double mix_alpha = 1.0;
  double tau = 0.1;
  // With per-batch references, a class with no real rows in the batch has
  // exactly one same-class reference (its prototype), so any k > 1 cannot
  // produce a strict plurality for that class. k = 1 keeps the vote anchored.
  std::size_t knn_k = 1;
  ScVariant loss_variant = ScVariant::kNoiseAsSingletons;
  EvalThresholds eval_thresholds;
  long balance_target = 0;  // 0 means "head class size"
  long test_per_class = 100;
  std::size_t proto_chunk = 256;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochReport {
  long epoch = 0;
  double lr = 0.0;
  double loss_mixup = 0.0;
  double loss_cutmix = 0.0;
  double loss_sc = 0.0;
  long noise_count = 0;
  double test_top1 = 0.0;
  double many = 0.0;
  double med = 0.0;
  double few = 0.0;
};

struct TrainData {
  std::vector<Sample> real_train;
  std::vector<Sample> syn_train;
  std::vector<Sample> test;
  std::vector<long> real_counts;
};

/// Long-tailed real split + synthetic complement + balanced test set, all
/// drawn from the toy generator. Synthetic ids continue after real ids.
TrainData build_toy_data(const TrainConfig& cfg, bool with_synthetic = true);

std::pair<PrototypeSet, PrototypeSet> refresh_prototypes(const ModelState& model,
                                                         const std::vector<Sample>& real_split,
                                                         std::uint64_t epoch,
                                                         const TrainConfig& cfg);

/// Everything decided for one optimization step: mixed inputs, realized mix
/// ratios, contrastive views, corrected labels, prototype rows, and the loss
/// masks. The objective below is a deterministic function of (params, frozen
/// step), which is what both training and the finite-difference checks
/// evaluate.
struct FrozenStep {
  Tensor v1;               // (B, D) classification views of batch 1
  std::vector<int> y1;
  Tensor xm;               // mixup inputs
  Tensor xc;               // cutmix inputs
  std::vector<int> y2;     // batch-2 labels
  double lam_mix = 1.0;
  double lam_cut = 1.0;
  Tensor v2, v3;           // contrastive views
  Tensor proto_rows;       // appended valid prototype rows (possibly 0 rows)
  std::vector<long long> joint_labels;  // 2B + prototype rows
  SupConMasks masks;
  std::size_t noise_count = 0;
  double lambda = 1.0, beta = 1.0, gamma = 1.0;
  bool plain_ce = false;
  double tau = 0.1;
  bool has_sc = false;
};

FrozenStep freeze_step(const ModelState& model, const BatchPair& pair,
                       const std::pair<PrototypeSet, PrototypeSet>& protos,
                       const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t step);

struct StepVars {
  Var root;
  Var loss_mixup, loss_cutmix, loss_sc, loss_plain;
};

StepVars step_objective(Tape& t, const std::vector<Var>& params, const ArchConfig& arch,
                        const FrozenStep& fs);

struct StepResult {
  double loss_mixup = 0.0;
  double loss_cutmix = 0.0;
  double loss_sc = 0.0;
  double objective = 0.0;
  std::size_t noise_count = 0;
};

StepResult train_step(ModelState& model, const BatchPair& pair,
                      const std::pair<PrototypeSet, PrototypeSet>& protos,
                      const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t step, double lr);

struct EvalBreakdown {
  double top1 = 0.0;
  double many = 0.0;
  double med = 0.0;
  double few = 0.0;
  std::vector<double> per_class;
  std::vector<int> group_of_class;
};

EvalBreakdown evaluate(const ModelState& model, const std::vector<Sample>& test_set,
                       const std::vector<long>& real_train_counts, const EvalThresholds& thr);

struct FitResult {
  ModelState model;
  std::vector<EpochReport> reports;
};

FitResult fit_on(const TrainData& data, const TrainConfig& cfg);
/// Builds the toy data internally, then trains.
FitResult fit(const TrainConfig& cfg);

}  // namespace sau
