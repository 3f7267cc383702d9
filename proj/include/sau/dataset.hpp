#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sau/rng.hpp"
#include "sau/sample.hpp"

namespace sau {

/// Long-tailed split description. Class i keeps
/// round(n0 * imbalance_factor^(-i/(n_classes-1))) samples.
struct LtSpec {
  int n_classes = 1;
  long n0 = 1;
  double imbalance_factor = 1.0;
  std::uint64_t seed = 0;
};

void validate(const LtSpec& spec);

std::vector<long> long_tailed_counts(const LtSpec& spec);

/// Seeded uniform subsample without replacement: exactly counts[c] real
/// samples of each class c. Errors name the class that is short.
std::vector<Sample> build_lt_split(const std::vector<Sample>& full,
                                   const std::vector<long>& counts, std::uint64_t seed);

/// result[i] = target - real_counts[i]; target must cover every class.
std::vector<long> complement_counts(const std::vector<long>& real_counts, long target);

// ---- augmentation ----

enum class AugPolicy { kIdentity, kClassification, kContrastive };

AugPolicy parse_policy(const std::string& name);

/// Fixed augmentation parameters, derived from the width of the input.
/// pad/cutout scale as ~W/8 so the same policy works for 32x32 images and
/// short feature vectors alike.
struct AugParams {
  std::size_t pad;
  std::size_t cutout;
  double jitter = 0.1;
};

AugParams aug_params_for_width(std::size_t width);

// primitives (exposed for tests); all preserve shape
Tensor hflip(const Tensor& x);
Tensor pad_crop(const Tensor& x, std::size_t pad, std::size_t dx, std::size_t dy);
Tensor cutout(const Tensor& x, std::size_t cx, std::size_t cy, std::size_t w, std::size_t h);
Tensor channel_jitter(const Tensor& x, const std::vector<double>& scale,
                      const std::vector<double>& shift);

/// Applies the named stochastic policy. Rank-1 tensors are treated as
/// (C=1, H=1, W=D); rank-3 as (C, H, W).
Tensor augment(const Tensor& x, AugPolicy policy, RngStream& rng);

// ---- batch pairing ----

struct ViewTriple {
  Tensor v1, v2, v3;
};

struct BatchOneItem {
  ViewTriple views;
  int label = 0;
  bool is_synthetic = false;
  std::uint64_t id = 0;
};

struct BatchTwoItem {
  Tensor v1;
  int label = 0;
};

/// Two lockstep streams over the same split: batch1 carries three views per
/// sample (v1 classification policy, v2/v3 contrastive policy), batch2 one
/// classification view. Lengths always match.
struct BatchPair {
  std::vector<BatchOneItem> batch1;
  std::vector<BatchTwoItem> batch2;
};

/// Splits a seeded shuffle of `split` into consecutive batches (final
/// partial batch included, so the epoch covers every sample once) and pairs
/// it with an independently shuffled second stream.
std::vector<BatchPair> make_batch_pairs(const std::vector<Sample>& split, std::size_t batch_size,
                                        std::uint64_t epoch, std::uint64_t seed);

}  // namespace sau
