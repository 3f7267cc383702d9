#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sau/rng.hpp"
#include "sau/sample.hpp"
#include "sau/tensor.hpp"

namespace sau {

/// Class-conditional Gaussian generator standing in for an external
/// image-synthesis pipeline. Low-quality generations are produced at
/// `noise_rate`: half drawn from a wrong class's distribution, half from a
/// widened one, both keeping the requested label.
struct GenSpec {
  int n_classes = 1;
  Shape feature_shape{16};
  double spread = 0.3;
  double noise_rate = 0.0;
  double quality_threshold = 0.5;
  double mean_scale = 3.0;
  std::uint64_t seed = 0;
  Tensor class_means;    // (n_classes, D)
  double quality_length = 1.0;  // distance scale of the agreement score
};

void validate(const GenSpec& spec);

/// Builds class means procedurally: smooth, mirror-symmetric along the width
/// axis (so horizontal flips map every class distribution onto itself) and
/// rejection-sampled to pairwise chordal distance >= mean_scale. Classes stay
/// separable under the fixed augmentation policies as long as
/// mean_scale > ~6*spread + the pad-crop displacement of the means.
GenSpec make_gen_spec(int n_classes, Shape feature_shape, double spread, double noise_rate,
                      double quality_threshold, double mean_scale, std::uint64_t seed);

/// Same spec but with caller-provided means.
GenSpec make_gen_spec_with_means(Tensor class_means, double spread, double noise_rate,
                                 double quality_threshold, std::uint64_t seed);

/// Agreement between features and the labeled class distribution, in [0,1],
/// monotone decreasing in the distance to the class mean.
double quality_score(const GenSpec& spec, const Tensor& features, int label);

/// `count` synthetic samples for one class; ids run 0..count-1 and are
/// expected to be rebased by the caller.
std::vector<Sample> generate_class_samples(const GenSpec& spec, int class_id, long count,
                                           RngStream& rng);

/// Clean draws (no noise path), used for real toy data and test sets.
std::vector<Sample> draw_clean_class_samples(const GenSpec& spec, int class_id, long count,
                                             RngStream& rng, bool is_synthetic);

/// Keeps samples with quality >= threshold, order preserved.
std::vector<Sample> filter_by_quality(const std::vector<Sample>& samples, double threshold);

/// Ingestion point for externally generated data (manifest + blob pair).
std::vector<Sample> load_external(const std::filesystem::path& manifest_path);

/// Generates per-class complements, quality-filtering each round and
/// regenerating until targets are met. Errors after `max_rounds` rounds of
/// no progress toward an unmet target.
std::vector<Sample> generate_complement(const GenSpec& spec, const std::vector<long>& needed,
                                        std::uint64_t seed, int max_rounds = 50);

}  // namespace sau
