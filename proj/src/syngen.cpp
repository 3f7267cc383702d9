#include "sau/syngen.hpp"

#include <cmath>
#include <limits>

#include "sau/common.hpp"
#include "sau/io.hpp"

namespace sau {

namespace {

constexpr double kWidenFactor = 3.0;

double min_pairwise_distance(const Tensor& means) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.rows(); ++a)
    for (std::size_t b = a + 1; b < means.rows(); ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < means.cols(); ++j) {
        double c = means.at(a, j) - means.at(b, j);
        d2 += c * c;
      }
      best = std::min(best, std::sqrt(d2));
    }
  return best;
}

/// Smooth palindromic direction along the width axis: even-frequency cosine
/// components only, so mirror(v) == v exactly.
Tensor draw_symmetric_direction(const Shape& feature_shape, RngStream& rng) {
  std::size_t c = 1, h = 1, w = 0;
  if (feature_shape.size() == 1) {
    w = feature_shape[0];
  } else if (feature_shape.size() == 3) {
    c = feature_shape[0];
    h = feature_shape[1];
    w = feature_shape[2];
  } else {
    fail("gen spec: feature shape must have rank 1 or 3");
  }
  Tensor v(feature_shape);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t f = 0; f < w; f += 2) {
        double a = rng.normal();
        for (std::size_t j = 0; j < w; ++j) {
          double basis = std::cos(M_PI * static_cast<double>(f) *
                                  (static_cast<double>(j) + 0.5) / static_cast<double>(w));
          v[(ci * h + i) * w + j] += a * basis;
        }
      }
    }
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) norm += v[i] * v[i];
  norm = std::sqrt(norm);
  if (norm < 1e-12) fail("gen spec: degenerate class direction");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] /= norm;
  return v;
}

void finalize_quality_length(GenSpec& spec) {
  spec.quality_length = spec.n_classes >= 2 ? min_pairwise_distance(spec.class_means) : 1.0;
  if (!(spec.quality_length > 0.0)) fail("gen spec: coincident class means");
}

}  // namespace

void validate(const GenSpec& spec) {
  if (spec.n_classes < 1) fail("gen spec: n_classes must be >= 1");
  if (!(spec.spread > 0.0)) fail("gen spec: spread must be positive");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0) fail("gen spec: noise_rate outside [0,1]");
  if (spec.quality_threshold < 0.0 || spec.quality_threshold > 1.0)
    fail("gen spec: quality_threshold outside [0,1]");
  if (spec.class_means.rank() != 2 ||
      spec.class_means.rows() != static_cast<std::size_t>(spec.n_classes))
    fail("gen spec: class_means must be (n_classes, D)");
  if (spec.class_means.cols() != numel(spec.feature_shape))
    fail("gen spec: class_means width does not match feature shape");
}

GenSpec make_gen_spec(int n_classes, Shape feature_shape, double spread, double noise_rate,
                      double quality_threshold, double mean_scale, std::uint64_t seed) {
  if (n_classes < 1) fail("gen spec: n_classes must be >= 1");
  if (!(mean_scale > 0.0)) fail("gen spec: mean_scale must be positive");
  GenSpec spec;
  spec.n_classes = n_classes;
  spec.feature_shape = feature_shape;
  spec.spread = spread;
  spec.noise_rate = noise_rate;
  spec.quality_threshold = quality_threshold;
  spec.mean_scale = mean_scale;
  spec.seed = seed;

  const std::size_t d = numel(feature_shape);
  spec.class_means = Tensor({static_cast<std::size_t>(n_classes), d});
  RngStream rng(StreamKey{seed, 0, 0, 0, Draw::kClassMeans});
  const double min_sep = mean_scale;  // chordal separation between accepted means
  for (int c = 0; c < n_classes; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000)
        fail("gen spec: could not place " + std::to_string(n_classes) +
             " separated class means in dimension " + std::to_string(d));
      Tensor dir = draw_symmetric_direction(feature_shape, rng);
      bool ok = true;
      for (int prev = 0; prev < c && ok; ++prev) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double diff = mean_scale * dir[j] - spec.class_means.at(prev, j);
          d2 += diff * diff;
        }
        ok = std::sqrt(d2) >= min_sep;
      }
      if (ok) {
        for (std::size_t j = 0; j < d; ++j)
          spec.class_means.at(static_cast<std::size_t>(c), j) = mean_scale * dir[j];
        break;
      }
    }
  }
  finalize_quality_length(spec);
  validate(spec);
  return spec;
}

GenSpec make_gen_spec_with_means(Tensor class_means, double spread, double noise_rate,
                                 double quality_threshold, std::uint64_t seed) {
  if (class_means.rank() != 2) fail("gen spec: class_means must be rank 2");
  GenSpec spec;
  spec.n_classes = static_cast<int>(class_means.rows());
  spec.feature_shape = Shape{class_means.cols()};
  spec.spread = spread;
  spec.noise_rate = noise_rate;
  spec.quality_threshold = quality_threshold;
  spec.mean_scale = 0.0;
  spec.seed = seed;
  spec.class_means = std::move(class_means);
  finalize_quality_length(spec);
  validate(spec);
  return spec;
}

double quality_score(const GenSpec& spec, const Tensor& features, int label) {
  if (label < 0 || label >= spec.n_classes) fail("quality: label out of range");
  double d2 = 0.0;
  for (std::size_t j = 0; j < features.size(); ++j) {
    double c = features[j] - spec.class_means.at(static_cast<std::size_t>(label), j);
    d2 += c * c;
  }
  double q = std::exp(-2.0 * d2 / (spec.quality_length * spec.quality_length));
  return std::min(1.0, std::max(0.0, q));
}

namespace {

Sample draw_one(const GenSpec& spec, int class_id, std::uint64_t idx, RngStream& rng,
                bool allow_noise, bool is_synthetic) {
  const std::size_t d = numel(spec.feature_shape);
  int source_class = class_id;
  double sigma = spec.spread;
  if (allow_noise && rng.uniform() < spec.noise_rate) {
    if (rng.uniform() < 0.5 && spec.n_classes > 1) {
      // mislabeled generation: features from another class
      std::uint64_t other = rng.below(static_cast<std::uint64_t>(spec.n_classes - 1));
      source_class = static_cast<int>(other) + (static_cast<int>(other) >= class_id ? 1 : 0);
    } else {
      sigma = spec.spread * kWidenFactor;
    }
  }
  Tensor x(spec.feature_shape);
  for (std::size_t j = 0; j < d; ++j)
    x[j] = spec.class_means.at(static_cast<std::size_t>(source_class), j) + sigma * rng.normal();
  Sample s;
  s.label = class_id;
  s.is_synthetic = is_synthetic;
  s.quality = is_synthetic ? quality_score(spec, x, class_id) : 1.0;
  s.id = idx;
  s.features = std::move(x);
  return s;
}

}  // namespace

std::vector<Sample> generate_class_samples(const GenSpec& spec, int class_id, long count,
                                           RngStream& rng) {
  validate(spec);
  if (class_id < 0 || class_id >= spec.n_classes) fail("generate: class id out of range");
  if (count < 0) fail("generate: negative count");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k)
    out.push_back(draw_one(spec, class_id, static_cast<std::uint64_t>(k), rng, true, true));
  return out;
}

std::vector<Sample> draw_clean_class_samples(const GenSpec& spec, int class_id, long count,
                                             RngStream& rng, bool is_synthetic) {
  validate(spec);
  if (class_id < 0 || class_id >= spec.n_classes) fail("draw: class id out of range");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k)
    out.push_back(
        draw_one(spec, class_id, static_cast<std::uint64_t>(k), rng, false, is_synthetic));
  return out;
}

std::vector<Sample> filter_by_quality(const std::vector<Sample>& samples, double threshold) {
  std::vector<Sample> out;
  for (const Sample& s : samples)
    if (s.quality >= threshold) out.push_back(s);
  return out;
}

std::vector<Sample> load_external(const std::filesystem::path& manifest_path) {
  return load_dataset(manifest_path);
}

std::vector<Sample> generate_complement(const GenSpec& spec, const std::vector<long>& needed,
                                        std::uint64_t seed, int max_rounds) {
  validate(spec);
  if (needed.size() != static_cast<std::size_t>(spec.n_classes))
    fail("complement: needed counts length mismatch");
  std::vector<Sample> out;
  for (int c = 0; c < spec.n_classes; ++c) {
    long want = needed[static_cast<std::size_t>(c)];
    if (want < 0) fail("complement: negative target for class " + std::to_string(c));
    if (want == 0) continue;
    RngStream rng(StreamKey{seed, 0, 0, static_cast<std::uint64_t>(c), Draw::kSynthesis});
    std::vector<Sample> kept;
    long have = 0;
    for (int round = 0; have < want; ++round) {
      if (round >= max_rounds)
        fail("complement: class " + std::to_string(c) + " cannot reach " + std::to_string(want) +
             " samples above quality threshold " + std::to_string(spec.quality_threshold) +
             " after " + std::to_string(max_rounds) + " rounds");
      std::vector<Sample> batch = generate_class_samples(spec, c, want - have, rng);
      std::vector<Sample> good = filter_by_quality(batch, spec.quality_threshold);
      for (Sample& s : good) kept.push_back(std::move(s));
      have = static_cast<long>(kept.size());
    }
    for (Sample& s : kept) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sau
