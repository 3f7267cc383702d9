#include "sau/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sau/common.hpp"

namespace sau {

void validate_sample(const Sample& s, int n_classes) {
  if (s.label < 0 || s.label >= n_classes)
    fail("sample " + std::to_string(s.id) + ": label " + std::to_string(s.label) +
         " out of range [0," + std::to_string(n_classes) + ")");
  if (s.quality < 0.0 || s.quality > 1.0)
    fail("sample " + std::to_string(s.id) + ": quality outside [0,1]");
  if (!s.features.all_finite())
    fail("sample " + std::to_string(s.id) + ": non-finite features");
}

std::vector<long> class_counts(const std::vector<Sample>& samples, int n_classes) {
  std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
  for (const Sample& s : samples) {
    if (s.label < 0 || s.label >= n_classes)
      fail("class_counts: label " + std::to_string(s.label) + " out of range");
    ++counts[static_cast<std::size_t>(s.label)];
  }
  return counts;
}

void validate(const LtSpec& spec) {
  if (spec.n_classes < 1) fail("lt spec: n_classes must be >= 1");
  if (spec.n0 < 1) fail("lt spec: n0 must be >= 1");
  if (spec.imbalance_factor < 1.0) fail("lt spec: imbalance factor must be >= 1");
}

std::vector<long> long_tailed_counts(const LtSpec& spec) {
  validate(spec);
  std::vector<long> counts(static_cast<std::size_t>(spec.n_classes));
  if (spec.n_classes == 1) {
    counts[0] = spec.n0;
    return counts;
  }
  const double n1 = static_cast<double>(spec.n_classes - 1);
  for (int i = 0; i < spec.n_classes; ++i) {
    double scale = std::pow(spec.imbalance_factor, -static_cast<double>(i) / n1);
    counts[static_cast<std::size_t>(i)] = std::lround(static_cast<double>(spec.n0) * scale);
  }
  return counts;
}

std::vector<Sample> build_lt_split(const std::vector<Sample>& full,
                                   const std::vector<long>& counts, std::uint64_t seed) {
  const int n_classes = static_cast<int>(counts.size());
  std::vector<std::vector<std::size_t>> by_class(counts.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    int y = full[i].label;
    if (y < 0 || y >= n_classes) fail("lt split: label " + std::to_string(y) + " out of range");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  std::vector<Sample> out;
  for (int c = 0; c < n_classes; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    long want = counts[static_cast<std::size_t>(c)];
    if (want < 0) fail("lt split: negative count for class " + std::to_string(c));
    if (static_cast<long>(idx.size()) < want)
      fail("lt split: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
           " samples, need " + std::to_string(want));
    RngStream rng(StreamKey{seed, 0, 0, static_cast<std::uint64_t>(c), Draw::kRealData});
    rng.shuffle(idx);
    for (long k = 0; k < want; ++k) {
      Sample s = full[idx[static_cast<std::size_t>(k)]];
      s.is_synthetic = false;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<long> complement_counts(const std::vector<long>& real_counts, long target) {
  std::vector<long> out(real_counts.size());
  for (std::size_t i = 0; i < real_counts.size(); ++i) {
    if (real_counts[i] > target)
      fail("complement: class " + std::to_string(i) + " already has " +
           std::to_string(real_counts[i]) + " > target " + std::to_string(target));
    out[i] = target - real_counts[i];
  }
  return out;
}

// ---- augmentation ----

AugPolicy parse_policy(const std::string& name) {
  if (name == "identity") return AugPolicy::kIdentity;
  if (name == "classification") return AugPolicy::kClassification;
  if (name == "contrastive") return AugPolicy::kContrastive;
  fail("augment: unknown policy '" + name + "'");
}

AugParams aug_params_for_width(std::size_t width) {
  AugParams p{};
  p.pad = std::max<std::size_t>(1, width / 8);
  p.cutout = std::max<std::size_t>(1, width / 8);
  p.jitter = 0.1;
  return p;
}

namespace {

struct Geometry {
  std::size_t c, h, w;
};

Geometry geometry(const Tensor& x) {
  switch (x.rank()) {
    case 1:
      return {1, 1, x.dim(0)};
    case 2:
      return {1, x.dim(0), x.dim(1)};
    case 3:
      return {x.dim(0), x.dim(1), x.dim(2)};
    default:
      fail("augment: unsupported tensor rank " + std::to_string(x.rank()));
  }
}

inline double& px(Tensor& x, const Geometry& g, std::size_t c, std::size_t i, std::size_t j) {
  return x[(c * g.h + i) * g.w + j];
}
inline double px(const Tensor& x, const Geometry& g, std::size_t c, std::size_t i,
                 std::size_t j) {
  return x[(c * g.h + i) * g.w + j];
}

}  // namespace

Tensor hflip(const Tensor& x) {
  Geometry g = geometry(x);
  Tensor y = x;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = 0; i < g.h; ++i)
      for (std::size_t j = 0; j < g.w; ++j) px(y, g, c, i, j) = px(x, g, c, i, g.w - 1 - j);
  return y;
}

Tensor pad_crop(const Tensor& x, std::size_t pad, std::size_t dx, std::size_t dy) {
  Geometry g = geometry(x);
  if (dx > 2 * pad || dy > 2 * pad) fail("pad_crop: offset outside padded region");
  Tensor y(x.shape());
  // reading window starts at (dy, dx) in the zero-padded image
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = 0; i < g.h; ++i)
      for (std::size_t j = 0; j < g.w; ++j) {
        long si = static_cast<long>(i + dy) - static_cast<long>(pad);
        long sj = static_cast<long>(j + dx) - static_cast<long>(pad);
        if (si < 0 || sj < 0 || si >= static_cast<long>(g.h) || sj >= static_cast<long>(g.w))
          px(y, g, c, i, j) = 0.0;
        else
          px(y, g, c, i, j) = px(x, g, c, static_cast<std::size_t>(si),
                                 static_cast<std::size_t>(sj));
      }
  return y;
}

Tensor cutout(const Tensor& x, std::size_t cx, std::size_t cy, std::size_t w, std::size_t h) {
  Geometry g = geometry(x);
  Tensor y = x;
  std::size_t x0 = cx >= w / 2 ? cx - w / 2 : 0;
  std::size_t y0 = cy >= h / 2 ? cy - h / 2 : 0;
  std::size_t x1 = std::min(g.w, x0 + w);
  std::size_t y1 = std::min(g.h, y0 + h);
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = y0; i < y1; ++i)
      for (std::size_t j = x0; j < x1; ++j) px(y, g, c, i, j) = 0.0;
  return y;
}

Tensor channel_jitter(const Tensor& x, const std::vector<double>& scale,
                      const std::vector<double>& shift) {
  Geometry g = geometry(x);
  if (scale.size() != g.c || shift.size() != g.c) fail("channel_jitter: channel count mismatch");
  Tensor y = x;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = 0; i < g.h; ++i)
      for (std::size_t j = 0; j < g.w; ++j)
        px(y, g, c, i, j) = px(x, g, c, i, j) * scale[c] + shift[c];
  return y;
}

Tensor augment(const Tensor& x, AugPolicy policy, RngStream& rng) {
  if (!x.all_finite()) fail("augment: non-finite input");
  if (policy == AugPolicy::kIdentity) return x;
  Geometry g = geometry(x);
  AugParams p = aug_params_for_width(g.w);

  Tensor y = x;
  if (rng.uniform() < 0.5) y = hflip(y);
  {
    std::size_t dx = static_cast<std::size_t>(rng.below(2 * p.pad + 1));
    std::size_t dy = g.h > 1 ? static_cast<std::size_t>(rng.below(2 * p.pad + 1)) : p.pad;
    y = pad_crop(y, p.pad, dx, dy);
  }
  if (policy == AugPolicy::kContrastive) {
    std::size_t cx = static_cast<std::size_t>(rng.below(g.w));
    std::size_t cy = g.h > 1 ? static_cast<std::size_t>(rng.below(g.h)) : 0;
    std::size_t ch = g.h > 1 ? p.cutout : 1;
    y = cutout(y, cx, cy, p.cutout, ch);
    std::vector<double> scale(g.c), shift(g.c);
    for (std::size_t c = 0; c < g.c; ++c) {
      scale[c] = 1.0 + rng.uniform(-p.jitter, p.jitter);
      shift[c] = rng.uniform(-p.jitter, p.jitter);
    }
    y = channel_jitter(y, scale, shift);
  }
  return y;
}

// ---- batch pairing ----

std::vector<BatchPair> make_batch_pairs(const std::vector<Sample>& split, std::size_t batch_size,
                                        std::uint64_t epoch, std::uint64_t seed) {
  if (split.empty()) fail("batch pairs: empty split");
  if (batch_size == 0 || batch_size > split.size())
    fail("batch pairs: batch size " + std::to_string(batch_size) + " out of range for split of " +
         std::to_string(split.size()));

  std::vector<std::size_t> order1(split.size()), order2(split.size());
  std::iota(order1.begin(), order1.end(), 0);
  std::iota(order2.begin(), order2.end(), 0);
  RngStream s1(StreamKey{seed, epoch, 0, 0, Draw::kShuffleBatch1});
  RngStream s2(StreamKey{seed, epoch, 0, 0, Draw::kShuffleBatch2});
  s1.shuffle(order1);
  s2.shuffle(order2);

  auto view_stream = [&](std::uint64_t step, std::uint64_t id, Draw purpose) {
    return RngStream(StreamKey{seed, epoch, step, id, purpose});
  };

  std::vector<BatchPair> pairs;
  std::size_t pos = 0;
  std::uint64_t step = 0;
  while (pos < split.size()) {
    std::size_t take = std::min(batch_size, split.size() - pos);
    BatchPair pair;
    pair.batch1.reserve(take);
    pair.batch2.reserve(take);
    for (std::size_t k = 0; k < take; ++k) {
      const Sample& a = split[order1[pos + k]];
      const Sample& b = split[order2[pos + k]];
      BatchOneItem item;
      item.label = a.label;
      item.is_synthetic = a.is_synthetic;
      item.id = a.id;
      {
        RngStream r = view_stream(step, a.id, Draw::kViewB1V1);
        item.views.v1 = augment(a.features, AugPolicy::kClassification, r);
      }
      {
        RngStream r = view_stream(step, a.id, Draw::kViewB1V2);
        item.views.v2 = augment(a.features, AugPolicy::kContrastive, r);
      }
      {
        RngStream r = view_stream(step, a.id, Draw::kViewB1V3);
        item.views.v3 = augment(a.features, AugPolicy::kContrastive, r);
      }
      pair.batch1.push_back(std::move(item));

      BatchTwoItem second;
      second.label = b.label;
      {
        RngStream r = view_stream(step, b.id, Draw::kViewB2V1);
        second.v1 = augment(b.features, AugPolicy::kClassification, r);
      }
      pair.batch2.push_back(std::move(second));
    }
    pairs.push_back(std::move(pair));
    pos += take;
    ++step;
  }
  return pairs;
}

}  // namespace sau
