#include "sau/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sau/common.hpp"

namespace sau {

double sample_mix_ratio(double alpha, RngStream& rng) {
  if (!(alpha > 0.0)) fail("mix ratio: alpha must be positive");
  return rng.beta(alpha, alpha);
}

MixedExample mixup(const Tensor& x_i, int y_i, const Tensor& x_j, int y_j, double lambda) {
  if (!x_i.same_shape(x_j))
    fail("mixup: shape mismatch " + shape_str(x_i.shape()) + " vs " + shape_str(x_j.shape()));
  if (lambda < 0.0 || lambda > 1.0) fail("mixup: lambda outside [0,1]");
  MixedExample m;
  m.x = Tensor(x_i.shape());
  for (std::size_t k = 0; k < m.x.size(); ++k)
    m.x[k] = lambda * x_i[k] + (1.0 - lambda) * x_j[k];
  m.y_i = y_i;
  m.y_j = y_j;
  m.lam = lambda;
  return m;
}

CutBox cutmix_box_at(std::size_t width, std::size_t height, double lambda, double r_x,
                     double r_y) {
  if (width < 1 || height < 1) fail("cutmix box: empty image");
  if (lambda < 0.0 || lambda > 1.0) fail("cutmix box: lambda outside [0,1]");
  CutBox b;
  b.r_x = r_x;
  b.r_y = r_y;
  b.r_w = static_cast<double>(width) * std::sqrt(1.0 - lambda);
  b.r_h = static_cast<double>(height) * std::sqrt(1.0 - lambda);
  auto clip = [](double v, double hi) {
    return static_cast<std::size_t>(std::min(std::max(std::lround(v), 0L),
                                             static_cast<long>(hi)));
  };
  b.x0 = clip(r_x - b.r_w / 2.0, static_cast<double>(width));
  b.x1 = clip(r_x + b.r_w / 2.0, static_cast<double>(width));
  b.y0 = clip(r_y - b.r_h / 2.0, static_cast<double>(height));
  b.y1 = clip(r_y + b.r_h / 2.0, static_cast<double>(height));
  if (b.x1 < b.x0) b.x1 = b.x0;
  if (b.y1 < b.y0) b.y1 = b.y0;
  return b;
}

CutBox cutmix_box(std::size_t width, std::size_t height, double lambda, RngStream& rng) {
  double r_x = rng.uniform(0.0, static_cast<double>(width));
  double r_y = rng.uniform(0.0, static_cast<double>(height));
  return cutmix_box_at(width, height, lambda, r_x, r_y);
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
      fail("cutmix: unsupported tensor rank " + std::to_string(x.rank()));
  }
}

}  // namespace

MixedExample cutmix(const Tensor& x_i, int y_i, const Tensor& x_j, int y_j, const CutBox& box) {
  if (!x_i.same_shape(x_j))
    fail("cutmix: shape mismatch " + shape_str(x_i.shape()) + " vs " + shape_str(x_j.shape()));
  Geometry g = geometry(x_i);
  if (box.x1 > g.w || box.y1 > g.h) fail("cutmix: box outside image bounds");
  MixedExample m;
  m.x = x_i;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = box.y0; i < box.y1; ++i)
      for (std::size_t j = box.x0; j < box.x1; ++j)
        m.x[(c * g.h + i) * g.w + j] = x_j[(c * g.h + i) * g.w + j];
  m.y_i = y_i;
  m.y_j = y_j;
  m.lam = 1.0 - static_cast<double>(box.area()) / static_cast<double>(g.w * g.h);
  return m;
}

double mixed_ce_loss(const Tensor& logits, int y_i, int y_j, double lam) {
  if (logits.rank() != 1) fail("mixed ce: expected a logit vector");
  const std::size_t k = logits.size();
  if (y_i < 0 || static_cast<std::size_t>(y_i) >= k || y_j < 0 ||
      static_cast<std::size_t>(y_j) >= k)
    fail("mixed ce: label out of range");
  if (lam < 0.0 || lam > 1.0) fail("mixed ce: lam outside [0,1]");
  if (!logits.all_finite()) fail("mixed ce: non-finite logits");
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) hi = std::max(hi, logits[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) z += std::exp(logits[j] - hi);
  double lse = hi + std::log(z);
  return lam * (lse - logits[static_cast<std::size_t>(y_i)]) +
         (1.0 - lam) * (lse - logits[static_cast<std::size_t>(y_j)]);
}

double mixed_ce_loss(const Tensor& logits, const MixedExample& mixed) {
  return mixed_ce_loss(logits, mixed.y_i, mixed.y_j, mixed.lam);
}

}  // namespace sau
