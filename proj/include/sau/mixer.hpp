#pragma once

#include <cstddef>

#include "sau/rng.hpp"
#include "sau/tensor.hpp"

namespace sau {

/// A mixed input with its soft label stored as (y_i, y_j, lam): weight `lam`
/// on y_i, (1 - lam) on y_j.
struct MixedExample {
  Tensor x;
  int y_i = 0;
  int y_j = 0;
  double lam = 1.0;
};

/// Cut rectangle: sampled center/extent plus the clipped pixel bounds
/// [x0,x1) x [y0,y1), which always lie inside the image.
struct CutBox {
  double r_x = 0.0, r_y = 0.0;
  double r_w = 0.0, r_h = 0.0;
  std::size_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  std::size_t area() const { return (x1 - x0) * (y1 - y0); }
};

/// Beta(alpha, alpha) draw in [0,1].
double sample_mix_ratio(double alpha, RngStream& rng);

/// Convex combination of two same-shape inputs; soft label weight = lambda.
MixedExample mixup(const Tensor& x_i, int y_i, const Tensor& x_j, int y_j, double lambda);

/// Cut rectangle with area ratio 1 - lambda before clipping, centered at a
/// uniform position.
CutBox cutmix_box(std::size_t width, std::size_t height, double lambda, RngStream& rng);
CutBox cutmix_box_at(std::size_t width, std::size_t height, double lambda, double r_x,
                     double r_y);

/// Pixels inside the box come from x_j, the rest from x_i; the soft label
/// weight is the realized (clipped) outside-area fraction.
MixedExample cutmix(const Tensor& x_i, int y_i, const Tensor& x_j, int y_j, const CutBox& box);

/// lam * CE(logits, y_i) + (1 - lam) * CE(logits, y_j) for a single example.
double mixed_ce_loss(const Tensor& logits, int y_i, int y_j, double lam);
double mixed_ce_loss(const Tensor& logits, const MixedExample& mixed);

}  // namespace sau
