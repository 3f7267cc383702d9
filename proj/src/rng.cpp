#include "sau/rng.hpp"

#include <cmath>

#include "sau/common.hpp"

namespace sau {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(const StreamKey& key) {
  std::uint64_t h = mix64(key.seed);
  h = mix64(h ^ key.epoch);
  h = mix64(h ^ key.step);
  h = mix64(h ^ key.item);
  h = mix64(h ^ static_cast<std::uint64_t>(key.purpose));
  state_ = h;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double RngStream::uniform() {
  // 53-bit mantissa, offset by half an ulp so 0 and 1 are excluded
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) fail("rng: below(0)");
  // rejection sampling to stay unbiased
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double RngStream::gamma(double shape) {
  if (shape <= 0.0) fail("rng: gamma shape must be positive");
  if (shape < 1.0) {
    double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  if (a <= 0.0 || b <= 0.0) fail("rng: beta parameters must be positive");
  if (a == 1.0 && b == 1.0) return uniform();
  double x = gamma(a);
  double y = gamma(b);
  return x / (x + y);
}

}  // namespace sau
