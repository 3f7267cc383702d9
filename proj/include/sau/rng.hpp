#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace sau {

/// Role of a random draw. Part of the stream key, so adding or removing
/// draws for one purpose never shifts the values drawn for another.
enum class Draw : std::uint64_t {
  kParamInit = 1,
  kShuffleBatch1,
  kShuffleBatch2,
  kViewB1V1,
  kViewB1V2,
  kViewB1V3,
  kViewB2V1,
  kProtoView2,
  kProtoView3,
  kMixupLambda,
  kCutmixLambda,
  kCutmixBox,
  kClassMeans,
  kSynthesis,
  kRealData,
  kTestData,
};

/// Every random decision in the pipeline is keyed by this tuple.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::uint64_t item = 0;
  Draw purpose = Draw::kParamInit;
};

/// Deterministic counter-based stream (splitmix64 walk seeded by a hashed
/// StreamKey). Streams with different keys are independent; the same key
/// always reproduces the same draw sequence, bit for bit.
class RngStream {
 public:
  explicit RngStream(const StreamKey& key);

  std::uint64_t next_u64();
  /// Uniform in (0,1), never exactly 0 or 1.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);
  /// Beta(a, b); the a == b == 1 case short-circuits to uniform.
  double beta(double a, double b);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sau
