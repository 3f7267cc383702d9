#pragma once

#include <cstdint>
#include <vector>

#include "sau/tensor.hpp"

namespace sau {

/// One training or test record. `quality` is the generator's class-agreement
/// score in [0,1]; real data carries 1.0.
struct Sample {
  Tensor features;
  int label = 0;
  bool is_synthetic = false;
  double quality = 1.0;
  std::uint64_t id = 0;
};

void validate_sample(const Sample& s, int n_classes);

std::vector<long> class_counts(const std::vector<Sample>& samples, int n_classes);

}  // namespace sau
