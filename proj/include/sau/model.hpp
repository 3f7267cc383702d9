#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sau/graph.hpp"
#include "sau/tensor.hpp"

namespace sau {

/// Encoder is a stack of affine+rectifier layers; the projection MLP has
/// optional batch normalization between its hidden affines and a unit-norm
/// output. The classifier head is a single affine map.
struct ArchConfig {
  std::size_t input_dim = 16;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> proj_hidden{64, 64};
  std::size_t proj_dim = 32;
  bool proj_batchnorm = true;
  std::size_t n_classes = 10;

  std::size_t feature_dim() const {
    return encoder_hidden.empty() ? input_dim : encoder_hidden.back();
  }
};

void validate(const ArchConfig& a);

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct OptimConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-3;
  long total_epochs = 50;
};

void validate(const OptimConfig& o);

/// All trainable parameters plus the optimizer's momentum buffers.
struct ModelState {
  ArchConfig arch;
  std::vector<NamedTensor> params;
  std::vector<Tensor> momentum;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
};

/// Deterministic fan-in initialization: weights ~ N(0, 2/fan_in), biases 0,
/// norm gains 1.
ModelState init_params(const ArchConfig& arch, std::uint64_t seed);

std::size_t parameter_count(const ArchConfig& arch);

// canonical parameter-list offsets
std::size_t encoder_param_count(const ArchConfig& arch);
std::size_t classifier_param_offset(const ArchConfig& arch);
std::size_t projection_param_offset(const ArchConfig& arch);

// plain forward passes (no gradients); x is (B, input_dim)
Tensor encode(const ModelState& state, const Tensor& x);
Tensor classify(const ModelState& state, const Tensor& h);
Tensor project(const ModelState& state, const Tensor& h);

// tape builders. Params must be registered in canonical order; the offsets
// above locate each head's slice.
std::vector<Var> register_params(Tape& t, const ModelState& state, bool trainable);
Var encoder_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var x);
Var classifier_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var h);
Var projection_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var h);

/// Builds the objective on a fresh tape with trainable params, runs
/// backward, and returns the objective value plus d(objective)/d(param) in
/// canonical order.
struct ObjectiveGrads {
  double value = 0.0;
  std::vector<Tensor> grads;
};
ObjectiveGrads compute_grad(
    const ModelState& state,
    const std::function<Var(Tape&, const std::vector<Var>&)>& objective);

/// lr0 * 0.5 * (1 + cos(pi * epoch / total)).
double cosine_lr(long epoch, long total_epochs, double lr0);

/// buffer <- momentum*buffer + grad + weight_decay*param;
/// param <- param - lr*buffer.
void sgd_step(ModelState& state, const std::vector<Tensor>& grads, double lr,
              const OptimConfig& optim);

void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace sau
