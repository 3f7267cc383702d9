#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "sau/kernels.hpp"
#include "sau/tensor.hpp"

namespace sau {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over tensor ops. A tape is built fresh per objective
/// evaluation; nodes are pushed in topological order so backward is a single
/// reverse sweep. Inputs are constants; gradients flow only from params.
/// Every op checks its output for non-finite values and reports the
/// offending primitive by name.
class Tape {
 public:
  Var input(Tensor value);
  Var param(Tensor value);

  const Tensor& value(Var v) const;
  /// Accumulated gradient (zeros if the node was never touched).
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  Var add_bias(Var x, Var b);
  Var scale(Var a, double c);
  Var relu(Var x);
  Var batchnorm(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var l2_normalize_rows(Var x, double min_norm = 1e-12);
  Var concat_rows(const std::vector<Var>& parts);

  /// Mean over rows of lam*CE(row, y_i) + (1-lam)*CE(row, y_j).
  Var mixed_ce_mean(Var logits, std::vector<int> y_i, std::vector<int> y_j,
                    std::vector<double> lam);
  /// Row-wise log-sum-exp restricted to mask entries (row-major, 0/1).
  Var masked_logsumexp_rows(Var s, std::shared_ptr<const std::vector<std::uint8_t>> mask);
  /// sum_i v[i]*w[i] as a scalar node.
  Var dot_const(Var v, Tensor w);
  /// sum of elementwise product with a constant weight tensor.
  Var weighted_sum(Var m, Tensor w);
  /// Linear combination of scalar nodes.
  Var lincomb(const std::vector<Var>& xs, const std::vector<double>& coeffs);
  /// 0.5 * sum(x^2); gradient is x.
  Var half_sq_sum(Var x);

  /// Seeds d(root)=1 and runs the reverse sweep. Root must be scalar.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  /// Smallest |pre-activation| seen by any relu on this tape. Finite
  /// difference checks use it to reject instances sitting on a kink.
  double min_relu_margin() const { return min_relu_margin_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    const char* op = "";
    std::function<void(Tape&)> back;
  };

  std::vector<Node> nodes_;
  double min_relu_margin_ = std::numeric_limits<double>::infinity();

  Var push(Tensor value, bool needs_grad, const char* op);
  void set_back(Var v, std::function<void(Tape&)> fn);
  void accumulate(Var v, const Tensor& g);
  const Node& node(Var v) const;

  friend struct TapeAccess;
};

}  // namespace sau
