#pragma once

#include <cstdint>
#include <vector>

#include "sau/tensor.hpp"

namespace sau::kern {

// C = A(m,k) * B(k,n)
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A(m,k) * B(n,k)^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// C = A(m,k)^T * B(m,n)
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// rows of x plus bias b
Tensor add_bias(const Tensor& x, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor col_sums(const Tensor& x);

struct BatchNormCache {
  Tensor xhat;     // (B, D)
  Tensor inv_std;  // (D,)
};

/// Batch-statistics normalization with affine gain/bias; biased variance.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                 BatchNormCache* cache);

/// Row-wise L2 normalization. A row with norm below `min_norm` is an error.
Tensor l2_normalize_rows(const Tensor& x, double min_norm, std::vector<double>* norms);

/// Row-wise log(sum_k mask(i,k) * exp(s(i,k))). Every row must have at least
/// one active entry. Max-shifted for stability.
Tensor masked_logsumexp_rows(const Tensor& s, const std::vector<std::uint8_t>& mask);

Tensor softmax_rows(const Tensor& logits);

}  // namespace sau::kern
