#include "sau/kernels.hpp"

#include <cmath>
#include <limits>

namespace sau::kern {

namespace {
void require_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2) fail(std::string(who) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) fail("matmul: inner dimension mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) fail("matmul_nt: inner dimension mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  if (a.rows() != b.rows()) fail("matmul_tn: inner dimension mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({k, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    const double* bi = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
  return c;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  require_rank2(x, "add_bias");
  if (b.size() != x.cols()) fail("add_bias: bias length mismatch");
  Tensor y = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y.at(i, j) += b[j];
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0.0) y[i] = 0.0;
  return y;
}

Tensor col_sums(const Tensor& x) {
  require_rank2(x, "col_sums");
  Tensor s({x.cols()});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) s[j] += x.at(i, j);
  return s;
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                 BatchNormCache* cache) {
  require_rank2(x, "batchnorm");
  const std::size_t b = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d) fail("batchnorm: gain/bias length mismatch");
  Tensor mean({d}), var({d});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(i, j);
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double c = x.at(i, j) - mean[j];
      var[j] += c * c;
    }
  Tensor inv_std({d});
  for (std::size_t j = 0; j < d; ++j)
    inv_std[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(b) + eps);
  Tensor xhat({b, d}), y({b, d});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double h = (x.at(i, j) - mean[j]) * inv_std[j];
      xhat.at(i, j) = h;
      y.at(i, j) = gamma[j] * h + beta[j];
    }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor l2_normalize_rows(const Tensor& x, double min_norm, std::vector<double>* norms) {
  require_rank2(x, "l2_normalize_rows");
  Tensor y = x;
  if (norms) norms->assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x.at(i, j) * x.at(i, j);
    double r = std::sqrt(s);
    if (r < min_norm)
      fail("l2_normalize_rows: degenerate embedding (row " + std::to_string(i) + " norm " +
           std::to_string(r) + ")");
    if (norms) (*norms)[i] = r;
    for (std::size_t j = 0; j < x.cols(); ++j) y.at(i, j) /= r;
  }
  return y;
}

Tensor masked_logsumexp_rows(const Tensor& s, const std::vector<std::uint8_t>& mask) {
  require_rank2(s, "masked_logsumexp_rows");
  const std::size_t m = s.rows(), n = s.cols();
  if (mask.size() != m * n) fail("masked_logsumexp_rows: mask size mismatch");
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j] && s.at(i, j) > hi) hi = s.at(i, j);
    if (!std::isfinite(hi))
      fail("masked_logsumexp_rows: row " + std::to_string(i) + " has no active entries");
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) acc += std::exp(s.at(i, j) - hi);
    out[i] = hi + std::log(acc);
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  require_rank2(logits, "softmax_rows");
  Tensor p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.cols(); ++j) hi = std::max(hi, p.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      p.at(i, j) = std::exp(p.at(i, j) - hi);
      z += p.at(i, j);
    }
    for (std::size_t j = 0; j < p.cols(); ++j) p.at(i, j) /= z;
  }
  return p;
}

}  // namespace sau::kern
