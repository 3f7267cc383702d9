#include "sau/graph.hpp"

#include <cmath>
#include <limits>

#include "sau/common.hpp"

namespace sau {

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    fail("tape: invalid node handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Tensor value, bool needs_grad, const char* op) {
  if (!value.all_finite()) fail(std::string("tape: non-finite output of ") + op);
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::set_back(Var v, std::function<void(Tape&)> fn) {
  nodes_[static_cast<std::size_t>(v.id)].back = std::move(fn);
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.value.same_shape(g)) fail("tape: gradient shape mismatch");
  if (n.grad.empty())
    n.grad = g;
  else
    n.grad += g;
}

Var Tape::input(Tensor value) { return push(std::move(value), false, "input"); }

Var Tape::param(Tensor value) { return push(std::move(value), true, "param"); }

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Var Tape::matmul(Var a, Var b) {
  Tensor c = kern::matmul(value(a), value(b));
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(c), rg, "matmul");
  if (rg)
    set_back(out, [out, a, b](Tape& t) {
      const Tensor& g = t.node(out).grad;
      if (t.requires_grad(a)) t.accumulate(a, kern::matmul_nt(g, t.value(b)));
      if (t.requires_grad(b)) t.accumulate(b, kern::matmul_tn(t.value(a), g));
    });
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  Tensor c = kern::matmul_nt(value(a), value(b));
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(c), rg, "matmul_nt");
  if (rg)
    set_back(out, [out, a, b](Tape& t) {
      const Tensor& g = t.node(out).grad;
      if (t.requires_grad(a)) t.accumulate(a, kern::matmul(g, t.value(b)));
      if (t.requires_grad(b)) t.accumulate(b, kern::matmul_tn(g, t.value(a)));
    });
  return out;
}

Var Tape::add(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) fail("tape add: shape mismatch");
  Tensor c = va;
  c += vb;
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(c), rg, "add");
  if (rg)
    set_back(out, [out, a, b](Tape& t) {
      const Tensor& g = t.node(out).grad;
      if (t.requires_grad(a)) t.accumulate(a, g);
      if (t.requires_grad(b)) t.accumulate(b, g);
    });
  return out;
}

Var Tape::add_bias(Var x, Var b) {
  Tensor c = kern::add_bias(value(x), value(b));
  bool rg = requires_grad(x) || requires_grad(b);
  Var out = push(std::move(c), rg, "add_bias");
  if (rg)
    set_back(out, [out, x, b](Tape& t) {
      const Tensor& g = t.node(out).grad;
      if (t.requires_grad(x)) t.accumulate(x, g);
      if (t.requires_grad(b)) t.accumulate(b, kern::col_sums(g));
    });
  return out;
}

Var Tape::scale(Var a, double c) {
  Tensor v = value(a);
  v *= c;
  bool rg = requires_grad(a);
  Var out = push(std::move(v), rg, "scale");
  if (rg)
    set_back(out, [out, a, c](Tape& t) {
      Tensor g = t.node(out).grad;
      g *= c;
      t.accumulate(a, g);
    });
  return out;
}

Var Tape::relu(Var x) {
  {
    const Tensor& vx = value(x);
    for (std::size_t i = 0; i < vx.size(); ++i)
      min_relu_margin_ = std::min(min_relu_margin_, std::abs(vx[i]));
  }
  Tensor y = kern::relu(value(x));
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, "relu");
  if (rg)
    set_back(out, [out, x](Tape& t) {
      const Tensor& g = t.node(out).grad;
      const Tensor& vx = t.value(x);
      Tensor dx(vx.shape());
      for (std::size_t i = 0; i < vx.size(); ++i) dx[i] = vx[i] > 0.0 ? g[i] : 0.0;
      t.accumulate(x, dx);
    });
  return out;
}

Var Tape::batchnorm(Var x, Var gamma, Var beta, double eps) {
  auto cache = std::make_shared<kern::BatchNormCache>();
  Tensor y = kern::batchnorm(value(x), value(gamma), value(beta), eps, cache.get());
  bool rg = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
  Var out = push(std::move(y), rg, "batchnorm");
  if (rg)
    set_back(out, [out, x, gamma, beta, cache](Tape& t) {
      const Tensor& g = t.node(out).grad;
      const Tensor& xhat = cache->xhat;
      const Tensor& inv_std = cache->inv_std;
      const std::size_t b = xhat.rows(), d = xhat.cols();
      const Tensor& vgamma = t.value(gamma);

      if (t.requires_grad(gamma)) {
        Tensor dgamma({d});
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < d; ++j) dgamma[j] += g.at(i, j) * xhat.at(i, j);
        t.accumulate(gamma, dgamma);
      }
      if (t.requires_grad(beta)) t.accumulate(beta, kern::col_sums(g));
      if (t.requires_grad(x)) {
        Tensor sum_dxhat({d}), sum_dxhat_xhat({d});
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            double dxh = g.at(i, j) * vgamma[j];
            sum_dxhat[j] += dxh;
            sum_dxhat_xhat[j] += dxh * xhat.at(i, j);
          }
        Tensor dx({b, d});
        const double invb = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            double dxh = g.at(i, j) * vgamma[j];
            dx.at(i, j) = inv_std[j] * (dxh - invb * sum_dxhat[j] -
                                        xhat.at(i, j) * invb * sum_dxhat_xhat[j]);
          }
        t.accumulate(x, dx);
      }
    });
  return out;
}

Var Tape::l2_normalize_rows(Var x, double min_norm) {
  auto norms = std::make_shared<std::vector<double>>();
  Tensor y = kern::l2_normalize_rows(value(x), min_norm, norms.get());
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, "l2_normalize_rows");
  if (rg)
    set_back(out, [out, x, norms](Tape& t) {
      const Tensor& g = t.node(out).grad;
      const Tensor& y = t.value(out);
      Tensor dx(y.shape());
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += y.at(i, j) * g.at(i, j);
        double r = (*norms)[i];
        for (std::size_t j = 0; j < y.cols(); ++j)
          dx.at(i, j) = (g.at(i, j) - y.at(i, j) * dot) / r;
      }
      t.accumulate(x, dx);
    });
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) fail("tape concat: no parts");
  std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    if (v.rank() != 2 || v.cols() != cols) fail("tape concat: parts must share column count");
    rows += v.rows();
  }
  Tensor c({rows, cols});
  std::size_t r = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    for (std::size_t i = 0; i < v.size(); ++i) c[r * cols + i] = v[i];
    r += v.rows();
  }
  bool rg = false;
  for (Var p : parts) rg = rg || requires_grad(p);
  Var out = push(std::move(c), rg, "concat_rows");
  if (rg)
    set_back(out, [out, parts](Tape& t) {
      const Tensor& g = t.node(out).grad;
      std::size_t cols = g.cols();
      std::size_t r = 0;
      for (Var p : parts) {
        const Tensor& v = t.value(p);
        if (t.requires_grad(p)) {
          Tensor slice({v.rows(), cols});
          for (std::size_t i = 0; i < slice.size(); ++i) slice[i] = g[r * cols + i];
          t.accumulate(p, slice);
        }
        r += v.rows();
      }
    });
  return out;
}

Var Tape::mixed_ce_mean(Var logits, std::vector<int> y_i, std::vector<int> y_j,
                        std::vector<double> lam) {
  const Tensor& l = value(logits);
  if (l.rank() != 2) fail("mixed_ce_mean: logits must be (B,K)");
  const std::size_t b = l.rows(), k = l.cols();
  if (y_i.size() != b || y_j.size() != b || lam.size() != b)
    fail("mixed_ce_mean: label arrays must match batch size");
  for (std::size_t i = 0; i < b; ++i) {
    if (y_i[i] < 0 || static_cast<std::size_t>(y_i[i]) >= k || y_j[i] < 0 ||
        static_cast<std::size_t>(y_j[i]) >= k)
      fail("mixed_ce_mean: label out of range");
    if (lam[i] < 0.0 || lam[i] > 1.0) fail("mixed_ce_mean: lam outside [0,1]");
  }
  auto soft = std::make_shared<Tensor>(kern::softmax_rows(l));
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) hi = std::max(hi, l.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(l.at(i, j) - hi);
    double lse = hi + std::log(z);
    total += lam[i] * (lse - l.at(i, static_cast<std::size_t>(y_i[i]))) +
             (1.0 - lam[i]) * (lse - l.at(i, static_cast<std::size_t>(y_j[i])));
  }
  Tensor outv({1});
  outv[0] = total / static_cast<double>(b);
  bool rg = requires_grad(logits);
  Var out = push(std::move(outv), rg, "mixed_ce_mean");
  if (rg)
    set_back(out, [out, logits, soft, yi = std::move(y_i), yj = std::move(y_j),
                   lm = std::move(lam)](Tape& t) {
      double g = t.node(out).grad[0];
      const Tensor& p = *soft;
      const std::size_t b = p.rows(), k = p.cols();
      Tensor dl({b, k});
      const double scale = g / static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < k; ++j) dl.at(i, j) = p.at(i, j) * scale;
        dl.at(i, static_cast<std::size_t>(yi[i])) -= lm[i] * scale;
        dl.at(i, static_cast<std::size_t>(yj[i])) -= (1.0 - lm[i]) * scale;
      }
      t.accumulate(logits, dl);
    });
  return out;
}

Var Tape::masked_logsumexp_rows(Var s, std::shared_ptr<const std::vector<std::uint8_t>> mask) {
  Tensor lse = kern::masked_logsumexp_rows(value(s), *mask);
  bool rg = requires_grad(s);
  Var out = push(std::move(lse), rg, "masked_logsumexp_rows");
  if (rg)
    set_back(out, [out, s, mask](Tape& t) {
      const Tensor& g = t.node(out).grad;
      const Tensor& vs = t.value(s);
      const Tensor& l = t.value(out);
      const std::size_t m = vs.rows(), n = vs.cols();
      Tensor ds({m, n});
      for (std::size_t i = 0; i < m; ++i) {
        if (g[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j)
          if ((*mask)[i * n + j]) ds.at(i, j) = g[i] * std::exp(vs.at(i, j) - l[i]);
      }
      t.accumulate(s, ds);
    });
  return out;
}

Var Tape::dot_const(Var v, Tensor w) {
  const Tensor& x = value(v);
  if (x.size() != w.size()) fail("dot_const: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  Tensor outv({1});
  outv[0] = s;
  bool rg = requires_grad(v);
  Var out = push(std::move(outv), rg, "dot_const");
  if (rg)
    set_back(out, [out, v, w = std::move(w)](Tape& t) {
      double g = t.node(out).grad[0];
      Tensor dv(t.value(v).shape());
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = g * w[i];
      t.accumulate(v, dv);
    });
  return out;
}

Var Tape::weighted_sum(Var m, Tensor w) {
  const Tensor& x = value(m);
  if (!x.same_shape(w)) fail("weighted_sum: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  Tensor outv({1});
  outv[0] = s;
  bool rg = requires_grad(m);
  Var out = push(std::move(outv), rg, "weighted_sum");
  if (rg)
    set_back(out, [out, m, w = std::move(w)](Tape& t) {
      double g = t.node(out).grad[0];
      Tensor dm(w.shape());
      for (std::size_t i = 0; i < dm.size(); ++i) dm[i] = g * w[i];
      t.accumulate(m, dm);
    });
  return out;
}

Var Tape::lincomb(const std::vector<Var>& xs, const std::vector<double>& coeffs) {
  if (xs.size() != coeffs.size() || xs.empty()) fail("lincomb: arity mismatch");
  double s = 0.0;
  bool rg = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor& v = value(xs[i]);
    if (v.size() != 1) fail("lincomb: operands must be scalars");
    s += coeffs[i] * v[0];
    rg = rg || requires_grad(xs[i]);
  }
  Tensor outv({1});
  outv[0] = s;
  Var out = push(std::move(outv), rg, "lincomb");
  if (rg)
    set_back(out, [out, xs, coeffs](Tape& t) {
      double g = t.node(out).grad[0];
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (t.requires_grad(xs[i])) {
          Tensor d({1});
          d[0] = g * coeffs[i];
          t.accumulate(xs[i], d);
        }
    });
  return out;
}

Var Tape::half_sq_sum(Var x) {
  const Tensor& v = value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i];
  Tensor outv({1});
  outv[0] = 0.5 * s;
  bool rg = requires_grad(x);
  Var out = push(std::move(outv), rg, "half_sq_sum");
  if (rg)
    set_back(out, [out, x](Tape& t) {
      double g = t.node(out).grad[0];
      Tensor d = t.value(x);
      d *= g;
      t.accumulate(x, d);
    });
  return out;
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.value.size() != 1) fail("tape backward: root must be scalar");
  if (!r.needs_grad) return;
  Tensor seed({1});
  seed[0] = 1.0;
  nodes_[static_cast<std::size_t>(root.id)].grad = seed;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back && !n.grad.empty()) {
      if (!n.grad.all_finite()) fail(std::string("tape: non-finite gradient at ") + n.op);
      n.back(*this);
    }
  }
}

}  // namespace sau
