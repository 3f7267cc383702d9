#include "sau/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sau/common.hpp"
#include "sau/kernels.hpp"

namespace sau {

void validate(const Embeddings& emb) {
  if (emb.Z.rank() != 2) fail("embeddings: Z must be (M,d)");
  const std::size_t m = emb.Z.rows();
  if (emb.labels.size() != m || emb.is_synthetic.size() != m || emb.is_prototype.size() != m)
    fail("embeddings: metadata length mismatch");
  if (!(emb.tau > 0.0)) fail("embeddings: temperature must be positive");
  for (std::size_t i = 0; i < m; ++i)
    if (emb.is_prototype[i] && emb.is_synthetic[i])
      fail("embeddings: prototypes must be non-synthetic");
}

SupConMasks build_masks(const std::vector<long long>& labels, ScVariant variant) {
  const std::size_t m = labels.size();
  SupConMasks masks;
  masks.m = m;
  masks.anchors.assign(m, 0);
  masks.den = std::make_shared<std::vector<std::uint8_t>>(m * m, 0);
  masks.wpos = Tensor({m, m});

  auto is_noise = [&](std::size_t i) { return labels[i] < 0; };
  const bool drop_noise_anchor =
      variant == ScVariant::kIgnoreNoise || variant == ScVariant::kNoiseAsNegatives;
  const bool drop_noise_den = variant == ScVariant::kIgnoreNoise;

  for (std::size_t i = 0; i < m; ++i) {
    if (drop_noise_anchor && is_noise(i)) continue;
    masks.anchors[i] = 1;
    ++masks.anchor_count;

    std::size_t pos_count = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      if (drop_noise_den && is_noise(j)) continue;
      (*masks.den)[i * m + j] = 1;
      // positives: same label, and never a noise point for the dropping
      // variants (noise ids are unique per sample so they only pair with
      // their own twin view under L2)
      bool positive = labels[j] == labels[i];
      if (positive && is_noise(j) && variant != ScVariant::kNoiseAsSingletons &&
          variant != ScVariant::kSupCon)
        positive = false;
      if (positive) {
        masks.wpos.at(i, j) = 1.0;
        ++pos_count;
      }
    }
    if (pos_count == 0)
      fail("contrastive: anchor " + std::to_string(i) + " (label " +
           std::to_string(labels[i]) + ") has no positive");
    for (std::size_t j = 0; j < m; ++j)
      if (masks.wpos.at(i, j) != 0.0) masks.wpos.at(i, j) /= static_cast<double>(pos_count);
  }
  if (masks.anchor_count == 0) fail("contrastive: no anchors");
  return masks;
}

double supcon_value(const Tensor& z, const SupConMasks& masks, double tau) {
  if (!(tau > 0.0)) fail("contrastive: temperature must be positive");
  Tensor s = kern::matmul_nt(z, z);
  s *= 1.0 / tau;
  double total = 0.0;
  const std::size_t m = masks.m;
  const std::vector<std::uint8_t>& den = *masks.den;
  for (std::size_t i = 0; i < m; ++i) {
    if (!masks.anchors[i]) continue;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (den[i * m + j] && s.at(i, j) > hi) hi = s.at(i, j);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (den[i * m + j]) acc += std::exp(s.at(i, j) - hi);
    double lse = hi + std::log(acc);
    double pos_term = 0.0;
    for (std::size_t j = 0; j < m; ++j) pos_term += masks.wpos.at(i, j) * s.at(i, j);
    total += lse - pos_term;
  }
  return total;
}

Var supcon_graph(Tape& t, Var z, const SupConMasks& masks, double tau, bool mean_over_anchors) {
  Var s = t.scale(t.matmul_nt(z, z), 1.0 / tau);
  // rows without anchors never contribute; give them a self entry so the
  // row-wise log-sum-exp stays defined
  auto den = std::make_shared<std::vector<std::uint8_t>>(*masks.den);
  const std::size_t m = masks.m;
  for (std::size_t i = 0; i < m; ++i)
    if (!masks.anchors[i]) (*den)[i * m + i] = 1;
  Var lse = t.masked_logsumexp_rows(s, den);
  Tensor anchor_vec({m});
  for (std::size_t i = 0; i < m; ++i) anchor_vec[i] = masks.anchors[i] ? 1.0 : 0.0;
  Var s1 = t.dot_const(lse, std::move(anchor_vec));
  Var s2 = t.weighted_sum(s, masks.wpos);
  double norm = mean_over_anchors ? 1.0 / static_cast<double>(masks.anchor_count) : 1.0;
  return t.lincomb({s1, s2}, {norm, -norm});
}

namespace {

Embeddings require_valid(const Embeddings& emb) {
  validate(emb);
  return emb;
}

}  // namespace

double supcon_loss(const Embeddings& emb) {
  validate(emb);
  SupConMasks masks = build_masks(emb.labels, ScVariant::kSupCon);
  return supcon_value(emb.Z, masks, emb.tau);
}

Embeddings with_prototypes(const Embeddings& emb, const std::vector<PrototypeSet>& protos) {
  Embeddings out = require_valid(emb);
  const std::size_t d = emb.Z.cols();
  std::size_t extra = 0;
  for (const PrototypeSet& ps : protos) {
    if (ps.P.rank() != 2 || ps.P.cols() != d) fail("prototypes: dimension mismatch");
    if (ps.valid.size() != ps.P.rows()) fail("prototypes: validity flags mismatch");
    for (std::uint8_t v : ps.valid) extra += v ? 1 : 0;
  }
  Tensor z({emb.Z.rows() + extra, d});
  for (std::size_t i = 0; i < emb.Z.size(); ++i) z[i] = emb.Z[i];
  std::size_t r = emb.Z.rows();
  for (const PrototypeSet& ps : protos)
    for (std::size_t c = 0; c < ps.P.rows(); ++c) {
      if (!ps.valid[c]) continue;
      for (std::size_t j = 0; j < d; ++j) z.at(r, j) = ps.P.at(c, j);
      out.labels.push_back(static_cast<long long>(c));
      out.is_synthetic.push_back(0);
      out.is_prototype.push_back(1);
      ++r;
    }
  out.Z = std::move(z);
  return out;
}

namespace {

double variant_loss(const Embeddings& emb, const std::vector<PrototypeSet>& protos,
                    ScVariant variant) {
  Embeddings all = with_prototypes(emb, protos);
  SupConMasks masks = build_masks(all.labels, variant);
  return supcon_value(all.Z, masks, all.tau);
}

}  // namespace

double loss_l1(const Embeddings& emb, const std::vector<PrototypeSet>& protos) {
  return variant_loss(emb, protos, ScVariant::kIgnoreNoise);
}

double loss_l2(const Embeddings& emb, const std::vector<PrototypeSet>& protos) {
  return variant_loss(emb, protos, ScVariant::kNoiseAsSingletons);
}

double loss_l3(const Embeddings& emb, const std::vector<PrototypeSet>& protos) {
  return variant_loss(emb, protos, ScVariant::kNoiseAsNegatives);
}

double overall_loss(double l_mixup, double l_cutmix, double l_sc, double lambda, double beta,
                    double gamma) {
  if (lambda < 0.0 || beta < 0.0 || gamma < 0.0) fail("overall loss: weights must be >= 0");
  return lambda * l_mixup + beta * l_cutmix + gamma * l_sc;
}

std::vector<long long> knn_correct(const Tensor& z_syn, const Tensor& z_ref,
                                   const std::vector<long long>& y_ref, std::size_t k) {
  if (z_ref.rank() != 2 || z_ref.rows() == 0) fail("knn: empty reference set");
  if (z_syn.rank() != 2 || z_syn.cols() != z_ref.cols()) fail("knn: dimension mismatch");
  if (y_ref.size() != z_ref.rows()) fail("knn: reference labels length mismatch");
  if (k == 0) fail("knn: k must be >= 1");

  const std::size_t nr = z_ref.rows();
  const std::size_t kk = std::min(k, nr);
  std::vector<long long> out(z_syn.rows());
  std::vector<std::pair<double, std::size_t>> dist(nr);
  for (std::size_t i = 0; i < z_syn.rows(); ++i) {
    for (std::size_t r = 0; r < nr; ++r) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < z_ref.cols(); ++j) {
        double c = z_syn.at(i, j) - z_ref.at(r, j);
        d2 += c * c;
      }
      dist[r] = {d2, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(kk), dist.end());
    std::map<long long, std::size_t> votes;
    for (std::size_t t = 0; t < kk; ++t) ++votes[y_ref[dist[t].second]];
    long long best_label = kNoMajority;
    std::size_t best_count = 0;
    bool tied = false;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best_count = count;
        best_label = label;
        tied = false;
      } else if (count == best_count) {
        tied = true;
      }
    }
    out[i] = tied ? kNoMajority : best_label;
  }
  return out;
}

CorrectionResult relabel(const std::vector<long long>& y_org,
                         const std::vector<long long>& y_cor_view2,
                         const std::vector<long long>& y_cor_view3, long long next_noise_id) {
  if (y_cor_view2.size() != y_org.size() || y_cor_view3.size() != y_org.size())
    fail("relabel: corrected label lists must align with originals");
  if (next_noise_id >= 0) fail("relabel: noise ids must be negative");
  CorrectionResult res;
  res.y_new.resize(y_org.size());
  res.next_noise_id = next_noise_id;
  for (std::size_t i = 0; i < y_org.size(); ++i) {
    if (y_cor_view2[i] == y_org[i] && y_cor_view3[i] == y_org[i]) {
      res.y_new[i] = y_org[i];
    } else {
      res.y_new[i] = res.next_noise_id--;
      ++res.noise_count;
    }
  }
  return res;
}

PrototypeSet compute_prototypes(const Tensor& z_real, const std::vector<long long>& y_real,
                                std::size_t n_classes) {
  if (z_real.rank() != 2) fail("prototypes: embeddings must be (N,d)");
  if (y_real.size() != z_real.rows()) fail("prototypes: labels length mismatch");
  const std::size_t d = z_real.cols();
  PrototypeSet ps;
  ps.P = Tensor({n_classes, d});
  ps.valid.assign(n_classes, 0);
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t i = 0; i < z_real.rows(); ++i) {
    long long y = y_real[i];
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      fail("prototypes: label " + std::to_string(y) + " out of range");
    for (std::size_t j = 0; j < d; ++j) ps.P.at(static_cast<std::size_t>(y), j) += z_real.at(i, j);
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      ps.P.at(c, j) /= static_cast<double>(counts[c]);
      norm += ps.P.at(c, j) * ps.P.at(c, j);
    }
    norm = std::sqrt(norm);
    if (norm < 1e-8) {
      for (std::size_t j = 0; j < d; ++j) ps.P.at(c, j) = 0.0;
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) ps.P.at(c, j) /= norm;
    ps.valid[c] = 1;
  }
  return ps;
}

}  // namespace sau
