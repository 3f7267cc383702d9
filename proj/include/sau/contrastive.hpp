#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "sau/graph.hpp"
#include "sau/tensor.hpp"

namespace sau {

/// Multiview batch in the contrastive space. Labels >= 0 are class ids;
/// labels < 0 mark noise points, one unique id per sample shared by its two
/// views. Rows of Z must be unit length.
struct Embeddings {
  Tensor Z;  // (M, d)
  std::vector<long long> labels;
  std::vector<std::uint8_t> is_synthetic;
  std::vector<std::uint8_t> is_prototype;
  double tau = 0.1;
};

void validate(const Embeddings& emb);

/// Unit-norm per-class means of real embeddings. A class with no samples or
/// a vanishing mean is flagged invalid and skipped downstream.
struct PrototypeSet {
  Tensor P;  // (n_classes, d)
  std::vector<std::uint8_t> valid;
};

struct CorrectionResult {
  std::vector<long long> y_new;
  std::size_t noise_count = 0;
  long long next_noise_id = -1;
};

/// Vote outcome when no label reaches a strict plurality.
constexpr long long kNoMajority = std::numeric_limits<long long>::min();

enum class ScVariant {
  kSupCon,            // all points, plain label positives
  kIgnoreNoise,       // L1: noise dropped from anchors, positives, denominator
  kNoiseAsSingletons, // L2: noise kept as singleton classes everywhere
  kNoiseAsNegatives,  // L3: noise dropped from anchors/positives, kept as negatives
};

/// Index sets of one contrastive objective, in mask form over an (M, M)
/// similarity matrix. wpos(i,j) = [j positive for anchor i] / |P(i)|.
struct SupConMasks {
  std::size_t m = 0;
  std::vector<std::uint8_t> anchors;            // (M)
  std::shared_ptr<std::vector<std::uint8_t>> den;  // (M*M)
  Tensor wpos;                                  // (M, M)
  std::size_t anchor_count = 0;
};

SupConMasks build_masks(const std::vector<long long>& labels, ScVariant variant);

/// Forward value of the masked objective: sum over anchors of
/// -(1/|P(i)|) sum_j log( exp(s_ij) / sum_k in den exp(s_ik) ), s = Z Z^T / tau.
double supcon_value(const Tensor& z, const SupConMasks& masks, double tau);

/// Tape version of the same objective; divides by the anchor count when
/// mean_over_anchors is set.
Var supcon_graph(Tape& t, Var z, const SupConMasks& masks, double tau, bool mean_over_anchors);

/// Plain supervised contrastive loss over the given set (no prototypes
/// appended).
double supcon_loss(const Embeddings& emb);

/// Appends the valid rows of each prototype set as non-synthetic points
/// labeled by class.
Embeddings with_prototypes(const Embeddings& emb, const std::vector<PrototypeSet>& protos);

double loss_l1(const Embeddings& emb, const std::vector<PrototypeSet>& protos);
double loss_l2(const Embeddings& emb, const std::vector<PrototypeSet>& protos);
double loss_l3(const Embeddings& emb, const std::vector<PrototypeSet>& protos);

double overall_loss(double l_mixup, double l_cutmix, double l_sc, double lambda, double beta,
                    double gamma);

/// Majority label among the min(k, |ref|) nearest reference rows (Euclidean
/// on the unit sphere); tied pluralities return kNoMajority.
std::vector<long long> knn_correct(const Tensor& z_syn, const Tensor& z_ref,
                                   const std::vector<long long>& y_ref, std::size_t k);

/// Keeps y_org[i] iff both views' corrected labels agree with it; otherwise
/// assigns the next unique negative noise id (same id for both views).
CorrectionResult relabel(const std::vector<long long>& y_org,
                         const std::vector<long long>& y_cor_view2,
                         const std::vector<long long>& y_cor_view3, long long next_noise_id);

PrototypeSet compute_prototypes(const Tensor& z_real, const std::vector<long long>& y_real,
                                std::size_t n_classes);

}  // namespace sau
