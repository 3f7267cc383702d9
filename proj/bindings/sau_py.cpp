#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "sau/cli.hpp"
#include "sau/config.hpp"
#include "sau/contrastive.hpp"
#include "sau/dataset.hpp"
#include "sau/mixer.hpp"
#include "sau/model.hpp"
#include "sau/trainer.hpp"

namespace py = pybind11;

namespace {

using d_array = py::array_t<double, py::array::c_style | py::array::forcecast>;

sau::Tensor tensor_from(const d_array& a) {
  sau::Shape shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<std::size_t>(i)] =
      static_cast<std::size_t>(a.shape(i));
  std::vector<double> data(a.data(), a.data() + a.size());
  return sau::Tensor::from_data(std::move(shape), std::move(data));
}

py::array_t<double> array_from(const sau::Tensor& t) {
  std::vector<py::ssize_t> shape(t.rank());
  for (std::size_t i = 0; i < t.rank(); ++i) shape[i] = static_cast<py::ssize_t>(t.dim(i));
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

sau::Embeddings embeddings_from(const d_array& z, const std::vector<long long>& labels,
                                const std::vector<bool>& is_synthetic,
                                const std::vector<bool>& is_prototype, double tau) {
  sau::Embeddings emb;
  emb.Z = tensor_from(z);
  emb.labels = labels;
  emb.is_synthetic.assign(is_synthetic.begin(), is_synthetic.end());
  emb.is_prototype.assign(is_prototype.begin(), is_prototype.end());
  emb.tau = tau;
  return emb;
}

py::dict report_to_dict(const sau::EpochReport& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["lr"] = r.lr;
  d["loss_mixup"] = r.loss_mixup;
  d["loss_cutmix"] = r.loss_cutmix;
  d["loss_sc"] = r.loss_sc;
  d["noise_count"] = r.noise_count;
  d["test_top1"] = r.test_top1;
  d["many"] = r.many;
  d["med"] = r.med;
  d["few"] = r.few;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sau, m) {
  m.doc() = "dual-branch long-tailed training engine (native core)";

  m.def(
      "long_tailed_counts",
      [](int n_classes, long n0, double imbalance_factor) {
        return sau::long_tailed_counts(sau::LtSpec{n_classes, n0, imbalance_factor, 0});
      },
      py::arg("n_classes"), py::arg("n0"), py::arg("imbalance_factor"));

  m.def("complement_counts", &sau::complement_counts, py::arg("real_counts"), py::arg("target"));

  m.def("cosine_lr", &sau::cosine_lr, py::arg("epoch"), py::arg("total_epochs"), py::arg("lr0"));

  m.def(
      "mixup",
      [](const d_array& xi, int yi, const d_array& xj, int yj, double lam) {
        sau::MixedExample me = sau::mixup(tensor_from(xi), yi, tensor_from(xj), yj, lam);
        return py::make_tuple(array_from(me.x), me.y_i, me.y_j, me.lam);
      },
      py::arg("x_i"), py::arg("y_i"), py::arg("x_j"), py::arg("y_j"), py::arg("lam"));

  m.def(
      "cutmix",
      [](const d_array& xi, int yi, const d_array& xj, int yj, double lam, std::uint64_t seed) {
        sau::RngStream rng(sau::StreamKey{seed, 0, 0, 0, sau::Draw::kCutmixBox});
        sau::Tensor ti = tensor_from(xi);
        std::size_t w = ti.rank() == 1 ? ti.dim(0) : ti.dim(ti.rank() - 1);
        std::size_t h = ti.rank() >= 2 ? ti.dim(ti.rank() - 2) : 1;
        sau::CutBox box = sau::cutmix_box(w, h, lam, rng);
        sau::MixedExample me = sau::cutmix(ti, yi, tensor_from(xj), yj, box);
        return py::make_tuple(array_from(me.x), me.y_i, me.y_j, me.lam);
      },
      py::arg("x_i"), py::arg("y_i"), py::arg("x_j"), py::arg("y_j"), py::arg("lam"),
      py::arg("seed") = 0);

  m.def(
      "mixed_ce_loss",
      [](const d_array& logits, int yi, int yj, double lam) {
        return sau::mixed_ce_loss(tensor_from(logits), yi, yj, lam);
      },
      py::arg("logits"), py::arg("y_i"), py::arg("y_j"), py::arg("lam"));

  m.def(
      "supcon_loss",
      [](const d_array& z, const std::vector<long long>& labels, double tau) {
        std::vector<bool> flags(labels.size(), false);
        return sau::supcon_loss(embeddings_from(z, labels, flags, flags, tau));
      },
      py::arg("z"), py::arg("labels"), py::arg("tau") = 0.1);

  m.def(
      "contrastive_loss",
      [](const d_array& z, const std::vector<long long>& labels,
         const std::vector<bool>& is_synthetic, const std::vector<bool>& is_prototype,
         double tau, const std::string& variant, const d_array& prototypes,
         const std::vector<bool>& proto_valid) {
        sau::Embeddings emb = embeddings_from(z, labels, is_synthetic, is_prototype, tau);
        sau::PrototypeSet ps;
        ps.P = tensor_from(prototypes);
        ps.valid.assign(proto_valid.begin(), proto_valid.end());
        std::vector<sau::PrototypeSet> protos{std::move(ps)};
        if (variant == "L1") return sau::loss_l1(emb, protos);
        if (variant == "L2") return sau::loss_l2(emb, protos);
        if (variant == "L3") return sau::loss_l3(emb, protos);
        throw sau::Error("unknown variant '" + variant + "'");
      },
      py::arg("z"), py::arg("labels"), py::arg("is_synthetic"), py::arg("is_prototype"),
      py::arg("tau"), py::arg("variant"), py::arg("prototypes"), py::arg("proto_valid"));

  m.def(
      "knn_correct",
      [](const d_array& z_syn, const d_array& z_ref, const std::vector<long long>& y_ref,
         std::size_t k) { return sau::knn_correct(tensor_from(z_syn), tensor_from(z_ref), y_ref, k); },
      py::arg("z_syn"), py::arg("z_ref"), py::arg("y_ref"), py::arg("k"));

  m.def(
      "relabel",
      [](const std::vector<long long>& y_org, const std::vector<long long>& c2,
         const std::vector<long long>& c3, long long next_noise_id) {
        sau::CorrectionResult r = sau::relabel(y_org, c2, c3, next_noise_id);
        return py::make_tuple(r.y_new, r.noise_count, r.next_noise_id);
      },
      py::arg("y_org"), py::arg("y_cor_view2"), py::arg("y_cor_view3"),
      py::arg("next_noise_id") = -1);

  m.def(
      "compute_prototypes",
      [](const d_array& z, const std::vector<long long>& y, std::size_t n_classes) {
        sau::PrototypeSet ps = sau::compute_prototypes(tensor_from(z), y, n_classes);
        std::vector<bool> valid(ps.valid.begin(), ps.valid.end());
        return py::make_tuple(array_from(ps.P), valid);
      },
      py::arg("z"), py::arg("labels"), py::arg("n_classes"));

  m.def("no_majority_sentinel", [] { return sau::kNoMajority; });

  m.def(
      "fit",
      [](const std::string& config_json) {
        sau::RunConfig rc = sau::parse_run_config(nlohmann::json::parse(config_json));
        sau::FitResult res = sau::fit(rc.train);
        py::list reports;
        for (const sau::EpochReport& r : res.reports) reports.append(report_to_dict(r));
        return reports;
      },
      py::arg("config_json"), "train on the toy benchmark described by a config JSON string");

  m.def("default_config", [] { return sau::run_config_to_json(sau::default_run_config()).dump(2); });
}
