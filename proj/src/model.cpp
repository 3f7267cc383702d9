#include "sau/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sau/common.hpp"
#include "sau/io.hpp"
#include "sau/rng.hpp"

namespace sau {

void validate(const ArchConfig& a) {
  if (a.input_dim < 1) fail("arch: input_dim must be >= 1");
  if (a.proj_dim < 1) fail("arch: proj_dim must be >= 1");
  if (a.n_classes < 1) fail("arch: n_classes must be >= 1");
  for (std::size_t h : a.encoder_hidden)
    if (h < 1) fail("arch: encoder hidden dims must be >= 1");
  for (std::size_t h : a.proj_hidden)
    if (h < 1) fail("arch: projection hidden dims must be >= 1");
}

void validate(const OptimConfig& o) {
  if (!(o.lr0 > 0.0)) fail("optim: lr0 must be positive");
  if (o.momentum < 0.0 || o.momentum >= 1.0) fail("optim: momentum outside [0,1)");
  if (o.weight_decay < 0.0) fail("optim: weight decay must be >= 0");
  if (o.total_epochs < 1) fail("optim: total_epochs must be >= 1");
}

std::size_t encoder_param_count(const ArchConfig& arch) { return 2 * arch.encoder_hidden.size(); }

std::size_t classifier_param_offset(const ArchConfig& arch) { return encoder_param_count(arch); }

std::size_t projection_param_offset(const ArchConfig& arch) {
  return encoder_param_count(arch) + 2;
}

namespace {

/// Appends (name, in, out) affine parameter entries in canonical order.
void describe_params(const ArchConfig& a,
                     const std::function<void(const std::string&, Shape, double)>& emit) {
  std::size_t in = a.input_dim;
  for (std::size_t l = 0; l < a.encoder_hidden.size(); ++l) {
    std::size_t out = a.encoder_hidden[l];
    emit("encoder." + std::to_string(l) + ".weight", {in, out}, std::sqrt(2.0 / static_cast<double>(in)));
    emit("encoder." + std::to_string(l) + ".bias", {out}, 0.0);
    in = out;
  }
  std::size_t dh = a.feature_dim();
  emit("classifier.weight", {dh, a.n_classes}, std::sqrt(2.0 / static_cast<double>(dh)));
  emit("classifier.bias", {a.n_classes}, 0.0);
  in = dh;
  for (std::size_t l = 0; l < a.proj_hidden.size(); ++l) {
    std::size_t out = a.proj_hidden[l];
    emit("projection." + std::to_string(l) + ".weight", {in, out},
         std::sqrt(2.0 / static_cast<double>(in)));
    emit("projection." + std::to_string(l) + ".bias", {out}, 0.0);
    if (a.proj_batchnorm) {
      emit("projection." + std::to_string(l) + ".bn_gain", {out}, -1.0);
      emit("projection." + std::to_string(l) + ".bn_bias", {out}, 0.0);
    }
    in = out;
  }
  emit("projection.out.weight", {in, a.proj_dim}, std::sqrt(2.0 / static_cast<double>(in)));
  emit("projection.out.bias", {a.proj_dim}, 0.0);
}

}  // namespace

std::size_t parameter_count(const ArchConfig& arch) {
  std::size_t total = 0;
  describe_params(arch, [&](const std::string&, Shape s, double) { total += numel(s); });
  return total;
}

ModelState init_params(const ArchConfig& arch, std::uint64_t seed) {
  validate(arch);
  ModelState state;
  state.arch = arch;
  std::size_t index = 0;
  describe_params(arch, [&](const std::string& name, Shape shape, double stddev) {
    Tensor t(shape);
    if (stddev > 0.0) {
      RngStream rng(StreamKey{seed, 0, 0, index, Draw::kParamInit});
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
    } else if (stddev < 0.0) {
      t.fill(1.0);  // norm gains
    }
    state.params.push_back({name, std::move(t)});
    state.momentum.emplace_back(shape);
    ++index;
  });
  return state;
}

std::vector<Var> register_params(Tape& t, const ModelState& state, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(state.params.size());
  for (const NamedTensor& p : state.params)
    vars.push_back(trainable ? t.param(p.value) : t.input(p.value));
  return vars;
}

Var encoder_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var x) {
  Var h = x;
  std::size_t cur = 0;
  for (std::size_t l = 0; l < arch.encoder_hidden.size(); ++l) {
    Var w = params[cur++];
    Var b = params[cur++];
    h = t.relu(t.add_bias(t.matmul(h, w), b));
  }
  return h;
}

Var classifier_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var h) {
  std::size_t cur = classifier_param_offset(arch);
  Var w = params[cur];
  Var b = params[cur + 1];
  return t.add_bias(t.matmul(h, w), b);
}

Var projection_graph(Tape& t, const ArchConfig& arch, const std::vector<Var>& params, Var h) {
  std::size_t cur = projection_param_offset(arch);
  Var z = h;
  for (std::size_t l = 0; l < arch.proj_hidden.size(); ++l) {
    Var w = params[cur++];
    Var b = params[cur++];
    z = t.add_bias(t.matmul(z, w), b);
    if (arch.proj_batchnorm) {
      Var gain = params[cur++];
      Var bias = params[cur++];
      z = t.batchnorm(z, gain, bias);
    }
    z = t.relu(z);
  }
  Var w = params[cur++];
  Var b = params[cur++];
  z = t.add_bias(t.matmul(z, w), b);
  return t.l2_normalize_rows(z);
}

namespace {

Tensor run_head(const ModelState& state, const Tensor& x,
                Var (*head)(Tape&, const ArchConfig&, const std::vector<Var>&, Var)) {
  Tape t;
  std::vector<Var> params = register_params(t, state, false);
  Var in = t.input(x);
  Var out = head(t, state.arch, params, in);
  return t.value(out);
}

}  // namespace

Tensor encode(const ModelState& state, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != state.arch.input_dim)
    fail("encode: expected (B," + std::to_string(state.arch.input_dim) + ") input, got " +
         shape_str(x.shape()));
  return run_head(state, x, &encoder_graph);
}

Tensor classify(const ModelState& state, const Tensor& h) {
  if (h.rank() != 2 || h.cols() != state.arch.feature_dim())
    fail("classify: feature width mismatch");
  return run_head(state, h, &classifier_graph);
}

Tensor project(const ModelState& state, const Tensor& h) {
  if (h.rank() != 2 || h.cols() != state.arch.feature_dim())
    fail("project: feature width mismatch");
  return run_head(state, h, &projection_graph);
}

ObjectiveGrads compute_grad(
    const ModelState& state,
    const std::function<Var(Tape&, const std::vector<Var>&)>& objective) {
  Tape t;
  std::vector<Var> params = register_params(t, state, true);
  Var root = objective(t, params);
  if (t.value(root).size() != 1) fail("grad: objective must be scalar");
  t.backward(root);
  ObjectiveGrads out;
  out.value = t.value(root)[0];
  out.grads.reserve(params.size());
  for (Var p : params) out.grads.push_back(t.grad(p));
  return out;
}

double cosine_lr(long epoch, long total_epochs, double lr0) {
  if (total_epochs < 1) fail("cosine_lr: total_epochs must be >= 1");
  if (epoch < 0 || epoch > total_epochs) fail("cosine_lr: epoch outside [0,total]");
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                     static_cast<double>(total_epochs)));
}

void sgd_step(ModelState& state, const std::vector<Tensor>& grads, double lr,
              const OptimConfig& optim) {
  if (grads.size() != state.params.size()) fail("sgd: gradient list size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Tensor& p = state.params[i].value;
    Tensor& buf = state.momentum[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g) || !p.same_shape(buf)) fail("sgd: shape mismatch at " + state.params[i].name);
    for (std::size_t k = 0; k < p.size(); ++k) {
      buf[k] = optim.momentum * buf[k] + g[k] + optim.weight_decay * p[k];
      p[k] -= lr * buf[k];
      if (!std::isfinite(p[k])) fail("sgd: non-finite update at " + state.params[i].name);
    }
  }
  ++state.step;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("checkpoint: cannot open " + path.string() + " for writing");
  nlohmann::json header;
  header["format"] = "sau-checkpoint";
  header["version"] = 1;
  header["arch"] = {{"input_dim", state.arch.input_dim},
                    {"encoder_hidden", state.arch.encoder_hidden},
                    {"proj_hidden", state.arch.proj_hidden},
                    {"proj_dim", state.arch.proj_dim},
                    {"proj_batchnorm", state.arch.proj_batchnorm},
                    {"n_classes", state.arch.n_classes}};
  header["step"] = state.step;
  header["epoch"] = state.epoch;
  nlohmann::json plist = nlohmann::json::array();
  for (const NamedTensor& p : state.params)
    plist.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  header["params"] = plist;
  os << header.dump() << '\n';
  for (const NamedTensor& p : state.params) write_tensor_blob(os, p.value, DType::kF64);
  for (const Tensor& m : state.momentum) write_tensor_blob(os, m, DType::kF64);
  if (!os) fail("checkpoint: write failed");
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) fail("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.value("format", "") != "sau-checkpoint") fail("checkpoint: unrecognized format");

  ArchConfig arch;
  const auto& aj = header.at("arch");
  arch.input_dim = aj.at("input_dim").get<std::size_t>();
  arch.encoder_hidden = aj.at("encoder_hidden").get<std::vector<std::size_t>>();
  arch.proj_hidden = aj.at("proj_hidden").get<std::vector<std::size_t>>();
  arch.proj_dim = aj.at("proj_dim").get<std::size_t>();
  arch.proj_batchnorm = aj.at("proj_batchnorm").get<bool>();
  arch.n_classes = aj.at("n_classes").get<std::size_t>();
  validate(arch);

  ModelState state;
  state.arch = arch;
  state.step = header.at("step").get<std::uint64_t>();
  state.epoch = header.at("epoch").get<std::uint64_t>();

  // expected list from the arch, then verify against the header
  std::vector<std::pair<std::string, Shape>> expected;
  {
    ModelState ref = init_params(arch, 0);
    for (const NamedTensor& p : ref.params) expected.push_back({p.name, p.value.shape()});
  }
  const auto& plist = header.at("params");
  if (plist.size() != expected.size())
    fail("checkpoint: parameter count does not match architecture (checkpoint/arch mismatch)");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (plist[i].at("name").get<std::string>() != expected[i].first ||
        plist[i].at("shape").get<Shape>() != expected[i].second)
      fail("checkpoint: parameter '" + expected[i].first +
           "' does not match architecture (checkpoint/arch mismatch)");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    Tensor t = read_tensor_blob(is);
    if (t.shape() != expected[i].second) fail("checkpoint: tensor shape mismatch on read");
    state.params.push_back({expected[i].first, std::move(t)});
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    Tensor t = read_tensor_blob(is);
    if (t.shape() != expected[i].second) fail("checkpoint: momentum shape mismatch on read");
    state.momentum.push_back(std::move(t));
  }
  return state;
}

}  // namespace sau
