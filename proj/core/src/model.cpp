#include "fedcache/model.hpp"

#include <cmath>
#include <cstring>

#include "fedcache/error.hpp"
#include "fedcache/random.hpp"

namespace fedcache {

void ArchSpec::validate() const {
  if (input_dim == 0) throw InputError("ArchSpec " + name + ": input_dim must be positive");
  if (num_classes < 2) throw InputError("ArchSpec " + name + ": need at least 2 classes");
  if (hidden.empty()) throw InputError("ArchSpec " + name + ": hidden layers must be nonempty");
  for (std::size_t w : hidden)
    if (w == 0) throw InputError("ArchSpec " + name + ": zero-width hidden layer");
}

ArchSpec arch_preset(std::string_view name, std::size_t input_dim, std::size_t num_classes) {
  std::vector<std::size_t> hidden;
  if (name == "mlp-s") {
    hidden = {32, 32};
  } else if (name == "mlp-m") {
    hidden = {64, 64};
  } else if (name == "mlp-l") {
    hidden = {128, 128};
  } else {
    throw ConfigError("unknown architecture preset '" + std::string(name) + "'");
  }
  ArchSpec arch{std::string(name), input_dim, std::move(hidden), num_classes};
  arch.validate();
  return arch;
}

std::vector<std::string> arch_preset_names() { return {"mlp-s", "mlp-m", "mlp-l"}; }

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               double lr, const AdamConfig& config) {
  if (params.size() != grads.size()) throw InputError("adam_step: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i])) {
      throw InputError("adam_step: gradient " + std::to_string(i) + " has the wrong shape");
    }
  }
  if (state.first.size() != params.size()) {
    state.first.clear();
    state.second.clear();
    for (const Matrix& p : params) {
      state.first.emplace_back(p.rows(), p.cols());
      state.second.emplace_back(p.rows(), p.cols());
    }
    state.steps = 0;
  }
  ++state.steps;
  const double t = static_cast<double>(state.steps);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values();
    auto g = grads[i].values();
    auto m = state.first[i].values();
    auto v = state.second[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

ModelBundle::ModelBundle(ArchSpec arch, std::vector<Matrix> params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  if (params_.size() != 2 * (arch_.hidden.size() + 1)) {
    throw InputError("ModelBundle: wrong number of parameter tensors");
  }
  std::size_t fan_in = arch_.input_dim;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t fan_out = l < arch_.hidden.size() ? arch_.hidden[l] : arch_.num_classes;
    if (weight(l).rows() != fan_in || weight(l).cols() != fan_out || bias(l).rows() != 1 ||
        bias(l).cols() != fan_out) {
      throw InputError("ModelBundle: layer " + std::to_string(l) + " has the wrong shape");
    }
    fan_in = fan_out;
  }
}

std::size_t ModelBundle::param_count() const noexcept {
  std::size_t n = 0;
  for (const Matrix& p : params_) n += p.size();
  return n;
}

ModelBundle build_model(const ArchSpec& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng = make_rng(seed, Stream::model_init);
  std::vector<Matrix> params;
  std::size_t fan_in = arch.input_dim;
  const std::size_t layers = arch.hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_out = l < arch.hidden.size() ? arch.hidden[l] : arch.num_classes;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out), b(1, fan_out);
    for (double& v : w.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
    for (double& v : b.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
    params.push_back(std::move(w));
    params.push_back(std::move(b));
    fan_in = fan_out;
  }
  return ModelBundle(arch, std::move(params));
}

namespace {

void add_bias_rows(Matrix& x, const Matrix& bias) {
  const auto b = bias.row(0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
}

void check_input(const ModelBundle& m, std::size_t cols) {
  if (cols != m.arch().input_dim) {
    throw InputError("forward: input has " + std::to_string(cols) + " columns, model expects " +
                     std::to_string(m.arch().input_dim));
  }
}

}  // namespace

Matrix forward_features(const ModelBundle& m, const Matrix& x) {
  check_input(m, x.cols());
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < m.num_layers(); ++l) {
    h = matmul(h, m.weight(l));
    add_bias_rows(h, m.bias(l));
    for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
  }
  return h;
}

Matrix classify(const ModelBundle& m, const Matrix& features) {
  const std::size_t last = m.num_layers() - 1;
  if (features.cols() != m.arch().feature_dim()) throw InputError("classify: feature width mismatch");
  Matrix logits = matmul(features, m.weight(last));
  add_bias_rows(logits, m.bias(last));
  return logits;
}

SplitOutput forward_split(const ModelBundle& m, const Matrix& x) {
  SplitOutput out;
  out.features = forward_features(m, x);
  out.logits = classify(m, out.features);
  return out;
}

Matrix forward_logits(const ModelBundle& m, const Matrix& x) {
  return classify(m, forward_features(m, x));
}

BoundModel bind(ad::Tape& tape, const ModelBundle& m, bool trainable) {
  BoundModel b;
  b.model = &m;
  for (const Matrix& p : m.parameters()) {
    b.params.push_back(trainable ? tape.variable(p) : tape.constant(p));
  }
  return b;
}

ad::Var forward_features(const BoundModel& bound, const ad::Var& x) {
  check_input(*bound.model, x.cols());
  ad::Var h = x;
  const std::size_t layers = bound.params.size() / 2;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    h = ad::relu(ad::add_row(ad::matmul(h, bound.params[2 * l]), bound.params[2 * l + 1]));
  }
  return h;
}

SplitVars forward_split(const BoundModel& bound, const ad::Var& x) {
  SplitVars out;
  out.features = forward_features(bound, x);
  const std::size_t last = bound.params.size() / 2 - 1;
  out.logits = ad::add_row(ad::matmul(out.features, bound.params[2 * last]),
                           bound.params[2 * last + 1]);
  return out;
}

std::vector<Matrix> gradients(const BoundModel& bound) {
  std::vector<Matrix> out;
  out.reserve(bound.params.size());
  for (const ad::Var& p : bound.params) out.push_back(p.grad());
  return out;
}

void optimizer_step(ModelBundle& m, std::span<const Matrix> grads, double lr,
                    const AdamConfig& config) {
  adam_step(m.parameters(), grads, m.optimizer_state(), lr, config);
}

std::uint64_t parameter_digest(const ModelBundle& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Matrix& p : m.parameters()) {
    for (double v : p.values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace fedcache
