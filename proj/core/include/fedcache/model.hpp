#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedcache/numerics/autodiff.hpp"
#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

/// Multilayer perceptron shape. The hidden stack (with rectifiers) is the feature
/// extractor; a single linear layer on top is the classifier.
struct ArchSpec {
  std::string name;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t num_classes = 0;

  std::size_t feature_dim() const { return hidden.empty() ? 0 : hidden.back(); }
  void validate() const;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Size presets: mlp-s [32,32], mlp-m [64,64], mlp-l [128,128].
ArchSpec arch_preset(std::string_view name, std::size_t input_dim, std::size_t num_classes);
std::vector<std::string> arch_preset_names();

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one entry per parameter tensor.
struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::size_t steps = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               double lr, const AdamConfig& config = {});

/// A client's personalized model. Parameters are stored as [W₀, b₀, W₁, b₁, …] with the
/// classifier's weight and bias last; weights are fan_in × fan_out, biases 1 × fan_out.
class ModelBundle {
 public:
  ModelBundle() = default;
  ModelBundle(ArchSpec arch, std::vector<Matrix> params);

  const ArchSpec& arch() const noexcept { return arch_; }
  std::size_t num_layers() const noexcept { return params_.size() / 2; }
  const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

  std::span<Matrix> parameters() noexcept { return params_; }
  std::span<const Matrix> parameters() const noexcept { return params_; }
  /// Exact number of scalar weights and biases.
  std::size_t param_count() const noexcept;

  AdamState& optimizer_state() noexcept { return optimizer_; }
  const AdamState& optimizer_state() const noexcept { return optimizer_; }

 private:
  ArchSpec arch_;
  std::vector<Matrix> params_;
  AdamState optimizer_;
};

/// Uniform(−1/√fan_in, 1/√fan_in) initialization of every weight and bias.
ModelBundle build_model(const ArchSpec& arch, std::uint64_t seed);

struct SplitOutput {
  Matrix features;
  Matrix logits;
};

SplitOutput forward_split(const ModelBundle& m, const Matrix& x);
Matrix forward_features(const ModelBundle& m, const Matrix& x);
/// Classifier head applied to already-extracted features.
Matrix classify(const ModelBundle& m, const Matrix& features);
Matrix forward_logits(const ModelBundle& m, const Matrix& x);

/// Model parameters placed on a tape, either as variables (trainable) or constants.
struct BoundModel {
  const ModelBundle* model = nullptr;
  std::vector<ad::Var> params;
};

BoundModel bind(ad::Tape& tape, const ModelBundle& m, bool trainable);

struct SplitVars {
  ad::Var features;
  ad::Var logits;
};

SplitVars forward_split(const BoundModel& bound, const ad::Var& x);
ad::Var forward_features(const BoundModel& bound, const ad::Var& x);

/// Gradients of the bound parameters after Tape::backward, in parameter order.
std::vector<Matrix> gradients(const BoundModel& bound);

/// Adam update of all model parameters, advancing the bundle's optimizer state.
void optimizer_step(ModelBundle& m, std::span<const Matrix> grads, double lr,
                    const AdamConfig& config = {});

/// FNV-1a digest of the raw parameter bytes; equal digests for bitwise-equal parameters.
std::uint64_t parameter_digest(const ModelBundle& m);

}  // namespace fedcache
