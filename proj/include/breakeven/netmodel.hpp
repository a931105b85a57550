#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "breakeven/linalg.hpp"
#include "breakeven/parallel.hpp"

namespace breakeven {

enum class Activation { relu, tanh, identity };
enum class LossKind { softmax_cross_entropy, mse };
enum class HvpMethod { pearlmutter, fd };

std::string to_string(Activation a);
std::string to_string(LossKind l);
std::string to_string(HvpMethod m);
Activation activation_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);
HvpMethod hvp_method_from_string(const std::string& s);

struct InitScheme {
  enum class Kind { gaussian_scaled, constant };
  Kind kind = Kind::gaussian_scaled;
  // Per-layer std is gain / sqrt(fan_in). Unset: sqrt(2) after relu, else 1.
  std::optional<double> gain;
  double constant = 0.0;
};

/// Fully connected network. layer_sizes runs input -> hidden... -> output;
/// activations and batch_norm have one entry per hidden layer. The output
/// layer is affine (logits for cross-entropy, predictions for mse).
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  std::vector<Activation> activations;
  std::vector<bool> batch_norm;
  LossKind loss = LossKind::softmax_cross_entropy;
  InitScheme init;
  std::uint64_t seed = 0;
  // Multiplies every per-example loss; 1 in normal use.
  double loss_scale = 1.0;

  void validate() const;
  std::size_t num_affine_layers() const { return layer_sizes.size() - 1; }
  std::size_t num_hidden() const { return layer_sizes.size() - 2; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  bool has_batch_norm() const;
};

// Builds the common "in -> h... -> out" spec with one activation everywhere.
MlpSpec make_mlp(std::vector<std::size_t> sizes, Activation act, LossKind loss, bool batch_norm,
                 std::uint64_t seed);

/// Offsets of one affine layer's blocks inside the flat parameter vector:
/// weights (out x in, row-major), biases, then gamma and beta if normalized.
struct LayerSlices {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::optional<std::size_t> gamma;
  std::optional<std::size_t> beta;
};

class ParamLayout {
 public:
  explicit ParamLayout(const MlpSpec& spec);
  std::size_t size() const { return size_; }
  const LayerSlices& layer(std::size_t l) const { return layers_[l]; }
  std::size_t num_layers() const { return layers_.size(); }

 private:
  std::vector<LayerSlices> layers_;
  std::size_t size_ = 0;
};

using ParamVector = std::vector<double>;

// Deterministic in spec.seed.
ParamVector init_params(const MlpSpec& spec);

/// A set of examples. Classification batches carry labels; regression batches
/// carry an n x output_dim target matrix (labels optional, used for accuracy).
struct Batch {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> inputs;
  std::vector<int> labels;
  std::vector<double> targets;
  std::size_t target_dim = 0;

  Batch select(std::span<const std::size_t> rows) const;
  std::span<const double> row(std::size_t i) const { return {inputs.data() + i * d, d}; }
};

/// Per-hidden-layer normalization statistics; layers without BN hold empty
/// vectors.
struct BnStats {
  std::vector<Vec> mean;
  std::vector<Vec> var;
};

BnStats initial_bn_stats(const MlpSpec& spec);
// running <- decay * running + (1 - decay) * batch
void ema_update(BnStats& running, const BnStats& batch, double decay = 0.99);

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnEmaDecay = 0.99;

struct BnMode {
  enum class Kind { batch_stats, frozen };
  Kind kind = Kind::batch_stats;
  BnStats stats;

  static BnMode batch() { return {}; }
  static BnMode frozen(BnStats s) { return {Kind::frozen, std::move(s)}; }
};

struct ForwardResult {
  double mean_loss = 0.0;
  std::vector<double> per_example;
  double accuracy = 0.0;  // NaN when the batch carries no labels
  BnStats batch_stats;    // statistics used by BN layers in this pass
};

ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                           const BnMode& bn);

struct LossAndGrad {
  ForwardResult forward;
  ParamVector grad;
};

// Gradient of the mean batch loss, reverse mode. Throws NonFinite.
LossAndGrad loss_and_grad(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                          const BnMode& bn);
ParamVector grad(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                 const BnMode& bn);

// One gradient per example. BN layers need frozen statistics.
std::vector<ParamVector> per_example_grads(const MlpSpec& spec, std::span<const double> theta,
                                           const Batch& batch, const BnMode& bn,
                                           Exec exec = Exec::serial);

// Exact Hessian-vector product (forward-over-reverse). BN-free specs only.
ParamVector hvp_pearlmutter(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                            std::span<const double> v);

// Central difference of gradients along v / |v|, rescaled by |v|.
ParamVector hvp_fd(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                   std::span<const double> v, const BnMode& bn, double eps = 1e-4);

LinearOperator hessian_operator(const MlpSpec& spec, std::span<const double> theta,
                                const Batch& batch, HvpMethod method, const BnMode& bn);

// Euclidean norm of the gamma slice of hidden layer `layer_index`.
double bn_gamma_norm(const MlpSpec& spec, std::span<const double> theta, std::size_t layer_index);

}  // namespace breakeven
