#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "knockoff/rng.hpp"
#include "knockoff/types.hpp"

// Minimal dense-network substrate: forward pass with cached activations,
// reverse-mode gradients, Adam, L2 weight penalty and batch normalization.
// Exactly the layer kinds the encoder/decoder architectures need; no
// convolutions, no dropout, no generic graphs.
namespace knockoff::nn {

enum class Activation { Linear, Tanh, Relu, Sigmoid, SoftmaxGroups };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Linear;
  double l2_penalty = 0.0;
  // Width of each softmax group; only read when activation == SoftmaxGroups.
  Index softmax_group_size = 0;

  Index in_width() const { return weights.cols(); }
  Index out_width() const { return weights.rows(); }
};

struct BatchNormLayer {
  Vector running_mean;
  Vector running_var;   // entries kept strictly positive
  Vector scale;         // gamma
  Vector shift;         // beta
  double momentum = 0.99;
  double epsilon = 1e-3;

  Index width() const { return running_mean.size(); }
  static BatchNormLayer make(Index width, double momentum = 0.99,
                             double epsilon = 1e-3);
};

using Layer = std::variant<DenseLayer, BatchNormLayer>;

Index layer_in_width(const Layer& l);
Index layer_out_width(const Layer& l);

// Layered dense network. `revision` is bumped by every parameter write so a
// ForwardTrace can be checked for staleness before backward().
struct MlpModel {
  Index input_width = 0;
  std::vector<Layer> layers;
  std::uint64_t revision = 0;

  Index output_width() const {
    return layers.empty() ? input_width : layer_out_width(layers.back());
  }
  void check_wiring() const;  // adjacent widths consistent, l2 >= 0
};

// Builder helpers; widths are inferred from the current model output.
void add_dense(MlpModel& m, Index out, Activation act, double l2 = 0.0,
               Index softmax_group_size = 0);
void add_batch_norm(MlpModel& m, double momentum = 0.99, double epsilon = 1e-3);

// Fan-in-scaled uniform init: W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
// biases zero, batch-norm at identity with unit running variance.
void initialize_parameters(MlpModel& m, Rng& rng);

enum class Mode { Train, Eval };

struct LayerCache {
  Matrix input;   // batch x in
  Matrix pre;     // dense pre-activation (dense layers only)
  Matrix output;  // batch x out
  Vector bn_mean, bn_istd;  // train-mode batch statistics (batch-norm only)
  Matrix bn_xhat;
};

struct ForwardTrace {
  Mode mode = Mode::Eval;
  std::uint64_t model_revision = 0;
  std::vector<LayerCache> layers;

  const Matrix& output() const {
    if (layers.empty()) throw ContractError("ForwardTrace: empty trace");
    return layers.back().output;
  }
};

// Runs the batch through every layer. Train mode uses batch statistics in
// batch-norm layers and updates their running estimates; eval mode reads the
// running statistics and leaves the model untouched. Keeping `trace` is
// required for backward().
Matrix forward(MlpModel& model, const Matrix& batch, Mode mode,
               ForwardTrace* trace = nullptr);

// Eval-only forward for frozen models; safe to call concurrently.
Matrix forward_eval(const MlpModel& model, const Matrix& batch);

struct DenseGrad {
  Matrix weights;
  Vector bias;
};
struct BatchNormGrad {
  Vector scale, shift;
};
using LayerGrad = std::variant<DenseGrad, BatchNormGrad>;

struct Gradients {
  std::vector<LayerGrad> layers;
};

struct BackwardResult {
  Gradients grads;
  Matrix input_gradient;  // batch x input_width
};

// Reverse pass. `upstream` is dLoss/dOutput of the last layer, matching the
// trace produced by forward() in train mode on the current parameters.
// Weight gradients include the L2 term 2 * l2_penalty * W.
// With `upstream_is_preactivation` the caller supplies dLoss/dPre for the
// final dense layer directly (numerically fused losses such as
// sigmoid + cross-entropy).
BackwardResult backward(const MlpModel& model, const ForwardTrace& trace,
                        const Matrix& upstream,
                        bool upstream_is_preactivation = false);

// Sum over dense layers of l2_penalty * ||W||^2.
double l2_penalty_value(const MlpModel& model);

// ---------------------------------------------------------------------------
// Flat parameter view + Adam
// ---------------------------------------------------------------------------

Index parameter_count(const MlpModel& model);
Vector pack_parameters(const MlpModel& model);
void unpack_parameters(MlpModel& model, const Vector& params);
Vector pack_gradients(const MlpModel& model, const Gradients& grads);

struct AdamState {
  long step_count = 0;
  Vector first_moment;
  Vector second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  static AdamState make(Index n_params, double lr = 1e-3, double beta1 = 0.9,
                        double beta2 = 0.999, double eps = 1e-7);
};

// One bias-corrected Adam update, in place.
void adam_step(AdamState& state, Vector& params, const Vector& grads);

}  // namespace knockoff::nn
