#include "knockoff/nn.hpp"

#include <cmath>

namespace knockoff::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::SoftmaxGroups: return "softmax_groups";
  }
  throw Error("unreachable activation tag");
}

Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softmax_groups") return Activation::SoftmaxGroups;
  throw ParseError("unknown activation: " + s);
}

BatchNormLayer BatchNormLayer::make(Index width, double momentum, double epsilon) {
  BatchNormLayer bn;
  bn.running_mean = Vector::Zero(width);
  bn.running_var = Vector::Ones(width);
  bn.scale = Vector::Ones(width);
  bn.shift = Vector::Zero(width);
  bn.momentum = momentum;
  bn.epsilon = epsilon;
  return bn;
}

Index layer_in_width(const Layer& l) {
  return std::visit(
      [](const auto& v) -> Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DenseLayer>)
          return v.in_width();
        else
          return v.width();
      },
      l);
}

Index layer_out_width(const Layer& l) {
  return std::visit(
      [](const auto& v) -> Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DenseLayer>)
          return v.out_width();
        else
          return v.width();
      },
      l);
}

void MlpModel::check_wiring() const {
  Index w = input_width;
  for (const Layer& l : layers) {
    if (layer_in_width(l) != w)
      throw DimensionError("MlpModel: layer input width " +
                           std::to_string(layer_in_width(l)) +
                           " does not match previous output " + std::to_string(w));
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      if (d->l2_penalty < 0.0) throw ContractError("MlpModel: negative l2_penalty");
      if (d->activation == Activation::SoftmaxGroups &&
          (d->softmax_group_size <= 0 || d->out_width() % d->softmax_group_size != 0))
        throw DimensionError("MlpModel: output width not divisible by softmax group");
    }
    w = layer_out_width(l);
  }
}

void add_dense(MlpModel& m, Index out, Activation act, double l2,
               Index softmax_group_size) {
  DenseLayer d;
  d.weights = Matrix::Zero(out, m.output_width());
  d.bias = Vector::Zero(out);
  d.activation = act;
  d.l2_penalty = l2;
  d.softmax_group_size = softmax_group_size;
  m.layers.emplace_back(std::move(d));
}

void add_batch_norm(MlpModel& m, double momentum, double epsilon) {
  m.layers.emplace_back(BatchNormLayer::make(m.output_width(), momentum, epsilon));
}

void initialize_parameters(MlpModel& m, Rng& rng) {
  for (Layer& l : m.layers) {
    if (auto* d = std::get_if<DenseLayer>(&l)) {
      const double limit = std::sqrt(6.0 / static_cast<double>(d->in_width()));
      for (Index j = 0; j < d->weights.cols(); ++j)
        for (Index i = 0; i < d->weights.rows(); ++i)
          d->weights(i, j) = rng.uniform(-limit, limit);
      d->bias.setZero();
    } else {
      auto& bn = std::get<BatchNormLayer>(l);
      bn = BatchNormLayer::make(bn.width(), bn.momentum, bn.epsilon);
    }
  }
  ++m.revision;
}

namespace {

void apply_activation(const DenseLayer& d, const Matrix& pre, Matrix& out) {
  switch (d.activation) {
    case Activation::Linear:
      out = pre;
      return;
    case Activation::Tanh:
      out = pre.array().tanh();
      return;
    case Activation::Relu:
      out = pre.array().max(0.0);
      return;
    case Activation::Sigmoid:
      out = 1.0 / (1.0 + (-pre.array()).exp());
      return;
    case Activation::SoftmaxGroups: {
      const Index k = d.softmax_group_size;
      out.resizeLike(pre);
      for (Index i = 0; i < pre.rows(); ++i) {
        for (Index g = 0; g < pre.cols(); g += k) {
          auto seg = pre.row(i).segment(g, k);
          const double mx = seg.maxCoeff();
          Eigen::ArrayXd e = (seg.array() - mx).exp();
          out.row(i).segment(g, k) = e / e.sum();
        }
      }
      return;
    }
  }
}

// dLoss/dPre from dLoss/dOut.
Matrix activation_backward(const DenseLayer& d, const LayerCache& cache,
                           const Matrix& dout) {
  switch (d.activation) {
    case Activation::Linear:
      return dout;
    case Activation::Tanh:
      return (dout.array() * (1.0 - cache.output.array().square())).matrix();
    case Activation::Relu:
      return (dout.array() * (cache.pre.array() > 0.0).cast<double>()).matrix();
    case Activation::Sigmoid:
      return (dout.array() * cache.output.array() * (1.0 - cache.output.array()))
          .matrix();
    case Activation::SoftmaxGroups: {
      const Index k = d.softmax_group_size;
      Matrix dpre(dout.rows(), dout.cols());
      for (Index i = 0; i < dout.rows(); ++i) {
        for (Index g = 0; g < dout.cols(); g += k) {
          auto s = cache.output.row(i).segment(g, k).array();
          auto up = dout.row(i).segment(g, k).array();
          const double dot = (up * s).sum();
          dpre.row(i).segment(g, k) = (s * (up - dot)).matrix();
        }
      }
      return dpre;
    }
  }
  throw Error("unreachable activation tag");
}

}  // namespace

Matrix forward(MlpModel& model, const Matrix& batch, Mode mode, ForwardTrace* trace) {
  model.check_wiring();
  if (batch.cols() != model.input_width)
    throw DimensionError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, model expects " +
                         std::to_string(model.input_width));
  if (trace) {
    trace->mode = mode;
    trace->model_revision = model.revision;
    trace->layers.clear();
    trace->layers.reserve(model.layers.size());
  }
  Matrix cur = batch;
  for (Layer& l : model.layers) {
    LayerCache cache;
    if (trace) cache.input = cur;
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      Matrix pre = cur * d->weights.transpose();
      pre.rowwise() += d->bias.transpose();
      Matrix out;
      apply_activation(*d, pre, out);
      if (trace) {
        cache.pre = std::move(pre);
        cache.output = out;
      }
      cur = std::move(out);
    } else {
      auto& bn = std::get<BatchNormLayer>(l);
      if (mode == Mode::Train) {
        const double m = static_cast<double>(cur.rows());
        Vector mean = cur.colwise().mean();
        Matrix centered = cur.rowwise() - mean.transpose();
        Vector var = centered.array().square().colwise().sum() / m;
        Vector istd = (var.array() + bn.epsilon).rsqrt();
        Matrix xhat = centered.array().rowwise() * istd.transpose().array();
        Matrix out = (xhat.array().rowwise() * bn.scale.transpose().array())
                         .rowwise() +
                     bn.shift.transpose().array();
        bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean;
        bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var;
        if (trace) {
          cache.bn_mean = std::move(mean);
          cache.bn_istd = std::move(istd);
          cache.bn_xhat = std::move(xhat);
          cache.output = out;
        }
        cur = std::move(out);
      } else {
        Vector istd = (bn.running_var.array() + bn.epsilon).rsqrt();
        Matrix xhat = (cur.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                      istd.transpose().array();
        Matrix out = (xhat.array().rowwise() * bn.scale.transpose().array())
                         .rowwise() +
                     bn.shift.transpose().array();
        if (trace) {
          cache.bn_istd = std::move(istd);
          cache.bn_xhat = std::move(xhat);
          cache.output = out;
        }
        cur = std::move(out);
      }
    }
    if (trace) trace->layers.emplace_back(std::move(cache));
  }
  return cur;
}

Matrix forward_eval(const MlpModel& model, const Matrix& batch) {
  // Eval mode never writes to the model; const_cast is confined here.
  return forward(const_cast<MlpModel&>(model), batch, Mode::Eval, nullptr);
}

BackwardResult backward(const MlpModel& model, const ForwardTrace& trace,
                        const Matrix& upstream, bool upstream_is_preactivation) {
  if (trace.layers.size() != model.layers.size())
    throw ContractError("backward: trace does not match model layer count");
  if (trace.model_revision != model.revision)
    throw ContractError("backward: stale trace (parameters changed since forward)");
  const Matrix& last_out = trace.layers.back().output;
  if (upstream.rows() != last_out.rows() || upstream.cols() != last_out.cols())
    throw DimensionError("backward: upstream gradient shape mismatch");

  BackwardResult res;
  res.grads.layers.resize(model.layers.size());
  Matrix grad = upstream;
  for (Index li = static_cast<Index>(model.layers.size()) - 1; li >= 0; --li) {
    const auto& cache = trace.layers[static_cast<std::size_t>(li)];
    const Layer& l = model.layers[static_cast<std::size_t>(li)];
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      Matrix dpre;
      const bool fused = upstream_is_preactivation &&
                         li == static_cast<Index>(model.layers.size()) - 1;
      if (fused)
        dpre = grad;
      else
        dpre = activation_backward(*d, cache, grad);
      DenseGrad g;
      g.weights = dpre.transpose() * cache.input;
      if (d->l2_penalty > 0.0) g.weights += 2.0 * d->l2_penalty * d->weights;
      g.bias = dpre.colwise().sum().transpose();
      grad = dpre * d->weights;
      res.grads.layers[static_cast<std::size_t>(li)] = std::move(g);
    } else {
      const auto& bn = std::get<BatchNormLayer>(l);
      BatchNormGrad g;
      g.scale = (grad.array() * cache.bn_xhat.array()).colwise().sum().transpose();
      g.shift = grad.colwise().sum().transpose();
      if (trace.mode == Mode::Train) {
        const double m = static_cast<double>(grad.rows());
        Matrix dxhat = grad.array().rowwise() * bn.scale.transpose().array();
        Vector mean_dxhat = dxhat.colwise().mean();
        Vector mean_dxhat_xhat =
            (dxhat.array() * cache.bn_xhat.array()).colwise().sum().transpose() / m;
        Matrix dx = ((dxhat.rowwise() - mean_dxhat.transpose()).array() -
                     cache.bn_xhat.array().rowwise() *
                         mean_dxhat_xhat.transpose().array())
                        .rowwise() *
                    cache.bn_istd.transpose().array();
        grad = std::move(dx);
      } else {
        grad = grad.array().rowwise() *
               (bn.scale.array() * cache.bn_istd.array()).transpose();
      }
      res.grads.layers[static_cast<std::size_t>(li)] = std::move(g);
    }
  }
  res.input_gradient = std::move(grad);
  return res;
}

double l2_penalty_value(const MlpModel& model) {
  double v = 0.0;
  for (const Layer& l : model.layers)
    if (const auto* d = std::get_if<DenseLayer>(&l))
      v += d->l2_penalty * d->weights.squaredNorm();
  return v;
}

Index parameter_count(const MlpModel& model) {
  Index n = 0;
  for (const Layer& l : model.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&l))
      n += d->weights.size() + d->bias.size();
    else
      n += 2 * std::get<BatchNormLayer>(l).width();
  }
  return n;
}

Vector pack_parameters(const MlpModel& model) {
  Vector out(parameter_count(model));
  Index pos = 0;
  for (const Layer& l : model.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      out.segment(pos, d->weights.size()) =
          Eigen::Map<const Vector>(d->weights.data(), d->weights.size());
      pos += d->weights.size();
      out.segment(pos, d->bias.size()) = d->bias;
      pos += d->bias.size();
    } else {
      const auto& bn = std::get<BatchNormLayer>(l);
      out.segment(pos, bn.width()) = bn.scale;
      pos += bn.width();
      out.segment(pos, bn.width()) = bn.shift;
      pos += bn.width();
    }
  }
  return out;
}

void unpack_parameters(MlpModel& model, const Vector& params) {
  if (params.size() != parameter_count(model))
    throw DimensionError("unpack_parameters: size mismatch");
  Index pos = 0;
  for (Layer& l : model.layers) {
    if (auto* d = std::get_if<DenseLayer>(&l)) {
      Eigen::Map<Vector>(d->weights.data(), d->weights.size()) =
          params.segment(pos, d->weights.size());
      pos += d->weights.size();
      d->bias = params.segment(pos, d->bias.size());
      pos += d->bias.size();
    } else {
      auto& bn = std::get<BatchNormLayer>(l);
      bn.scale = params.segment(pos, bn.width());
      pos += bn.width();
      bn.shift = params.segment(pos, bn.width());
      pos += bn.width();
    }
  }
  ++model.revision;
}

Vector pack_gradients(const MlpModel& model, const Gradients& grads) {
  if (grads.layers.size() != model.layers.size())
    throw DimensionError("pack_gradients: layer count mismatch");
  Vector out(parameter_count(model));
  Index pos = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (std::holds_alternative<DenseLayer>(model.layers[i])) {
      const auto& g = std::get<DenseGrad>(grads.layers[i]);
      out.segment(pos, g.weights.size()) =
          Eigen::Map<const Vector>(g.weights.data(), g.weights.size());
      pos += g.weights.size();
      out.segment(pos, g.bias.size()) = g.bias;
      pos += g.bias.size();
    } else {
      const auto& g = std::get<BatchNormGrad>(grads.layers[i]);
      out.segment(pos, g.scale.size()) = g.scale;
      pos += g.scale.size();
      out.segment(pos, g.shift.size()) = g.shift;
      pos += g.shift.size();
    }
  }
  return out;
}

AdamState AdamState::make(Index n_params, double lr, double beta1, double beta2,
                          double eps) {
  AdamState s;
  s.first_moment = Vector::Zero(n_params);
  s.second_moment = Vector::Zero(n_params);
  s.learning_rate = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = eps;
  return s;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw DimensionError("adam_step: size mismatch");
  state.step_count += 1;
  state.first_moment =
      state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * grads.array().square().matrix();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

}  // namespace knockoff::nn
