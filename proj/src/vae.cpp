#include "knockoff/vae.hpp"

#include <cmath>

#include "knockoff/io.hpp"

namespace knockoff::vae {

namespace {

constexpr double kProbFloor = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

bool last_layer_is_sigmoid(const nn::MlpModel& m) {
  if (m.layers.empty()) return false;
  const auto* d = std::get_if<nn::DenseLayer>(&m.layers.back());
  return d && d->activation == nn::Activation::Sigmoid;
}

// Mean Bernoulli cross-entropy (sum over columns, mean over rows).
double bernoulli_nll(const Matrix& x, const Matrix& probs) {
  const auto b = static_cast<double>(x.rows());
  auto c = probs.array().max(kProbFloor).min(1.0 - kProbFloor);
  return -((x.array() * c.log()) + (1.0 - x.array()) * (1.0 - c).log()).sum() / b;
}

}  // namespace

void check_spec(const GaussianVae& m) {
  m.encoder_mu.check_wiring();
  m.encoder_logsigma.check_wiring();
  m.decoder.check_wiring();
  require(m.latent_dim > 0, "gaussian vae: latent_dim must be positive");
  require(m.encoder_mu.output_width() == m.latent_dim,
          "gaussian vae: encoder_mu output width != latent_dim");
  require(m.encoder_logsigma.output_width() == m.latent_dim,
          "gaussian vae: encoder_logsigma output width != latent_dim");
  require(m.decoder.input_width == m.latent_dim,
          "gaussian vae: decoder input width != latent_dim");
  require(m.encoder_mu.input_width == m.encoder_logsigma.input_width &&
              m.decoder.output_width() == m.encoder_mu.input_width,
          "gaussian vae: encoder/decoder widths inconsistent");
  require(m.output_noise_sigma >= 0.0, "gaussian vae: negative output noise");
  if (m.data_kind == ColumnKind::Binary)
    require(last_layer_is_sigmoid(m.decoder),
            "gaussian vae: binary data needs a sigmoid decoder output");
}

void check_spec(const CategoricalVae& m) {
  m.encoder.check_wiring();
  m.decoder.check_wiring();
  require(m.num_groups > 0 && m.categories > 0,
          "categorical vae: group sizes must be positive");
  require(m.temperature > 0.0, "categorical vae: temperature must be positive");
  require(m.encoder.output_width() == m.latent_width(),
          "categorical vae: encoder output width != num_groups * categories");
  require(m.decoder.input_width == m.latent_width(),
          "categorical vae: decoder input width != num_groups * categories");
  require(m.decoder.output_width() == m.encoder.input_width,
          "categorical vae: decoder output width != encoder input width");
  require(last_layer_is_sigmoid(m.decoder),
          "categorical vae: decoder must end in a sigmoid layer");
}

Matrix reparam_gaussian(const Matrix& mu, const Matrix& logsigma, const Matrix& eps) {
  if (mu.rows() != logsigma.rows() || mu.cols() != logsigma.cols() ||
      mu.rows() != eps.rows() || mu.cols() != eps.cols())
    throw DimensionError("reparam_gaussian: shape mismatch");
  return mu.array() + logsigma.array().exp() * eps.array();
}

Matrix reparam_sample_gaussian(const Matrix& mu, const Matrix& logsigma, Rng& rng) {
  return reparam_gaussian(mu, logsigma, rng.normal_matrix(mu.rows(), mu.cols()));
}

Matrix gumbel_softmax_from_draws(const Matrix& logits, const Matrix& gumbel,
                                 double temperature, Index group_size) {
  if (!(temperature > 0.0))
    throw ContractError("gumbel_softmax: temperature must be positive");
  if (logits.rows() != gumbel.rows() || logits.cols() != gumbel.cols())
    throw DimensionError("gumbel_softmax: draw shape mismatch");
  if (group_size <= 0 || logits.cols() % group_size != 0)
    throw DimensionError("gumbel_softmax: column count not divisible by group size");
  Matrix a = (logits + gumbel) / temperature;
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index g = 0; g < a.cols(); g += group_size) {
      auto seg = a.row(i).segment(g, group_size);
      const double mx = seg.maxCoeff();
      Eigen::ArrayXd e = (seg.array() - mx).exp();
      out.row(i).segment(g, group_size) = e / e.sum();
    }
  }
  return out;
}

Matrix gumbel_softmax_sample(const Matrix& logits, double temperature,
                             Index group_size, Rng& rng) {
  return gumbel_softmax_from_draws(
      logits, rng.gumbel_matrix(logits.rows(), logits.cols()), temperature,
      group_size);
}

double gaussian_kl_term(const Matrix& mu, const Matrix& logsigma) {
  if (mu.rows() != logsigma.rows() || mu.cols() != logsigma.cols())
    throw DimensionError("gaussian_kl_term: shape mismatch");
  const auto b = static_cast<double>(mu.rows());
  return 0.5 *
         (mu.array().square() + (2.0 * logsigma.array()).exp() - 1.0 -
          2.0 * logsigma.array())
             .sum() /
         b;
}

double categorical_kl_term(const Matrix& logits, Index group_size) {
  if (group_size <= 0 || logits.cols() % group_size != 0)
    throw DimensionError("categorical_kl_term: bad group size");
  const double log_k = std::log(static_cast<double>(group_size));
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    for (Index g = 0; g < logits.cols(); g += group_size) {
      auto seg = logits.row(i).segment(g, group_size);
      const double mx = seg.maxCoeff();
      Eigen::ArrayXd e = (seg.array() - mx).exp();
      Eigen::ArrayXd pi = e / e.sum();
      total += (pi * (pi.log() + log_k)).sum();
    }
  }
  return total / static_cast<double>(logits.rows());
}

ElboParts elbo_with_gradients(GaussianVae& model, const Matrix& batch,
                              const Matrix& eps, GaussianGrads* grads) {
  check_spec(model);
  if (batch.cols() != model.encoder_mu.input_width)
    throw DimensionError("elbo: batch width does not match encoder input");
  if (eps.rows() != batch.rows() || eps.cols() != model.latent_dim)
    throw DimensionError("elbo: eps shape must be batch x latent_dim");
  const auto b = static_cast<double>(batch.rows());

  nn::ForwardTrace t_mu, t_ls, t_dec;
  Matrix mu = nn::forward(model.encoder_mu, batch, nn::Mode::Train, &t_mu);
  Matrix ls = nn::forward(model.encoder_logsigma, batch, nn::Mode::Train, &t_ls);
  Matrix sig = ls.array().exp();
  Matrix z = mu.array() + sig.array() * eps.array();
  Matrix xhat = nn::forward(model.decoder, z, nn::Mode::Train, &t_dec);

  ElboParts parts;
  Matrix d_dec;  // upstream for the decoder
  bool fused = false;
  if (model.data_kind == ColumnKind::Continuous) {
    parts.reconstruction = 0.5 * (xhat - batch).squaredNorm() / b;
    d_dec = (xhat - batch) / b;
  } else {
    parts.reconstruction = bernoulli_nll(batch, xhat);
    d_dec = (xhat - batch) / b;  // d recon / d pre-activation of the sigmoid
    fused = true;
  }
  parts.kl = gaussian_kl_term(mu, ls);
  parts.l2 = nn::l2_penalty_value(model.encoder_mu) +
             nn::l2_penalty_value(model.encoder_logsigma) +
             nn::l2_penalty_value(model.decoder);
  parts.loss = parts.reconstruction + parts.kl + parts.l2;

  if (grads) {
    nn::BackwardResult dec = nn::backward(model.decoder, t_dec, d_dec, fused);
    const Matrix& dz = dec.input_gradient;
    Matrix d_mu = dz + mu / b;
    Matrix d_ls = (dz.array() * eps.array() * sig.array()).matrix() +
                  (((2.0 * ls.array()).exp() - 1.0) / b).matrix();
    grads->decoder = std::move(dec.grads);
    grads->encoder_mu = nn::backward(model.encoder_mu, t_mu, d_mu).grads;
    grads->encoder_logsigma = nn::backward(model.encoder_logsigma, t_ls, d_ls).grads;
  }
  return parts;
}

ElboParts elbo_with_gradients(CategoricalVae& model, const Matrix& batch,
                              const Matrix& gumbel, CategoricalGrads* grads) {
  check_spec(model);
  if (batch.cols() != model.encoder.input_width)
    throw DimensionError("elbo: batch width does not match encoder input");
  if (gumbel.rows() != batch.rows() || gumbel.cols() != model.latent_width())
    throw DimensionError("elbo: gumbel draws must be batch x latent width");
  const auto b = static_cast<double>(batch.rows());
  const Index k = model.categories;
  const double log_k = std::log(static_cast<double>(k));

  nn::ForwardTrace t_enc, t_dec;
  Matrix logits = nn::forward(model.encoder, batch, nn::Mode::Train, &t_enc);
  Matrix z = gumbel_softmax_from_draws(logits, gumbel, model.temperature, k);
  Matrix xhat = nn::forward(model.decoder, z, nn::Mode::Train, &t_dec);

  ElboParts parts;
  parts.reconstruction = bernoulli_nll(batch, xhat);
  parts.kl = categorical_kl_term(logits, k);
  parts.l2 = nn::l2_penalty_value(model.encoder) + nn::l2_penalty_value(model.decoder);
  parts.loss = parts.reconstruction + parts.kl + parts.l2;

  if (grads) {
    Matrix d_pre = (xhat - batch) / b;
    nn::BackwardResult dec = nn::backward(model.decoder, t_dec, d_pre, true);
    const Matrix& dz = dec.input_gradient;

    Matrix d_logits(logits.rows(), logits.cols());
    for (Index i = 0; i < logits.rows(); ++i) {
      for (Index g = 0; g < logits.cols(); g += k) {
        // Through the sample path: softmax Jacobian scaled by 1/temperature.
        auto s = z.row(i).segment(g, k).array();
        auto up = dz.row(i).segment(g, k).array();
        const double dot = (up * s).sum();
        Eigen::ArrayXd d_sample = s * (up - dot) / model.temperature;
        // Through the KL term: pi .* (log pi - sum(pi .* log pi)).
        auto seg = logits.row(i).segment(g, k);
        const double mx = seg.maxCoeff();
        Eigen::ArrayXd e = (seg.array() - mx).exp();
        Eigen::ArrayXd pi = e / e.sum();
        Eigen::ArrayXd lp = pi.log();
        const double mean_lp = (pi * lp).sum();
        d_logits.row(i).segment(g, k) = (d_sample + pi * (lp - mean_lp) / b).matrix();
      }
    }
    grads->decoder = std::move(dec.grads);
    grads->encoder = nn::backward(model.encoder, t_enc, d_logits).grads;
  }
  return parts;
}

ElboParts elbo_loss(VaeModel& model, const DataMatrix& batch, Rng& rng) {
  return std::visit(
      [&](auto& m) -> ElboParts {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianVae>) {
          Matrix eps = rng.normal_matrix(batch.rows(), m.latent_dim);
          return elbo_with_gradients(m, batch.values, eps, nullptr);
        } else {
          Matrix g = rng.gumbel_matrix(batch.rows(), m.latent_width());
          return elbo_with_gradients(m, batch.values, g, nullptr);
        }
      },
      model);
}

namespace {

void adam_update(nn::MlpModel& net, const nn::Gradients& g, nn::AdamState& st) {
  Vector p = nn::pack_parameters(net);
  Vector gv = nn::pack_gradients(net, g);
  nn::adam_step(st, p, gv);
  nn::unpack_parameters(net, p);
}

nn::AdamState make_adam(const nn::MlpModel& net, const TrainingConfig& cfg) {
  return nn::AdamState::make(nn::parameter_count(net), cfg.learning_rate, cfg.beta1,
                             cfg.beta2, cfg.adam_epsilon);
}

void check_data_kind(const DataMatrix& data, ColumnKind want, const char* who) {
  for (ColumnKind k : data.kinds)
    if (k != want)
      throw ContractError(std::string(who) + ": data column kinds incompatible");
}

std::vector<std::pair<Index, Index>> batch_ranges(Index n, Index batch_size) {
  std::vector<std::pair<Index, Index>> out;
  for (Index start = 0; start < n; start += batch_size)
    out.emplace_back(start, std::min(batch_size, n - start));
  return out;
}

Matrix gather_rows(const Matrix& x, const std::vector<Index>& perm, Index start,
                   Index count) {
  Matrix b(count, x.cols());
  for (Index i = 0; i < count; ++i)
    b.row(i) = x.row(perm[static_cast<std::size_t>(start + i)]);
  return b;
}

}  // namespace

VaeModel train(VaeModel spec, const DataMatrix& data, const TrainingConfig& cfg) {
  data.check_consistent();
  const Index n = data.rows();
  if (n == 0) throw ContractError("train: empty data");
  if (cfg.batch_size < 1 || cfg.batch_size > n)
    throw ContractError("train: batch_size must be in [1, n]");
  if (cfg.epochs < 0) throw ContractError("train: negative epochs");

  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        check_spec(m);
        Rng rng(cfg.seed);
        if constexpr (std::is_same_v<T, GaussianVae>) {
          check_data_kind(data, m.data_kind, "gaussian vae");
          if (m.encoder_mu.input_width != data.cols())
            throw DimensionError("train: data width does not match encoder");
          nn::initialize_parameters(m.encoder_mu, rng);
          nn::initialize_parameters(m.encoder_logsigma, rng);
          nn::initialize_parameters(m.decoder, rng);
          auto a_mu = make_adam(m.encoder_mu, cfg);
          auto a_ls = make_adam(m.encoder_logsigma, cfg);
          auto a_dec = make_adam(m.decoder, cfg);
          m.epoch_losses.clear();
          for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
            auto perm = rng.permutation(n);
            double total = 0.0;
            Index nb = 0;
            for (auto [start, count] : batch_ranges(n, cfg.batch_size)) {
              Matrix batch = gather_rows(data.values, perm, start, count);
              Matrix eps = rng.normal_matrix(count, m.latent_dim);
              GaussianGrads g;
              ElboParts parts = elbo_with_gradients(m, batch, eps, &g);
              if (!std::isfinite(parts.loss))
                throw TrainingDivergence(
                    "vae training diverged at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(nb));
              adam_update(m.encoder_mu, g.encoder_mu, a_mu);
              adam_update(m.encoder_logsigma, g.encoder_logsigma, a_ls);
              adam_update(m.decoder, g.decoder, a_dec);
              total += parts.loss;
              ++nb;
            }
            m.epoch_losses.push_back(total / static_cast<double>(nb));
          }
          m.trained = true;
        } else {
          check_data_kind(data, ColumnKind::Binary, "categorical vae");
          if (m.encoder.input_width != data.cols())
            throw DimensionError("train: data width does not match encoder");
          nn::initialize_parameters(m.encoder, rng);
          nn::initialize_parameters(m.decoder, rng);
          auto a_enc = make_adam(m.encoder, cfg);
          auto a_dec = make_adam(m.decoder, cfg);
          m.epoch_losses.clear();
          for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
            auto perm = rng.permutation(n);
            double total = 0.0;
            Index nb = 0;
            for (auto [start, count] : batch_ranges(n, cfg.batch_size)) {
              Matrix batch = gather_rows(data.values, perm, start, count);
              Matrix gd = rng.gumbel_matrix(count, m.latent_width());
              CategoricalGrads g;
              ElboParts parts = elbo_with_gradients(m, batch, gd, &g);
              if (!std::isfinite(parts.loss))
                throw TrainingDivergence(
                    "cat-vae training diverged at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(nb));
              adam_update(m.encoder, g.encoder, a_enc);
              adam_update(m.decoder, g.decoder, a_dec);
              total += parts.loss;
              ++nb;
            }
            m.epoch_losses.push_back(total / static_cast<double>(nb));
          }
          m.trained = true;
        }
      },
      spec);
  return spec;
}

namespace {

Matrix binary_output(const Matrix& probs, BinaryOutput mode, Rng& rng) {
  Matrix out(probs.rows(), probs.cols());
  if (mode == BinaryOutput::Threshold) {
    out = (probs.array() > 0.5).cast<double>();
  } else {
    for (Index i = 0; i < probs.rows(); ++i)
      for (Index j = 0; j < probs.cols(); ++j)
        out(i, j) = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace

KnockoffPair generate_knockoffs(const VaeModel& model, const DataMatrix& data,
                                Rng& rng) {
  data.check_consistent();
  KnockoffPair pair;
  pair.original = data.values;
  pair.generator = generator_name(model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if (!m.trained)
          throw ContractError("generate_knockoffs: model has not been trained");
        if constexpr (std::is_same_v<T, GaussianVae>) {
          if (data.cols() != m.encoder_mu.input_width)
            throw DimensionError("generate_knockoffs: data width mismatch");
          Matrix mu = nn::forward_eval(m.encoder_mu, data.values);
          Matrix ls = nn::forward_eval(m.encoder_logsigma, data.values);
          Matrix z = reparam_sample_gaussian(mu, ls, rng);
          Matrix out = nn::forward_eval(m.decoder, z);
          if (m.data_kind == ColumnKind::Continuous) {
            if (m.continuous_output == ContinuousOutput::GaussianNoise &&
                m.output_noise_sigma > 0.0)
              out += m.output_noise_sigma * rng.normal_matrix(out.rows(), out.cols());
            pair.knockoff = std::move(out);
          } else {
            pair.knockoff = binary_output(out, m.binary_output, rng);
          }
        } else {
          if (data.cols() != m.encoder.input_width)
            throw DimensionError("generate_knockoffs: data width mismatch");
          Matrix logits = nn::forward_eval(m.encoder, data.values);
          Matrix z = gumbel_softmax_sample(logits, m.temperature, m.categories, rng);
          Matrix probs = nn::forward_eval(m.decoder, z);
          pair.knockoff = binary_output(probs, m.binary_output, rng);
        }
      },
      model);
  return pair;
}

VaeModel make_preset(const std::string& name, Index input_width) {
  using nn::Activation;
  if (name == "s1-vae") {
    GaussianVae m;
    m.preset = name;
    m.latent_dim = 300;
    m.data_kind = ColumnKind::Continuous;
    for (nn::MlpModel* enc : {&m.encoder_mu, &m.encoder_logsigma}) {
      enc->input_width = input_width;
      nn::add_dense(*enc, 500, Activation::Tanh, 0.2);
      nn::add_dense(*enc, 400, Activation::Tanh, 0.2);
      nn::add_dense(*enc, m.latent_dim, Activation::Linear);
    }
    m.decoder.input_width = m.latent_dim;
    nn::add_dense(m.decoder, 500, Activation::Tanh, 0.2);
    nn::add_dense(m.decoder, 400, Activation::Tanh, 0.2);
    nn::add_batch_norm(m.decoder);
    nn::add_dense(m.decoder, input_width, Activation::Linear);
    return m;
  }
  if (name == "s2-vae") {
    GaussianVae m;
    m.preset = name;
    m.latent_dim = 300;
    m.data_kind = ColumnKind::Binary;
    m.binary_output = BinaryOutput::Threshold;
    for (nn::MlpModel* enc : {&m.encoder_mu, &m.encoder_logsigma}) {
      enc->input_width = input_width;
      nn::add_dense(*enc, 500, Activation::Relu, 0.3);
      nn::add_dense(*enc, 400, Activation::Relu, 0.3);
      nn::add_dense(*enc, m.latent_dim, Activation::Linear);
    }
    m.decoder.input_width = m.latent_dim;
    nn::add_dense(m.decoder, input_width, Activation::Sigmoid);
    return m;
  }
  if (name == "hiv-catvae") {
    CategoricalVae m;
    m.preset = name;
    m.num_groups = 20;
    m.categories = 10;
    m.temperature = 1.0;
    m.binary_output = BinaryOutput::BernoulliSample;
    m.encoder.input_width = input_width;
    nn::add_dense(m.encoder, 200, Activation::Relu);
    nn::add_dense(m.encoder, m.latent_width(), Activation::Linear);
    m.decoder.input_width = m.latent_width();
    nn::add_dense(m.decoder, 200, Activation::Relu);
    nn::add_dense(m.decoder, input_width, Activation::Sigmoid);
    return m;
  }
  throw ParseError("unknown vae preset: " + name);
}

std::string generator_name(const VaeModel& model) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        const char* base = std::is_same_v<T, GaussianVae> ? "vae" : "catvae";
        return m.preset.empty() ? base : std::string(base) + ":" + m.preset;
      },
      model);
}

void save_vae_checkpoint(const std::filesystem::path& path, const VaeModel& model,
                         std::uint64_t seed) {
  nlohmann::json j;
  j["format_version"] = io::kCheckpointVersion;
  j["kind"] = "vae_checkpoint";
  j["seed"] = seed;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        j["trained"] = m.trained;
        j["epoch_losses"] = m.epoch_losses;
        j["preset"] = m.preset;
        if constexpr (std::is_same_v<T, GaussianVae>) {
          j["latent"] = {{"kind", "gaussian"},
                         {"latent_dim", m.latent_dim},
                         {"data_kind", to_string(m.data_kind)},
                         {"continuous_output",
                          m.continuous_output == ContinuousOutput::DeterministicMean
                              ? "deterministic_mean"
                              : "gaussian_noise"},
                         {"output_noise_sigma", m.output_noise_sigma},
                         {"binary_output",
                          m.binary_output == BinaryOutput::BernoulliSample
                              ? "bernoulli_sample"
                              : "threshold"}};
          j["encoder_mu"] = io::mlp_to_json(m.encoder_mu);
          j["encoder_logsigma"] = io::mlp_to_json(m.encoder_logsigma);
          j["decoder"] = io::mlp_to_json(m.decoder);
        } else {
          j["latent"] = {{"kind", "categorical"},
                         {"num_groups", m.num_groups},
                         {"categories", m.categories},
                         {"temperature", m.temperature},
                         {"binary_output",
                          m.binary_output == BinaryOutput::BernoulliSample
                              ? "bernoulli_sample"
                              : "threshold"}};
          j["encoder"] = io::mlp_to_json(m.encoder);
          j["decoder"] = io::mlp_to_json(m.decoder);
        }
      },
      model);
  io::save_json(path, j);
}

VaeModel load_vae_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j = io::load_json(path);
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != io::kCheckpointVersion)
    throw ParseError("unsupported vae checkpoint version in " + path.string());
  const auto& latent = j.at("latent");
  const std::string kind = latent.at("kind").get<std::string>();
  auto binary_output_of = [](const std::string& s) {
    return s == "bernoulli_sample" ? BinaryOutput::BernoulliSample
                                   : BinaryOutput::Threshold;
  };
  if (kind == "gaussian") {
    GaussianVae m;
    m.latent_dim = latent.at("latent_dim").get<Index>();
    m.data_kind = column_kind_from_string(latent.at("data_kind").get<std::string>());
    m.continuous_output =
        latent.at("continuous_output").get<std::string>() == "deterministic_mean"
            ? ContinuousOutput::DeterministicMean
            : ContinuousOutput::GaussianNoise;
    m.output_noise_sigma = latent.at("output_noise_sigma").get<double>();
    m.binary_output = binary_output_of(latent.at("binary_output").get<std::string>());
    m.encoder_mu = io::mlp_from_json(j.at("encoder_mu"));
    m.encoder_logsigma = io::mlp_from_json(j.at("encoder_logsigma"));
    m.decoder = io::mlp_from_json(j.at("decoder"));
    m.trained = j.at("trained").get<bool>();
    m.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    m.preset = j.at("preset").get<std::string>();
    check_spec(m);
    return m;
  }
  if (kind == "categorical") {
    CategoricalVae m;
    m.num_groups = latent.at("num_groups").get<Index>();
    m.categories = latent.at("categories").get<Index>();
    m.temperature = latent.at("temperature").get<double>();
    m.binary_output = binary_output_of(latent.at("binary_output").get<std::string>());
    m.encoder = io::mlp_from_json(j.at("encoder"));
    m.decoder = io::mlp_from_json(j.at("decoder"));
    m.trained = j.at("trained").get<bool>();
    m.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    m.preset = j.at("preset").get<std::string>();
    check_spec(m);
    return m;
  }
  throw ParseError("unknown latent kind in checkpoint: " + kind);
}

}  // namespace knockoff::vae
