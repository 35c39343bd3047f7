#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "knockoff/nn.hpp"
#include "knockoff/rng.hpp"
#include "knockoff/types.hpp"

// Latent-variable knockoff generation: train an encoder/decoder pair on X,
// then produce knockoffs by encoding each observed row to Zt ~ Q(Z|X=x) and
// decoding Xt ~ Q(X|Z=Zt). Two instantiations: Gaussian latent (diagonal
// N(mu(x), sigma^2(x)) posterior, standard normal prior) and categorical
// latent (Gumbel-Softmax groups, uniform prior). The API never sees the
// response: knockoffs are constructed from X alone.
namespace knockoff::vae {

struct TrainingConfig {
  Index batch_size = 25;
  Index epochs = 20;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
};

// How continuous knockoff entries leave the decoder.
enum class ContinuousOutput {
  DeterministicMean,  // Xt = f(Zt); the default working-noise limit
  GaussianNoise,      // Xt = f(Zt) + N(0, sigma^2), sigma configurable
};

// How binary knockoff entries leave the (sigmoid) decoder.
enum class BinaryOutput { BernoulliSample, Threshold };

struct GaussianVae {
  Index latent_dim = 300;
  nn::MlpModel encoder_mu;
  nn::MlpModel encoder_logsigma;
  nn::MlpModel decoder;
  ColumnKind data_kind = ColumnKind::Continuous;
  ContinuousOutput continuous_output = ContinuousOutput::DeterministicMean;
  double output_noise_sigma = 0.0;
  BinaryOutput binary_output = BinaryOutput::Threshold;
  bool trained = false;
  std::vector<double> epoch_losses;
  std::string preset;
};

struct CategoricalVae {
  Index num_groups = 20;
  Index categories = 10;
  double temperature = 1.0;
  nn::MlpModel encoder;  // emits num_groups * categories logits
  nn::MlpModel decoder;  // sigmoid output in (0,1) per entry
  BinaryOutput binary_output = BinaryOutput::BernoulliSample;
  bool trained = false;
  std::vector<double> epoch_losses;
  std::string preset;

  Index latent_width() const { return num_groups * categories; }
};

using VaeModel = std::variant<GaussianVae, CategoricalVae>;

void check_spec(const GaussianVae& m);
void check_spec(const CategoricalVae& m);

// ---------------------------------------------------------------------------
// Sampling primitives (deterministic given the injected draws)
// ---------------------------------------------------------------------------

// z = mu + exp(logsigma) .* eps; differentiable in mu and logsigma.
Matrix reparam_gaussian(const Matrix& mu, const Matrix& logsigma, const Matrix& eps);
Matrix reparam_sample_gaussian(const Matrix& mu, const Matrix& logsigma, Rng& rng);

// softmax((logits + g) / temperature) within each consecutive group of
// `group_size` columns; rows in the open simplex, groups summing to one.
Matrix gumbel_softmax_from_draws(const Matrix& logits, const Matrix& gumbel,
                                 double temperature, Index group_size);
Matrix gumbel_softmax_sample(const Matrix& logits, double temperature,
                             Index group_size, Rng& rng);

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

struct ElboParts {
  double loss = 0.0;            // reconstruction + kl + l2 (training objective)
  double reconstruction = 0.0;  // mean per-sample negative log-likelihood
  double kl = 0.0;              // mean per-sample KL(posterior || prior)
  double l2 = 0.0;
};

// Mean per-sample KL(N(mu, exp(2*logsigma)) || N(0, I)), summed over
// dimensions: 0.5 * (mu^2 + sigma^2 - 1 - log sigma^2) per coordinate.
double gaussian_kl_term(const Matrix& mu, const Matrix& logsigma);

// Mean per-sample sum over groups of KL(softmax(logits_g) || uniform).
double categorical_kl_term(const Matrix& logits, Index group_size);

struct GaussianGrads {
  nn::Gradients encoder_mu, encoder_logsigma, decoder;
};
struct CategoricalGrads {
  nn::Gradients encoder, decoder;
};

// Loss and parameter gradients on one batch, with the randomness injected so
// the whole map (params, batch, draws) -> loss is deterministic and finite-
// difference checkable. eps/gumbel have the shape of the latent batch.
ElboParts elbo_with_gradients(GaussianVae& model, const Matrix& batch,
                              const Matrix& eps, GaussianGrads* grads);
ElboParts elbo_with_gradients(CategoricalVae& model, const Matrix& batch,
                              const Matrix& gumbel, CategoricalGrads* grads);

// Convenience: loss only, drawing the noise from `rng`.
ElboParts elbo_loss(VaeModel& model, const DataMatrix& batch, Rng& rng);

// ---------------------------------------------------------------------------
// Training and generation
// ---------------------------------------------------------------------------

// Initializes parameters from cfg.seed, runs minibatch Adam for cfg.epochs
// epochs with per-epoch reshuffling, and returns the frozen result with the
// per-epoch loss log. epochs = 0 returns the freshly initialized model with
// no optimization steps. Throws TrainingDivergence naming epoch/batch if the
// loss goes non-finite.
VaeModel train(VaeModel spec, const DataMatrix& data, const TrainingConfig& cfg);

// Algorithm steps 3-4: Zt from the encoder posterior at each observed row,
// Xt from the decoder at Zt. Deterministic given (model, data, rng state).
KnockoffPair generate_knockoffs(const VaeModel& model, const DataMatrix& data,
                                Rng& rng);

// ---------------------------------------------------------------------------
// Presets and checkpoints
// ---------------------------------------------------------------------------

// "s1-vae":     Gaussian latent 300; encoders 500/400 tanh, L2 0.2, linear
//               heads; decoder 500/400 tanh + batch-norm + linear output;
//               continuous data, deterministic-mean output.
// "s2-vae":     Gaussian latent 300; encoders 500/400 relu, L2 0.3, linear
//               heads; one-layer sigmoid decoder; binary data, threshold 0.5.
// "hiv-catvae": 20 Gumbel-Softmax groups of 10 categories, temperature 1;
//               one hidden layer of 200 (relu) on both sides; sigmoid
//               decoder; binary data, Bernoulli sampling.
VaeModel make_preset(const std::string& name, Index input_width);

std::string generator_name(const VaeModel& model);

void save_vae_checkpoint(const std::filesystem::path& path, const VaeModel& model,
                         std::uint64_t seed);
VaeModel load_vae_checkpoint(const std::filesystem::path& path);

}  // namespace knockoff::vae
