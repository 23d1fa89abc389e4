#ifndef UNIREG_REGULARIZER_HPP_
#define UNIREG_REGULARIZER_HPP_

// Adversarial uniformity regularization. A discriminator D learns to tell
// encoder embeddings z = q(x) apart from prior samples z~ ~ r(z); the
// encoder is trained on its task loss plus gamma times a term that rewards
// fooling D. The two players alternate: D steps see embeddings as
// constants, encoder steps see D as a constant.

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "unireg/autodiff.hpp"
#include "unireg/nn.hpp"
#include "unireg/priors.hpp"
#include "unireg/rng.hpp"

namespace unireg {

enum class GeneratorLoss {
  // min E[log(1 - D(z))]
  kSaturating,
  // min E[-log D(z)]
  kNonSaturating,
};

std::string_view generator_loss_name(GeneratorLoss form);
GeneratorLoss parse_generator_loss(std::string_view name);

inline constexpr double kDefaultGamma = 0.1;
inline constexpr double kMetricLearningGamma = 0.4;
inline constexpr double kDiscriminatorLearningRate = 1e-5;

struct RegularizerConfig {
  double gamma = kDefaultGamma;
  PriorSpec prior;
  nn::MlpSpec disc_spec;
  nn::AdamConfig disc_optimizer{kDiscriminatorLearningRate};
  std::size_t disc_updates_per_task_update = 1;
  GeneratorLoss generator_loss = GeneratorLoss::kSaturating;

  // gamma 0.1, U(-1,1)^dim prior, [dim,100,100,1] discriminator.
  static RegularizerConfig defaults(std::size_t dim);
  // Same with gamma 0.4.
  static RegularizerConfig metric_learning(std::size_t dim);

  void validate() const;
};

// Floor applied before taking logs of discriminator outputs.
inline constexpr double kLogFloor = 1e-12;

// log(max(x, 1e-12)).
ad::Var safe_log(ad::Var x);

// E[log(1 - D(z))] + E[log D(z~)], the quantity D ascends. Bounded above
// by 0. Inputs are [b x 1] discriminator outputs in [0, 1]; anything else
// raises ContractError.
ad::Var discriminator_loss(ad::Var d_on_embeddings, ad::Var d_on_prior);

// Encoder-side term, minimized by the encoder.
ad::Var uniformity_loss(ad::Var d_on_embeddings, GeneratorLoss form);

// Fraction-correct averaged over the two classes with threshold 0.5:
// prior samples should score > 0.5, embeddings < 0.5.
double discriminator_accuracy(const Tensor& d_on_embeddings,
                              const Tensor& d_on_prior);

class Discriminator {
 public:
  Discriminator(nn::MlpSpec spec, nn::AdamConfig optimizer, std::uint64_t seed);

  ad::Var operator()(ad::Var z, bool trainable) {
    return nn::forward_mlp(spec_, params_, z, trainable);
  }

  struct UpdateResult {
    double objective = 0.0;  // discriminator_loss before the update
    double accuracy = 0.0;
  };

  // One Adam ascent step on discriminator_loss with both batches held
  // constant.
  UpdateResult update(const Tensor& embeddings, const Tensor& prior_samples);

  const nn::MlpSpec& spec() const { return spec_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  nn::AdamState& optimizer() { return optimizer_; }

 private:
  nn::MlpSpec spec_;
  nn::ParameterStore params_;
  nn::AdamState optimizer_;
};

class UniformityRegularizer {
 public:
  UniformityRegularizer(RegularizerConfig config, std::uint64_t seed);

  const RegularizerConfig& config() const { return config_; }
  Discriminator& discriminator() { return discriminator_; }
  const Discriminator& discriminator() const { return discriminator_; }

 private:
  RegularizerConfig config_;
  Discriminator discriminator_;
};

// Task side of one training step. Both callables build onto the given tape.
struct TaskStep {
  // Embeddings [b x d_z] for the current batch; encoder parameters are
  // trainable leaves iff `trainable`.
  std::function<ad::Var(ad::Tape&, bool trainable)> embed;
  // Scalar task loss given the embeddings just produced.
  std::function<ad::Var(ad::Tape&, ad::Var embeddings)> task_loss;
};

struct StepReport {
  double task_loss = 0.0;
  double uniformity_loss = 0.0;
  double disc_loss = 0.0;
  double disc_accuracy = 0.0;
};

// Parameter copies taken around the two phases of a step.
struct IsolationSnapshot {
  std::vector<Tensor> theta_before_disc;
  std::vector<Tensor> theta_after_disc;
  std::vector<Tensor> disc_before_theta;
  std::vector<Tensor> disc_after_theta;
};

// True iff the discriminator phase left theta untouched and the encoder
// phase left the discriminator untouched.
bool gradient_isolation_check(const IsolationSnapshot& snapshot);

// Alternating step: (1) embeddings under the current theta are frozen and D
// takes disc_updates_per_task_update ascent steps, each on a fresh prior
// batch; (2) embeddings are recomputed and theta descends
// L_T + gamma * uniformity_loss with D frozen. The report's discriminator
// fields are measured in phase (2) against another fresh prior batch.
// Throws ConfigError if the embedding width differs from the prior dim.
StepReport combined_step(nn::ParameterStore& theta, nn::Optimizer& theta_optimizer,
                         const TaskStep& step, UniformityRegularizer& regularizer,
                         Rng& prior_rng, IsolationSnapshot* snapshot = nullptr);

// Unregularized step: theta descends L_T alone. The discriminator still
// trains as a passive monitor, so the report has the same fields and the
// prior stream is consumed identically to combined_step.
StepReport baseline_step(nn::ParameterStore& theta, nn::Optimizer& theta_optimizer,
                         const TaskStep& step, UniformityRegularizer& monitor,
                         Rng& prior_rng);

}  // namespace unireg

#endif  // UNIREG_REGULARIZER_HPP_
