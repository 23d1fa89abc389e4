#include "unireg/regularizer.hpp"

#include <string>

#include "unireg/error.hpp"

namespace unireg {

std::string_view generator_loss_name(GeneratorLoss form) {
  return form == GeneratorLoss::kSaturating ? "saturating" : "non_saturating";
}

GeneratorLoss parse_generator_loss(std::string_view name) {
  if (name == "saturating") return GeneratorLoss::kSaturating;
  if (name == "non_saturating") return GeneratorLoss::kNonSaturating;
  throw ConfigError("expected saturating or non_saturating, got '" +
                        std::string(name) + "'",
                    "regularizer.generator_loss");
}

RegularizerConfig RegularizerConfig::defaults(std::size_t dim) {
  RegularizerConfig c;
  c.prior = PriorSpec::uniform(dim);
  c.disc_spec = nn::MlpSpec::discriminator(dim);
  return c;
}

RegularizerConfig RegularizerConfig::metric_learning(std::size_t dim) {
  RegularizerConfig c = defaults(dim);
  c.gamma = kMetricLearningGamma;
  return c;
}

void RegularizerConfig::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0", "regularizer.gamma");
  prior.validate();
  disc_spec.validate();
  if (disc_spec.input_width() != prior.dim) {
    throw ConfigError("discriminator input width must equal the prior dim",
                      "regularizer.prior");
  }
  if (disc_spec.output_width() != 1 ||
      disc_spec.output_activation != nn::Activation::kSigmoid) {
    throw ConfigError("discriminator must end in a single sigmoid unit");
  }
  if (disc_updates_per_task_update == 0) {
    throw ConfigError("must be positive", "regularizer.disc_updates");
  }
  if (!(disc_optimizer.lr > 0.0)) {
    throw ConfigError("must be positive", "regularizer.disc_lr");
  }
}

namespace {

void require_probabilities(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError(std::string(what) +
                          ": discriminator outputs must lie in [0, 1], got " +
                          std::to_string(v));
    }
  }
}

ad::Var one_minus(ad::Var x) { return ad::add_scalar(ad::neg(x), 1.0); }

}  // namespace

ad::Var safe_log(ad::Var x) { return ad::log(ad::clamp_min(x, kLogFloor)); }

ad::Var discriminator_loss(ad::Var d_on_embeddings, ad::Var d_on_prior) {
  require_probabilities(d_on_embeddings.value(), "discriminator_loss");
  require_probabilities(d_on_prior.value(), "discriminator_loss");
  return ad::add(ad::mean(safe_log(one_minus(d_on_embeddings))),
                 ad::mean(safe_log(d_on_prior)));
}

ad::Var uniformity_loss(ad::Var d_on_embeddings, GeneratorLoss form) {
  require_probabilities(d_on_embeddings.value(), "uniformity_loss");
  if (form == GeneratorLoss::kSaturating) {
    return ad::mean(safe_log(one_minus(d_on_embeddings)));
  }
  return ad::neg(ad::mean(safe_log(d_on_embeddings)));
}

double discriminator_accuracy(const Tensor& d_on_embeddings,
                              const Tensor& d_on_prior) {
  double fake_right = 0.0;
  for (double v : d_on_embeddings.values()) fake_right += v < 0.5 ? 1.0 : 0.0;
  double real_right = 0.0;
  for (double v : d_on_prior.values()) real_right += v > 0.5 ? 1.0 : 0.0;
  return 0.5 * (fake_right / static_cast<double>(d_on_embeddings.numel()) +
                real_right / static_cast<double>(d_on_prior.numel()));
}

Discriminator::Discriminator(nn::MlpSpec spec, nn::AdamConfig optimizer,
                             std::uint64_t seed)
    : spec_(std::move(spec)),
      params_(nn::init_parameters(spec_, seed)),
      optimizer_(optimizer) {}

Discriminator::UpdateResult Discriminator::update(const Tensor& embeddings,
                                                  const Tensor& prior_samples) {
  ad::Tape tape;
  ad::Var d_fake = (*this)(tape.constant(embeddings), true);
  ad::Var d_real = (*this)(tape.constant(prior_samples), true);
  ad::Var objective = discriminator_loss(d_fake, d_real);
  UpdateResult result{objective.item(),
                      discriminator_accuracy(d_fake.value(), d_real.value())};
  tape.backward(ad::neg(objective));
  optimizer_.step(params_);
  params_.zero_grad();
  return result;
}

UniformityRegularizer::UniformityRegularizer(RegularizerConfig config,
                                             std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      discriminator_(config_.disc_spec, config_.disc_optimizer, seed) {}

bool gradient_isolation_check(const IsolationSnapshot& s) {
  return s.theta_before_disc == s.theta_after_disc &&
         s.disc_before_theta == s.disc_after_theta;
}

namespace {

void check_embedding_width(const Tensor& z, const RegularizerConfig& config) {
  if (z.rank() != 2 || z.cols() != config.prior.dim) {
    throw ConfigError("encoder output " + shape_string(z.shape()) +
                          " does not match prior dim " +
                          std::to_string(config.prior.dim),
                      "encoder.embedding_dim");
  }
}

void discriminator_phase(UniformityRegularizer& reg, const TaskStep& step,
                         Rng& prior_rng) {
  Tensor z;
  {
    ad::Tape tape;
    z = step.embed(tape, false).value();
  }
  const RegularizerConfig& config = reg.config();
  check_embedding_width(z, config);
  for (std::size_t k = 0; k < config.disc_updates_per_task_update; ++k) {
    Tensor prior = sample_prior(config.prior, z.rows(), prior_rng);
    reg.discriminator().update(z, prior);
  }
}

StepReport encoder_phase(nn::ParameterStore& theta, nn::Optimizer& optimizer,
                         const TaskStep& step, UniformityRegularizer& reg,
                         Rng& prior_rng, bool apply_regularizer) {
  const RegularizerConfig& config = reg.config();
  Discriminator& disc = reg.discriminator();
  ad::Tape tape;
  ad::Var z = step.embed(tape, true);
  check_embedding_width(z.value(), config);
  ad::Var task = step.task_loss(tape, z);
  ad::Var d_fake = disc(z, false);
  ad::Var uniformity = uniformity_loss(d_fake, config.generator_loss);

  Tensor prior = sample_prior(config.prior, z.value().rows(), prior_rng);
  ad::Var d_real = disc(tape.constant(std::move(prior)), false);
  const double disc_value = discriminator_loss(d_fake, d_real).item();

  StepReport report;
  report.task_loss = task.item();
  report.uniformity_loss = uniformity.item();
  report.disc_loss = disc_value;
  report.disc_accuracy = discriminator_accuracy(d_fake.value(), d_real.value());

  ad::Var total = apply_regularizer
                      ? ad::add(task, ad::scale(uniformity, config.gamma))
                      : task;
  tape.backward(total);
  optimizer.step(theta);
  theta.zero_grad();
  return report;
}

}  // namespace

StepReport combined_step(nn::ParameterStore& theta, nn::Optimizer& theta_optimizer,
                         const TaskStep& step, UniformityRegularizer& regularizer,
                         Rng& prior_rng, IsolationSnapshot* snapshot) {
  if (snapshot) snapshot->theta_before_disc = theta.snapshot();
  discriminator_phase(regularizer, step, prior_rng);
  if (snapshot) {
    snapshot->theta_after_disc = theta.snapshot();
    snapshot->disc_before_theta = regularizer.discriminator().params().snapshot();
  }
  StepReport report =
      encoder_phase(theta, theta_optimizer, step, regularizer, prior_rng, true);
  if (snapshot) {
    snapshot->disc_after_theta = regularizer.discriminator().params().snapshot();
  }
  return report;
}

StepReport baseline_step(nn::ParameterStore& theta, nn::Optimizer& theta_optimizer,
                         const TaskStep& step, UniformityRegularizer& monitor,
                         Rng& prior_rng) {
  discriminator_phase(monitor, step, prior_rng);
  return encoder_phase(theta, theta_optimizer, step, monitor, prior_rng, false);
}

}  // namespace unireg
