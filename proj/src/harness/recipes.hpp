#ifndef UNIREG_SRC_HARNESS_RECIPES_HPP_
#define UNIREG_SRC_HARNESS_RECIPES_HPP_

#include <memory>

#include "json.hpp"
#include "unireg/harness/config.hpp"
#include "unireg/harness/metrics.hpp"
#include "unireg/regularizer.hpp"

namespace unireg::harness {

// Encoder parameters live under "enc.", task heads under "head.".
struct Model {
  nn::MlpSpec encoder;
  nn::ParameterStore theta;

  ad::Var embed(ad::Tape& tape, const Tensor& x, bool trainable) {
    return nn::forward_mlp(encoder, theta, tape.constant(x), trainable, "enc.");
  }
  Tensor embed_all(const Tensor& x) {
    ad::Tape tape;
    return embed(tape, x, false).value();
  }
};

class Recipe {
 public:
  virtual ~Recipe() = default;

  virtual std::size_t input_dim() const = 0;
  // Adds task-head parameters, if the recipe has any.
  virtual void init_head(Model& model, std::uint64_t seed) { (void)model, (void)seed; }
  // Draws the next training batch.
  virtual TaskStep next_step(Model& model, Rng& batch_rng) = 0;
  // Fills task metrics and returns the embeddings the uniformity
  // diagnostics are computed on.
  virtual Tensor evaluate(Model& model, MetricsRecord& record, Rng& eval_rng) = 0;
  // Recipe facts for the manifest (data sizes, class splits).
  virtual nlohmann::json describe() const = 0;
};

// Builds the recipe's data from the config; data draws use `data_rng`.
std::unique_ptr<Recipe> make_recipe(const ExperimentConfig& config, Rng& data_rng);

}  // namespace unireg::harness

#endif  // UNIREG_SRC_HARNESS_RECIPES_HPP_
