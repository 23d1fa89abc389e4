#ifndef UNIREG_HARNESS_CONFIG_HPP_
#define UNIREG_HARNESS_CONFIG_HPP_

// Experiment configuration. Files are flat key = value text; "[section]"
// lines prefix the keys that follow with "section.". Every key must appear
// in the key table below, which also carries the defaults; a run's echoed
// configuration is the fully resolved key set.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unireg/nn.hpp"
#include "unireg/regularizer.hpp"

namespace unireg::harness {

enum class Experiment { kPriorLadder, kZsda, kEpisodic, kMetricLearning, kOod };

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);

// Ordered key -> raw value text.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(std::string_view text);
ConfigMap read_config_file(const std::filesystem::path& path);
// "key=value"; replaces any existing value.
void apply_override(ConfigMap& map, std::string_view assignment);
std::string format_config(const ConfigMap& map);

enum class KeyType { kString, kInt, kReal, kBool, kIntList, kChoice };

struct KeySpec {
  std::string key;
  KeyType type;
  // Experiments the key applies to; empty means all.
  std::vector<Experiment> scope;
  std::string default_value;
  std::map<Experiment, std::string> default_for;
  std::vector<std::string> choices;
  std::string doc;

  bool applies_to(Experiment e) const;
  // Empty when the key has no default for this experiment (optional key).
  std::string default_in(Experiment e) const;
};

const std::vector<KeySpec>& key_table();
// Markdown table of every key, for the docs.
std::string key_table_markdown();

// Validates keys and value types against the table and fills defaults.
// Unknown keys, keys outside the selected experiment and malformed values
// raise ConfigError carrying the key path.
ConfigMap resolve(const ConfigMap& raw);

struct TaskConfig {
  // Synthetic task geometry.
  std::uint64_t seed = 0;
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;
  double class_scale = 0.0;
  double mean_spread = 0.0;
  double shift_rotation_deg = 0.0;
  double shift_translation = 0.0;
  double shift_scale = 1.0;
  std::size_t train_size = 0;
  std::size_t eval_size = 0;
  std::string source;  // "synthetic" or "idx"
  std::string idx_train_images, idx_train_labels;
  std::string idx_eval_images, idx_eval_labels;
  // Latent-class tasks.
  std::size_t latent_dim = 0;
  std::size_t nuisance_dim = 0;
  double nuisance_scale = 0.0;
  std::size_t train_classes = 0;
  std::size_t eval_classes = 0;
  std::size_t samples_per_class = 0;
  std::size_t n_way = 0, k_shot = 0, q_queries = 0;
  std::size_t eval_episodes = 0;
  std::size_t classes_per_batch = 0;
  double margin = 0.0;
  // Image tasks.
  std::size_t image_side = 0;
  double pixel_noise = 0.0;
};

struct EvalConfig {
  std::size_t every = 0;
  std::size_t bins_per_dim = 4;
  std::size_t entropy_k = 1;
  std::size_t probe_budget = 0;
  double probe_lr = 1e-3;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kZsda;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string run_id;

  std::size_t steps = 0;
  std::size_t batch_size = 0;
  std::size_t log_every = 0;
  std::string optimizer;
  double lr = 0.0;

  std::vector<std::size_t> encoder_hidden;
  nn::Activation encoder_activation = nn::Activation::kRelu;
  std::size_t embedding_dim = 0;

  // Absent means the unregularized baseline.
  std::optional<double> gamma;
  // Always built: the baseline keeps a passive discriminator as a monitor.
  RegularizerConfig regularizer;

  TaskConfig task;
  EvalConfig eval;
  std::size_t sweep_seeds = 0;

  // Resolved key set this config was built from, and the keys in it that
  // came from the defaults table.
  ConfigMap resolved;
  std::vector<std::string> defaulted_keys;

  bool regularized() const { return gamma.has_value(); }
  nn::MlpSpec encoder_spec(std::size_t input_dim) const;
};

ExperimentConfig build_config(const ConfigMap& raw);

}  // namespace unireg::harness

#endif  // UNIREG_HARNESS_CONFIG_HPP_
