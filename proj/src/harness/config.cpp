#include "unireg/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unireg/error.hpp"

namespace unireg::harness {

namespace {

constexpr Experiment kAll[] = {Experiment::kPriorLadder, Experiment::kZsda,
                               Experiment::kEpisodic, Experiment::kMetricLearning,
                               Experiment::kOod};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using enum Experiment;
using K = KeyType;

std::vector<KeySpec> build_table() {
  const std::vector<Experiment> blobs = {kZsda, kPriorLadder};
  const std::vector<Experiment> images = {kZsda, kPriorLadder, kOod};
  const std::vector<Experiment> latent = {kEpisodic, kMetricLearning};
  const std::vector<Experiment> batched = {kZsda, kPriorLadder, kMetricLearning, kOod};
  const std::vector<Experiment> single = {kZsda, kEpisodic, kMetricLearning, kOod};
  return {
      {"experiment", K::kChoice, {}, "zsda", {}, {"prior_ladder", "zsda", "episodic", "metric_learning", "ood"},
       "Recipe to run."},
      {"seed", K::kInt, {}, "0", {}, {}, "Run seed; every random stream derives from it."},
      {"output.dir", K::kString, {}, "runs", {}, {}, "Parent directory of run directories."},
      {"output.run_id", K::kString, {}, "", {}, {}, "Run directory name; defaults to <experiment>-<tag>-s<seed>."},

      {"train.steps", K::kInt, {}, "3000", {}, {}, "Training steps."},
      {"train.batch_size", K::kInt, batched, "64", {}, {}, "Rows per training batch."},
      {"train.log_every", K::kInt, {}, "50", {}, {}, "Steps between training rows in the metrics file."},
      {"train.optimizer", K::kChoice, {}, "adam", {}, {"adam", "sgd"}, "Encoder optimizer."},
      {"train.lr", K::kReal, {}, "1e-3", {}, {}, "Encoder learning rate."},

      {"encoder.hidden", K::kIntList, {}, "64", {}, {}, "Hidden widths of the MLP encoder, comma separated."},
      {"encoder.activation", K::kChoice, {}, "relu", {}, {"relu", "tanh"}, "Encoder hidden activation."},
      {"encoder.embedding_dim", K::kInt, {}, "8", {}, {}, "Width of the regularized feature layer."},

      {"regularizer.gamma", K::kString, {}, "", {}, {},
       "Uniformity weight, or 'preset' (0.1; 0.4 for metric_learning). Omit for the baseline. "
       "In prior_ladder, the weight of every ladder cell (preset when omitted)."},
      {"regularizer.prior", K::kChoice, single, "uniform", {}, {"uniform", "gaussian"}, "Prior family."},
      {"regularizer.prior.low", K::kReal, single, "-1", {}, {}, "Uniform prior lower bound."},
      {"regularizer.prior.high", K::kReal, single, "1", {}, {}, "Uniform prior upper bound."},
      {"regularizer.prior.mean", K::kReal, single, "0", {}, {}, "Gaussian prior mean."},
      {"regularizer.prior.variance_scale", K::kReal, single, "1", {}, {}, "Gaussian prior variance c in N(mean, cI)."},
      {"regularizer.disc_hidden", K::kIntList, {}, "100,100", {}, {}, "Discriminator hidden widths."},
      {"regularizer.disc_lr", K::kReal, {}, "1e-5", {}, {}, "Discriminator Adam learning rate."},
      {"regularizer.disc_updates", K::kInt, {}, "1", {}, {}, "Discriminator steps per encoder step."},
      {"regularizer.generator_loss", K::kChoice, {}, "saturating", {}, {"saturating", "non_saturating"},
       "Encoder-side adversarial term."},

      {"task.seed", K::kInt, {}, "0", {}, {}, "Seed of the synthetic task geometry (class means, glyphs)."},
      {"task.source", K::kChoice, images, "synthetic", {}, {"synthetic", "idx"}, "Synthetic data or IDX files."},
      {"task.n_classes", K::kInt, {}, "8", {{kEpisodic, "30"}, {kMetricLearning, "30"}, {kOod, "10"}}, {},
       "Number of synthetic classes."},
      {"task.input_dim", K::kInt, blobs, "16", {}, {}, "Blob input width."},
      {"task.class_scale", K::kReal, {kZsda, kPriorLadder, kEpisodic, kMetricLearning}, "0.5",
       {{kEpisodic, "0.6"}, {kMetricLearning, "0.6"}}, {}, "Within-class standard deviation."},
      {"task.mean_spread", K::kReal, blobs, "0.5", {}, {}, "Standard deviation of the blob class means."},
      {"task.shift.rotation_deg", K::kReal, blobs, "30", {}, {}, "Target rotation in the first two coordinates."},
      {"task.shift.translation", K::kReal, blobs, "0.5", {}, {}, "Target translation along every coordinate."},
      {"task.shift.scale", K::kReal, blobs, "1", {}, {}, "Target scale factor."},
      {"task.train_size", K::kInt, images, "400", {{kOod, "1000"}}, {}, "Training rows."},
      {"task.eval_size", K::kInt, images, "2000", {{kOod, "1000"}}, {}, "Evaluation rows per split."},
      {"task.idx.train_images", K::kString, images, "", {}, {}, "IDX training images (task.source = idx)."},
      {"task.idx.train_labels", K::kString, images, "", {}, {}, "IDX training labels."},
      {"task.idx.eval_images", K::kString, images, "", {}, {},
       "IDX evaluation images: the target domain for zsda, the test set for ood."},
      {"task.idx.eval_labels", K::kString, images, "", {}, {}, "IDX evaluation labels."},
      {"task.latent_dim", K::kInt, latent, "8", {}, {}, "Class-bearing latent width."},
      {"task.nuisance_dim", K::kInt, latent, "8", {}, {}, "Nuisance noise width."},
      {"task.nuisance_scale", K::kReal, latent, "1.5", {}, {}, "Nuisance noise standard deviation."},
      {"task.train_classes", K::kInt, latent, "20", {}, {}, "Classes seen in training."},
      {"task.eval_classes", K::kInt, latent, "10", {}, {}, "Held-out classes, disjoint from training."},
      {"task.samples_per_class", K::kInt, latent, "20", {}, {}, "Rows drawn per class for each pool."},
      {"task.n_way", K::kInt, {kEpisodic}, "5", {}, {}, "Classes per episode."},
      {"task.k_shot", K::kInt, {kEpisodic}, "1", {}, {}, "Support rows per class."},
      {"task.q_queries", K::kInt, {kEpisodic}, "5", {}, {}, "Query rows per class."},
      {"task.eval_episodes", K::kInt, {kEpisodic}, "200", {}, {}, "Episodes in each evaluation."},
      {"task.classes_per_batch", K::kInt, {kMetricLearning}, "8", {}, {}, "Classes per metric-learning batch."},
      {"task.margin", K::kReal, {kMetricLearning}, "1", {}, {}, "Contrastive margin."},
      {"task.image_side", K::kInt, {kOod}, "16", {}, {}, "Glyph image side in pixels."},
      {"task.pixel_noise", K::kReal, {kOod}, "0.1", {}, {}, "Glyph pixel noise standard deviation."},

      {"eval.every", K::kInt, {}, "0", {}, {}, "Steps between evaluations; 0 evaluates only after the last step."},
      {"eval.bins_per_dim", K::kInt, {}, "4", {}, {}, "Occupancy grid resolution."},
      {"eval.entropy_k", K::kInt, {}, "1", {}, {}, "Neighbour order of the entropy estimate."},
      {"eval.probe_budget", K::kInt, {}, "200", {}, {}, "Probe Adam steps; 0 skips the probe."},
      {"eval.probe_lr", K::kReal, {}, "1e-3", {}, {}, "Probe learning rate."},

      {"sweep.seeds", K::kInt, {}, "5", {}, {}, "Seeds per sweep cell (seed, seed+1, ...)."},
  };
}

const KeySpec* find_key(std::string_view key) {
  for (const KeySpec& k : key_table()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

bool parse_int(std::string_view s, std::uint64_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool parse_real(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

std::vector<std::size_t> parse_list(const std::string& key, std::string_view s) {
  std::vector<std::size_t> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    std::uint64_t v = 0;
    if (!parse_int(trim(s.substr(start, comma - start)), v) || v == 0) {
      throw ConfigError("expected comma-separated positive integers, got '" + std::string(s) + "'",
                        key);
    }
    out.push_back(static_cast<std::size_t>(v));
    start = comma + 1;
  }
  return out;
}

void check_value(const KeySpec& spec, const std::string& value) {
  std::uint64_t i = 0;
  double r = 0;
  switch (spec.type) {
    case K::kString:
      return;
    case K::kInt:
      if (!parse_int(value, i)) throw ConfigError("expected a non-negative integer, got '" + value + "'", spec.key);
      return;
    case K::kReal:
      if (!parse_real(value, r) || !std::isfinite(r)) {
        throw ConfigError("expected a real number, got '" + value + "'", spec.key);
      }
      return;
    case K::kBool:
      if (value != "true" && value != "false") throw ConfigError("expected true or false", spec.key);
      return;
    case K::kIntList:
      parse_list(spec.key, value);
      return;
    case K::kChoice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError("expected one of {" + all + "}, got '" + value + "'", spec.key);
      }
      return;
  }
}

// Typed accessors over a resolved map.
struct Reader {
  const ConfigMap& map;

  const std::string& str(const std::string& key) const { return map.at(key); }
  std::size_t integer(const std::string& key) const {
    std::uint64_t v = 0;
    parse_int(map.at(key), v);
    return static_cast<std::size_t>(v);
  }
  std::size_t positive(const std::string& key) const {
    const std::size_t v = integer(key);
    if (v == 0) throw ConfigError("must be positive", key);
    return v;
  }
  double real(const std::string& key) const {
    double v = 0;
    parse_real(map.at(key), v);
    return v;
  }
  std::vector<std::size_t> list(const std::string& key) const {
    return parse_list(key, map.at(key));
  }
  bool has(const std::string& key) const { return map.count(key) && !map.at(key).empty(); }
};

}  // namespace

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case kPriorLadder: return "prior_ladder";
    case kZsda: return "zsda";
    case kEpisodic: return "episodic";
    case kMetricLearning: return "metric_learning";
    case kOod: return "ood";
  }
  return "zsda";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : kAll) {
    if (experiment_name(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'", "experiment");
}

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap map;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (map.count(key)) throw ConfigError("duplicate key", key);
    map[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return map;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(ConfigMap& map, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override has an empty key");
  map[key] = trim(assignment.substr(eq + 1));
}

std::string format_config(const ConfigMap& map) {
  std::string out;
  for (const auto& [k, v] : map) out += k + " = " + v + "\n";
  return out;
}

bool KeySpec::applies_to(Experiment e) const {
  return scope.empty() || std::find(scope.begin(), scope.end(), e) != scope.end();
}

std::string KeySpec::default_in(Experiment e) const {
  const auto it = default_for.find(e);
  return it == default_for.end() ? default_value : it->second;
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = build_table();
  return table;
}

std::string key_table_markdown() {
  std::string out = "| key | type | default | experiments | description |\n|---|---|---|---|---|\n";
  for (const KeySpec& k : key_table()) {
    const char* type = "";
    switch (k.type) {
      case K::kString: type = "string"; break;
      case K::kInt: type = "int"; break;
      case K::kReal: type = "real"; break;
      case K::kBool: type = "bool"; break;
      case K::kIntList: type = "int list"; break;
      case K::kChoice: type = "choice"; break;
    }
    std::string def = k.default_value.empty() ? "(unset)" : "`" + k.default_value + "`";
    for (const auto& [e, v] : k.default_for) {
      def += "; " + std::string(experiment_name(e)) + ": `" + v + "`";
    }
    std::string scope;
    for (Experiment e : k.scope) scope += (scope.empty() ? "" : ", ") + std::string(experiment_name(e));
    if (scope.empty()) scope = "all";
    std::string doc = k.doc;
    if (!k.choices.empty()) {
      doc += " One of:";
      for (const auto& c : k.choices) doc += " `" + c + "`";
      doc += ".";
    }
    out += "| `" + k.key + "` | " + type + " | " + def + " | " + scope + " | " + doc + " |\n";
  }
  return out;
}

ConfigMap resolve(const ConfigMap& raw) {
  const auto exp_it = raw.find("experiment");
  const std::string exp_name = exp_it == raw.end() ? "zsda" : exp_it->second;
  check_value(*find_key("experiment"), exp_name);
  const Experiment exp = parse_experiment(exp_name);

  for (const auto& [key, value] : raw) {
    const KeySpec* spec = find_key(key);
    if (spec == nullptr) throw ConfigError("unknown key", key);
    if (!spec->applies_to(exp)) {
      throw ConfigError("key is not used by experiment " + exp_name, key);
    }
    if (!(spec->type == K::kString && value.empty())) check_value(*spec, value);
  }

  ConfigMap resolved;
  for (const KeySpec& spec : key_table()) {
    if (!spec.applies_to(exp)) continue;
    const auto it = raw.find(spec.key);
    if (it != raw.end()) {
      if (!it->second.empty()) resolved[spec.key] = it->second;
    } else if (std::string d = spec.default_in(exp); !d.empty()) {
      resolved[spec.key] = d;
    }
  }
  resolved["experiment"] = exp_name;
  return resolved;
}

nn::MlpSpec ExperimentConfig::encoder_spec(std::size_t input_dim) const {
  nn::MlpSpec spec;
  spec.layer_widths.push_back(input_dim);
  for (std::size_t h : encoder_hidden) spec.layer_widths.push_back(h);
  spec.layer_widths.push_back(embedding_dim);
  spec.hidden_activation = encoder_activation;
  spec.output_activation = nn::Activation::kNone;
  return spec;
}

ExperimentConfig build_config(const ConfigMap& raw) {
  ExperimentConfig c;
  c.resolved = resolve(raw);
  for (const auto& [key, value] : c.resolved) {
    if (!raw.count(key)) c.defaulted_keys.push_back(key);
  }
  const Reader r{c.resolved};
  c.experiment = parse_experiment(r.str("experiment"));
  c.seed = r.integer("seed");
  c.out_dir = r.str("output.dir");
  if (r.has("output.run_id")) c.run_id = r.str("output.run_id");

  c.steps = r.positive("train.steps");
  if (r.has("train.batch_size")) c.batch_size = r.positive("train.batch_size");
  c.log_every = r.positive("train.log_every");
  c.optimizer = r.str("train.optimizer");
  c.lr = r.real("train.lr");
  if (!(c.lr > 0.0)) throw ConfigError("must be positive", "train.lr");

  c.encoder_hidden = r.list("encoder.hidden");
  c.encoder_activation = nn::parse_activation(r.str("encoder.activation"));
  c.embedding_dim = r.positive("encoder.embedding_dim");

  const std::size_t dz = c.embedding_dim;
  RegularizerConfig& reg = c.regularizer;
  reg = RegularizerConfig::defaults(dz);
  if (r.has("regularizer.gamma")) {
    const std::string& g = r.str("regularizer.gamma");
    if (g == "preset") {
      c.gamma = c.experiment == kMetricLearning ? kMetricLearningGamma : kDefaultGamma;
    } else {
      double v = 0;
      if (!parse_real(g, v) || !(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError("expected a non-negative number or 'preset', got '" + g + "'",
                          "regularizer.gamma");
      }
      c.gamma = v;
    }
    reg.gamma = *c.gamma;
  }
  if (r.has("regularizer.prior")) {
    if (r.str("regularizer.prior") == "uniform") {
      reg.prior = PriorSpec::uniform(dz, r.real("regularizer.prior.low"), r.real("regularizer.prior.high"));
    } else {
      reg.prior = PriorSpec::gaussian(dz, r.real("regularizer.prior.mean"),
                                      r.real("regularizer.prior.variance_scale"));
    }
    try {
      reg.prior.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), "regularizer.prior");
    }
  }
  reg.disc_spec.layer_widths = {dz};
  for (std::size_t h : r.list("regularizer.disc_hidden")) reg.disc_spec.layer_widths.push_back(h);
  reg.disc_spec.layer_widths.push_back(1);
  reg.disc_optimizer.lr = r.real("regularizer.disc_lr");
  reg.disc_updates_per_task_update = r.positive("regularizer.disc_updates");
  reg.generator_loss = parse_generator_loss(r.str("regularizer.generator_loss"));
  reg.validate();

  TaskConfig& t = c.task;
  t.seed = r.integer("task.seed");
  auto opt_int = [&](const char* key, std::size_t& out) {
    if (r.has(key)) out = r.positive(key);
  };
  auto opt_real = [&](const char* key, double& out) {
    if (r.has(key)) out = r.real(key);
  };
  auto opt_str = [&](const char* key, std::string& out) {
    if (r.has(key)) out = r.str(key);
  };
  opt_int("task.n_classes", t.n_classes);
  opt_int("task.input_dim", t.input_dim);
  opt_real("task.class_scale", t.class_scale);
  opt_real("task.mean_spread", t.mean_spread);
  opt_real("task.shift.rotation_deg", t.shift_rotation_deg);
  opt_real("task.shift.translation", t.shift_translation);
  opt_real("task.shift.scale", t.shift_scale);
  opt_int("task.train_size", t.train_size);
  opt_int("task.eval_size", t.eval_size);
  opt_str("task.source", t.source);
  opt_str("task.idx.train_images", t.idx_train_images);
  opt_str("task.idx.train_labels", t.idx_train_labels);
  opt_str("task.idx.eval_images", t.idx_eval_images);
  opt_str("task.idx.eval_labels", t.idx_eval_labels);
  opt_int("task.latent_dim", t.latent_dim);
  if (r.has("task.nuisance_dim")) t.nuisance_dim = r.integer("task.nuisance_dim");
  opt_real("task.nuisance_scale", t.nuisance_scale);
  opt_int("task.train_classes", t.train_classes);
  opt_int("task.eval_classes", t.eval_classes);
  opt_int("task.samples_per_class", t.samples_per_class);
  opt_int("task.n_way", t.n_way);
  opt_int("task.k_shot", t.k_shot);
  opt_int("task.q_queries", t.q_queries);
  opt_int("task.eval_episodes", t.eval_episodes);
  opt_int("task.classes_per_batch", t.classes_per_batch);
  opt_real("task.margin", t.margin);
  opt_int("task.image_side", t.image_side);
  opt_real("task.pixel_noise", t.pixel_noise);

  if (t.source == "idx") {
    for (const char* key : {"task.idx.train_images", "task.idx.train_labels", "task.idx.eval_images",
                            "task.idx.eval_labels"}) {
      if (!r.has(key)) throw ConfigError("required when task.source = idx", key);
    }
  }
  if (c.experiment == kEpisodic || c.experiment == kMetricLearning) {
    if (t.train_classes + t.eval_classes > t.n_classes) {
      throw ConfigError("train and eval classes exceed task.n_classes", "task.eval_classes");
    }
  }
  if (c.experiment == kEpisodic && t.n_way > t.train_classes) {
    throw ConfigError("more ways than training classes", "task.n_way");
  }
  if (c.experiment == kEpisodic && t.n_way > t.eval_classes) {
    throw ConfigError("more ways than evaluation classes", "task.n_way");
  }
  if (c.experiment == kEpisodic && t.k_shot + t.q_queries > t.samples_per_class) {
    throw ConfigError("k_shot + q_queries exceeds the rows per class", "task.samples_per_class");
  }
  if (c.experiment == kMetricLearning &&
      (t.classes_per_batch < 2 || t.classes_per_batch > t.train_classes ||
       c.batch_size < t.classes_per_batch)) {
    throw ConfigError("needs 2 <= classes_per_batch <= train_classes and <= batch size",
                      "task.classes_per_batch");
  }

  EvalConfig& e = c.eval;
  e.every = r.integer("eval.every");
  e.bins_per_dim = r.integer("eval.bins_per_dim");
  if (e.bins_per_dim < 2) throw ConfigError("must be at least 2", "eval.bins_per_dim");
  e.entropy_k = r.positive("eval.entropy_k");
  e.probe_budget = r.integer("eval.probe_budget");
  e.probe_lr = r.real("eval.probe_lr");
  c.sweep_seeds = r.positive("sweep.seeds");
  return c;
}

}  // namespace unireg::harness
