#include "recipes.hpp"

#include <algorithm>
#include <numeric>

#include "unireg/augment.hpp"
#include "unireg/data.hpp"
#include "unireg/diagnostics.hpp"
#include "unireg/error.hpp"
#include "unireg/idx.hpp"
#include "unireg/losses.hpp"

namespace unireg::harness {

namespace {

using nlohmann::json;

LabeledBatch sample_with_replacement(const LabeledBatch& data, std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (std::size_t& r : rows) r = rng.index(data.size());
  return select_rows(data, rows);
}

// k distinct values from [0, n), in draw order.
std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.index(n - i)]);
  all.resize(k);
  return all;
}

std::uint64_t task_seed(const ExperimentConfig& c) { return c.task.seed ^ streams::kTask; }

// Linear classifier on the embeddings; shared by zsda and ood.
class ClassifierRecipe : public Recipe {
 public:
  std::size_t input_dim() const override { return train_.inputs.cols(); }

  void init_head(Model& model, std::uint64_t seed) override {
    head_ = nn::MlpSpec{{model.encoder.output_width(), num_classes()},
                        nn::Activation::kRelu, nn::Activation::kNone};
    nn::init_parameters_into(model.theta, head_, seed, "head.");
  }

  TaskStep next_step(Model& model, Rng& batch_rng) override {
    batch_ = sample_with_replacement(train_, batch_size_, batch_rng);
    TaskStep step;
    step.embed = [this, &model](ad::Tape& t, bool trainable) {
      return model.embed(t, batch_.inputs, trainable);
    };
    step.task_loss = [this, &model](ad::Tape&, ad::Var z) {
      return classification_loss(nn::forward_mlp(head_, model.theta, z, true, "head."),
                                 batch_.labels);
    };
    return step;
  }

 protected:
  std::size_t num_classes() const {
    return std::max(train_.num_classes, std::max(source_eval_.num_classes, eval_.num_classes));
  }

  double accuracy_on(Model& model, const LabeledBatch& data) {
    ad::Tape tape;
    ad::Var z = model.embed(tape, data.inputs, false);
    ad::Var logits = nn::forward_mlp(head_, model.theta, z, false, "head.");
    return accuracy(argmax_rows(logits.value()), data.labels);
  }

  std::size_t batch_size_ = 0;
  nn::MlpSpec head_;
  LabeledBatch train_;
  LabeledBatch source_eval_;
  LabeledBatch eval_;
  LabeledBatch batch_;
};

class ZsdaRecipe : public ClassifierRecipe {
 public:
  ZsdaRecipe(const ExperimentConfig& c, Rng& data_rng) {
    batch_size_ = c.batch_size;
    const TaskConfig& t = c.task;
    if (t.source == "idx") {
      source_ = "idx";
      const LabeledBatch all = load_idx(t.idx_train_images, t.idx_train_labels);
      eval_ = load_idx(t.idx_eval_images, t.idx_eval_labels);
      if (eval_.inputs.cols() != all.inputs.cols()) {
        throw ConfigError("training and evaluation images differ in size", "task.idx.eval_images");
      }
      // Held-out source rows come from the tail of the training file.
      const std::size_t held = std::min(t.eval_size, all.size() / 5);
      std::vector<std::size_t> train_rows, held_rows;
      for (std::size_t i = 0; i < all.size(); ++i) {
        (i < all.size() - held ? train_rows : held_rows).push_back(i);
      }
      if (train_rows.size() > t.train_size) train_rows.resize(t.train_size);
      train_ = select_rows(all, train_rows);
      source_eval_ = held_rows.empty() ? train_ : select_rows(all, held_rows);
      if (eval_.size() > t.eval_size) {
        std::vector<std::size_t> rows(t.eval_size);
        std::iota(rows.begin(), rows.end(), 0);
        eval_ = select_rows(eval_, rows);
      }
    } else {
      source_ = "blobs";
      BlobsOptions o;
      o.n_classes = t.n_classes;
      o.d_in = t.input_dim;
      o.class_scale = t.class_scale;
      o.mean_spread = t.mean_spread;
      AffineShift shift;
      shift.rotation_deg = t.shift_rotation_deg;
      shift.translation.assign(t.input_dim, t.shift_translation);
      shift.scale = t.shift_scale;
      task_ = make_blobs_task(o, shift, task_seed(c));
      train_ = task_.sample_source(t.train_size, data_rng);
      source_eval_ = task_.sample_source(t.eval_size, data_rng);
      eval_ = task_.sample_target(t.eval_size, data_rng);
    }
  }

  Tensor evaluate(Model& model, MetricsRecord& record, Rng&) override {
    record.set(kSourceAccuracy, accuracy_on(model, source_eval_));
    record.set(kEvalAccuracy, accuracy_on(model, eval_));
    return model.embed_all(source_eval_.inputs);
  }

  json describe() const override {
    return {{"task", "zsda"},
            {"source", source_},
            {"train_rows", train_.size()},
            {"source_eval_rows", source_eval_.size()},
            {"target_eval_rows", eval_.size()},
            {"num_classes", num_classes()},
            {"label_sets_shared", true}};
  }

 private:
  std::string source_;
  DomainShiftTask task_;
};

class OodRecipe : public ClassifierRecipe {
 public:
  OodRecipe(const ExperimentConfig& c, Rng& data_rng) {
    batch_size_ = c.batch_size;
    const TaskConfig& t = c.task;
    if (t.source == "idx") {
      source_ = "idx";
      train_ = load_idx(t.idx_train_images, t.idx_train_labels);
      source_eval_ = load_idx(t.idx_eval_images, t.idx_eval_labels);
      if (train_.size() > t.train_size) {
        std::vector<std::size_t> rows(t.train_size);
        std::iota(rows.begin(), rows.end(), 0);
        train_ = select_rows(train_, rows);
      }
      if (source_eval_.size() > t.eval_size) {
        std::vector<std::size_t> rows(t.eval_size);
        std::iota(rows.begin(), rows.end(), 0);
        source_eval_ = select_rows(source_eval_, rows);
      }
    } else {
      source_ = "glyphs";
      GlyphTask glyphs = make_glyph_task(t.n_classes, t.image_side, task_seed(c));
      glyphs.pixel_noise = t.pixel_noise;
      train_ = glyphs.sample(t.train_size, data_rng);
      source_eval_ = glyphs.sample(t.eval_size, data_rng);
    }
    geometry_ = ImageGeometry::infer(source_eval_.inputs.cols());
    eval_ = source_eval_;
    eval_.inputs = augment_ood(source_eval_.inputs, data_rng, geometry_);
  }

  Tensor evaluate(Model& model, MetricsRecord& record, Rng&) override {
    record.set(kSourceAccuracy, accuracy_on(model, source_eval_));
    record.set(kEvalAccuracy, accuracy_on(model, eval_));
    return model.embed_all(source_eval_.inputs);
  }

  json describe() const override {
    return {{"task", "ood"},
            {"source", source_},
            {"image_height", geometry_.height},
            {"image_width", geometry_.width},
            {"train_rows", train_.size()},
            {"eval_rows", eval_.size()},
            {"augmentation",
             {{"translation_px", 4}, {"rotation_deg", 30}, {"scale", {0.75, 1.25}},
              {"resampling", "nearest"}, {"fill", 0}}}};
  }

 private:
  std::string source_;
  ImageGeometry geometry_;
};

// Latent-class pools split into disjoint train and eval class sets.
class LatentRecipe : public Recipe {
 public:
  LatentRecipe(const ExperimentConfig& c, Rng& data_rng) {
    const TaskConfig& t = c.task;
    LatentClassOptions o;
    o.n_classes = t.n_classes;
    o.latent_dim = t.latent_dim;
    o.nuisance_dim = t.nuisance_dim;
    o.class_scale = t.class_scale;
    o.nuisance_scale = t.nuisance_scale;
    task_ = make_latent_class_task(o, task_seed(c));
    for (std::size_t i = 0; i < t.train_classes; ++i) train_ids_.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < t.eval_classes; ++i) {
      eval_ids_.push_back(static_cast<int>(t.train_classes + i));
    }
    std::vector<int> overlap;
    std::set_intersection(train_ids_.begin(), train_ids_.end(), eval_ids_.begin(), eval_ids_.end(),
                          std::back_inserter(overlap));
    disjoint_ = overlap.empty();
    if (!disjoint_) throw ContractError("train and eval class sets overlap");
    train_pool_ = task_.sample(train_ids_, t.samples_per_class, data_rng);
    eval_pool_ = task_.sample(eval_ids_, t.samples_per_class, data_rng);
  }

  std::size_t input_dim() const override { return task_.input_dim(); }

 protected:
  json split() const {
    return {{"train_classes", train_ids_},
            {"eval_classes", eval_ids_},
            {"disjoint", disjoint_},
            {"rows_per_class", train_pool_.size() / train_ids_.size()}};
  }

  LatentClassTask task_;
  std::vector<int> train_ids_, eval_ids_;
  bool disjoint_ = false;
  LabeledBatch train_pool_, eval_pool_;
};

class EpisodicRecipe : public LatentRecipe {
 public:
  EpisodicRecipe(const ExperimentConfig& c, Rng& data_rng)
      : LatentRecipe(c, data_rng),
        n_(c.task.n_way),
        k_(c.task.k_shot),
        q_(c.task.q_queries),
        eval_episodes_(c.task.eval_episodes),
        train_classes_(train_pool_),
        eval_classes_(eval_pool_) {}

  TaskStep next_step(Model& model, Rng& batch_rng) override {
    episode_ = sample_episode(train_classes_, n_, k_, q_, batch_rng);
    const std::size_t s = episode_.support.size();
    x_ = Tensor({s + episode_.query.size(), input_dim()});
    std::copy(episode_.support.inputs.values().begin(), episode_.support.inputs.values().end(),
              x_.values().begin());
    std::copy(episode_.query.inputs.values().begin(), episode_.query.inputs.values().end(),
              x_.values().begin() + static_cast<std::ptrdiff_t>(episode_.support.inputs.numel()));
    TaskStep step;
    step.embed = [this, &model](ad::Tape& t, bool trainable) { return model.embed(t, x_, trainable); };
    step.task_loss = [this, s](ad::Tape&, ad::Var z) {
      return prototypical_loss(ad::rows(z, 0, s), episode_.support.labels,
                               ad::rows(z, s, z.shape()[0]), episode_.query.labels);
    };
    return step;
  }

  Tensor evaluate(Model& model, MetricsRecord& record, Rng& eval_rng) override {
    record.set(kSourceAccuracy, episode_accuracy(model, train_classes_, eval_rng));
    record.set(kEvalAccuracy, episode_accuracy(model, eval_classes_, eval_rng));
    return model.embed_all(eval_pool_.inputs);
  }

  json describe() const override {
    json j = split();
    j["task"] = "episodic";
    j["n_way"] = n_;
    j["k_shot"] = k_;
    j["q_queries"] = q_;
    j["eval_episodes"] = eval_episodes_;
    return j;
  }

 private:
  double episode_accuracy(Model& model, const ClassPool& pool, Rng& rng) {
    const Tensor z = model.embed_all(pool.data().inputs);
    const LabeledBatch embedded{z, pool.data().labels, pool.data().num_classes};
    double total = 0.0;
    for (std::size_t e = 0; e < eval_episodes_; ++e) {
      const Episode ep = sample_episode(pool, n_, k_, q_, rng);
      ad::Tape tape;
      ad::Var logits = prototypical_logits(
          tape.constant(select_rows(embedded, ep.support_rows).inputs), ep.support.labels,
          tape.constant(select_rows(embedded, ep.query_rows).inputs));
      total += accuracy(argmax_rows(logits.value()), ep.query.labels);
    }
    return total / static_cast<double>(eval_episodes_);
  }

  std::size_t n_, k_, q_, eval_episodes_;
  ClassPool train_classes_, eval_classes_;
  Episode episode_;
  Tensor x_;
};

class MetricLearningRecipe : public LatentRecipe {
 public:
  MetricLearningRecipe(const ExperimentConfig& c, Rng& data_rng)
      : LatentRecipe(c, data_rng),
        classes_per_batch_(c.task.classes_per_batch),
        per_class_(c.batch_size / c.task.classes_per_batch),
        margin_(c.task.margin),
        pool_(train_pool_) {
    if (per_class_ > c.task.samples_per_class) {
      throw ConfigError("batch needs more rows per class than the pool holds", "train.batch_size");
    }
  }

  TaskStep next_step(Model& model, Rng& batch_rng) override {
    std::vector<std::size_t> rows;
    for (std::size_t c : choose_distinct(pool_.num_classes(), classes_per_batch_, batch_rng)) {
      const std::vector<std::size_t>& of = pool_.rows_of(c);
      for (std::size_t i : choose_distinct(of.size(), per_class_, batch_rng)) rows.push_back(of[i]);
    }
    batch_ = select_rows(train_pool_, rows);
    TaskStep step;
    step.embed = [this, &model](ad::Tape& t, bool trainable) {
      return model.embed(t, batch_.inputs, trainable);
    };
    step.task_loss = [this](ad::Tape&, ad::Var z) {
      return contrastive_loss(z, batch_.labels, margin_);
    };
    return step;
  }

  Tensor evaluate(Model& model, MetricsRecord& record, Rng& eval_rng) override {
    Tensor z = model.embed_all(eval_pool_.inputs);
    const RetrievalReport r = retrieval_report(z, eval_pool_.labels, eval_rng);
    record.set(kRecallAt1, r.recall_at_1);
    record.set(kNmi, r.nmi);
    return z;
  }

  json describe() const override {
    json j = split();
    j["task"] = "metric_learning";
    j["classes_per_batch"] = classes_per_batch_;
    j["rows_per_class_in_batch"] = per_class_;
    j["margin"] = margin_;
    j["nmi_protocol"] = "k-means++, k = eval classes, 10 restarts, best inertia";
    return j;
  }

 private:
  std::size_t classes_per_batch_, per_class_;
  double margin_;
  ClassPool pool_;
  LabeledBatch batch_;
};

}  // namespace

std::unique_ptr<Recipe> make_recipe(const ExperimentConfig& config, Rng& data_rng) {
  switch (config.experiment) {
    case Experiment::kZsda:
      return std::make_unique<ZsdaRecipe>(config, data_rng);
    case Experiment::kOod:
      return std::make_unique<OodRecipe>(config, data_rng);
    case Experiment::kEpisodic:
      return std::make_unique<EpisodicRecipe>(config, data_rng);
    case Experiment::kMetricLearning:
      return std::make_unique<MetricLearningRecipe>(config, data_rng);
    case Experiment::kPriorLadder:
      break;
  }
  throw ConfigError("prior_ladder is a sweep; run it through the sweep command", "experiment");
}

}  // namespace unireg::harness
