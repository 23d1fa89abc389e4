#include "unireg/harness/run.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "recipes.hpp"
#include "unireg/diagnostics.hpp"
#include "unireg/error.hpp"
#include "unireg/priors.hpp"

namespace unireg::harness {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string default_run_id(const ExperimentConfig& c) {
  return std::string(experiment_name(c.experiment)) + "-" +
         (c.regularized() ? "reg" : "baseline") + "-s" + std::to_string(c.seed);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json record_json(const MetricsRecord& r) {
  json j = {{"step", r.step}};
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    if (!r.values[m]) continue;
    const double v = *r.values[m];
    j[std::string(kMetricColumns[m])] = std::isnan(v) ? json(nullptr) : json(v);
  }
  return j;
}

void fill_uniformity(MetricsRecord& record, const Tensor& z, const ExperimentConfig& c,
                     Rng& probe_rng) {
  UniformityOptions o;
  o.bins_per_dim = c.eval.bins_per_dim;
  o.entropy_k = c.eval.entropy_k;
  o.probe.budget = c.eval.probe_budget;
  o.probe.lr = c.eval.probe_lr;
  const UniformityReport u = uniformity_report(z, o, probe_rng);
  record.set(kMaxKs, u.max_ks);
  record.set(kOccupancy, u.occupancy);
  record.set(kEntropy, u.entropy_estimate);
  if (o.probe.budget > 0) record.set(kProbeAccuracy, u.probe_accuracy);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

RunResult run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();

  RunResult result;
  result.run_id = c.run_id.empty() ? default_run_id(c) : c.run_id;
  result.run_dir = fs::path(c.out_dir) / result.run_id;
  fs::create_directories(result.run_dir);
  result.metrics_path = result.run_dir / "metrics.csv";
  result.manifest_path = result.run_dir / "manifest.json";

  Rng data_rng = Rng::stream(c.seed, streams::kData);
  Rng batch_rng = Rng::stream(c.seed, streams::kBatches);
  Rng prior_rng = Rng::stream(c.seed, streams::kPrior);
  Rng eval_rng = Rng::stream(c.seed, streams::kEval);
  Rng probe_rng = Rng::stream(c.seed, streams::kProbe);

  const std::unique_ptr<Recipe> recipe = make_recipe(c, data_rng);
  Model model;
  model.encoder = c.encoder_spec(recipe->input_dim());
  model.encoder.validate();
  nn::init_parameters_into(model.theta, model.encoder, c.seed ^ streams::kEncoderInit, "enc.");
  recipe->init_head(model, c.seed ^ streams::kEncoderInit ^ 0x100);

  nn::Optimizer optimizer = c.optimizer == "sgd" ? nn::Optimizer(nn::SgdConfig{c.lr})
                                                 : nn::Optimizer(nn::AdamConfig{c.lr});
  UniformityRegularizer regularizer(c.regularizer, c.seed ^ streams::kDiscriminatorInit);

  MetricsWriter writer(result.metrics_path);
  Tensor final_embeddings;
  for (std::size_t step = 1; step <= c.steps; ++step) {
    const TaskStep task = recipe->next_step(model, batch_rng);
    const StepReport report =
        c.regularized() ? combined_step(model.theta, optimizer, task, regularizer, prior_rng)
                        : baseline_step(model.theta, optimizer, task, regularizer, prior_rng);
    const bool last = step == c.steps;
    const bool eval = last || (c.eval.every > 0 && step % c.eval.every == 0);
    if (!eval && step % c.log_every != 0) continue;

    MetricsRecord record;
    record.step = step;
    record.set(kTaskLoss, report.task_loss);
    record.set(kUniformityLoss, report.uniformity_loss);
    record.set(kDiscLoss, report.disc_loss);
    record.set(kDiscAccuracy, report.disc_accuracy);
    if (eval) {
      Tensor z = recipe->evaluate(model, record, eval_rng);
      fill_uniformity(record, z, c, probe_rng);
      if (last) final_embeddings = std::move(z);
    }
    writer.write(record);
    if (last) result.final_record = record;
  }
  writer.close();
  write_embeddings(result.run_dir / "embeddings.txt", final_embeddings);

  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json manifest;
  manifest["format_version"] = kManifestFormatVersion;
  manifest["run_id"] = result.run_id;
  manifest["experiment"] = experiment_name(c.experiment);
  manifest["rng_algorithm"] = Rng::kAlgorithm;
  manifest["rng_streams"] = {{"derivation", "seed XOR stream index"},
                             {"data", streams::kData},
                             {"batches", streams::kBatches},
                             {"prior", streams::kPrior},
                             {"eval", streams::kEval},
                             {"probe", streams::kProbe},
                             {"encoder_init", streams::kEncoderInit},
                             {"discriminator_init", streams::kDiscriminatorInit},
                             {"task", streams::kTask}};
  manifest["config"] = c.resolved;
  manifest["resolved_defaults"] = c.defaulted_keys;
  manifest["regularized"] = c.regularized();
  if (c.regularized()) manifest["gamma"] = *c.gamma;
  manifest["prior"] = c.regularizer.prior.label();
  manifest["recipe"] = recipe->describe();
  manifest["started_utc"] = started;
  manifest["wall_clock_seconds"] = result.wall_clock_seconds;
  manifest["final"] = record_json(result.final_record);
  manifest["files"] = {{"metrics", "metrics.csv"}, {"embeddings", "embeddings.txt"}};
  write_text(result.manifest_path, manifest.dump(2) + "\n");
  return result;
}

ConfigMap manifest_config(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) {
    throw FormatError("manifest " + manifest_path.string() + " has no config object");
  }
  ConfigMap map;
  for (const auto& [k, v] : j["config"].items()) map[k] = v.get<std::string>();
  return map;
}

double SweepSummary::mean(std::size_t cell, Metric m) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const RunResult& r : cells[cell].runs) {
    if (r.final_record.get(m)) {
      s += *r.final_record.get(m);
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::nan("");
}

double SweepSummary::stddev(std::size_t cell, Metric m) const {
  const double mu = mean(cell, m);
  double s = 0.0;
  std::size_t n = 0;
  for (const RunResult& r : cells[cell].runs) {
    if (r.final_record.get(m)) {
      s += std::pow(*r.final_record.get(m) - mu, 2);
      ++n;
    }
  }
  return n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
}

SweepSummary run_sweep(const ExperimentConfig& config, std::size_t jobs) {
  SweepSummary summary;
  const std::string sweep_id = config.run_id.empty()
                                   ? std::string(experiment_name(config.experiment)) + "-sweep-s" +
                                         std::to_string(config.seed)
                                   : config.run_id;
  summary.sweep_dir = fs::path(config.out_dir) / sweep_id;
  fs::create_directories(summary.sweep_dir);

  // Cell label -> overrides applied to the resolved base config.
  std::vector<std::pair<std::string, ConfigMap>> cells;
  ConfigMap base = config.resolved;
  base.erase("output.run_id");
  base["output.dir"] = summary.sweep_dir.string();
  const std::string gamma =
      base.count("regularizer.gamma") ? base["regularizer.gamma"] : std::string("preset");
  base.erase("regularizer.gamma");
  if (config.experiment == Experiment::kPriorLadder) {
    base["experiment"] = "zsda";
    cells.push_back({"baseline", {}});
    for (const PriorSpec& p : table1_prior_ladder(config.embedding_dim)) {
      ConfigMap o = {{"regularizer.gamma", gamma}};
      if (const auto* g = std::get_if<IsotropicGaussian>(&p.kind)) {
        o["regularizer.prior"] = "gaussian";
        o["regularizer.prior.mean"] = format_real(g->mean);
        o["regularizer.prior.variance_scale"] = format_real(g->variance_scale);
      } else {
        const auto& u = std::get<UniformHypercube>(p.kind);
        o["regularizer.prior"] = "uniform";
        o["regularizer.prior.low"] = format_real(u.low);
        o["regularizer.prior.high"] = format_real(u.high);
      }
      cells.push_back({p.label(), o});
    }
  } else {
    cells.push_back({"baseline", {}});
    cells.push_back({"regularized", {{"regularizer.gamma", gamma}}});
  }

  struct Job {
    std::size_t cell;
    std::size_t index;
    ExperimentConfig config;
  };
  std::vector<Job> queue;
  summary.cells.resize(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    summary.cells[ci].label = cells[ci].first;
    summary.cells[ci].runs.resize(config.sweep_seeds);
    for (std::size_t s = 0; s < config.sweep_seeds; ++s) {
      ConfigMap m = base;
      for (const auto& [k, v] : cells[ci].second) m[k] = v;
      const std::uint64_t seed = config.seed + s;
      m["seed"] = std::to_string(seed);
      m["output.run_id"] = "cell" + std::to_string(ci) + "-s" + std::to_string(seed);
      queue.push_back({ci, s, build_config(m)});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queue.size()) return;
      try {
        RunResult r = run(queue[i].config);
        summary.cells[queue[i].cell].runs[queue[i].index] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = queue.size();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, queue.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);

  // Long format: one row per cell and metric with a value in the final record.
  std::string tsv = "cell\tlabel\tmetric\tmean\tstd\tn\n";
  json cells_json = json::array();
  for (std::size_t ci = 0; ci < summary.cells.size(); ++ci) {
    json cj = {{"cell", ci}, {"label", summary.cells[ci].label}, {"runs", json::array()}};
    for (const RunResult& r : summary.cells[ci].runs) cj["runs"].push_back(r.run_id);
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      std::size_t n = 0;
      for (const RunResult& r : summary.cells[ci].runs) n += r.final_record.values[m].has_value();
      if (n == 0) continue;
      const double mu = summary.mean(ci, static_cast<Metric>(m));
      const double sd = summary.stddev(ci, static_cast<Metric>(m));
      tsv += std::to_string(ci) + "\t" + summary.cells[ci].label + "\t" +
             std::string(kMetricColumns[m]) + "\t" + format_real(mu) + "\t" + format_real(sd) +
             "\t" + std::to_string(n) + "\n";
      cj["metrics"][std::string(kMetricColumns[m])] = {{"mean", mu}, {"std", sd}, {"n", n}};
    }
    cells_json.push_back(cj);
  }
  summary.summary_tsv = summary.sweep_dir / "summary.tsv";
  write_text(summary.summary_tsv, tsv);
  json sj = {{"format_version", kManifestFormatVersion},
             {"experiment", experiment_name(config.experiment)},
             {"config", config.resolved},
             {"seeds", config.sweep_seeds},
             {"cells", cells_json}};
  write_text(summary.sweep_dir / "summary.json", sj.dump(2) + "\n");
  return summary;
}

fs::path export_plot_data(const fs::path& dir) {
  std::vector<std::pair<std::string, fs::path>> sources;
  if (fs::exists(dir / "metrics.csv")) sources.push_back({dir.filename().string(), dir / "metrics.csv"});
  if (fs::is_directory(dir)) {
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) {
        sources.push_back({e.path().filename().string(), e.path() / "metrics.csv"});
      }
    }
  }
  if (sources.empty()) throw IoError("no metrics.csv at or under " + dir.string());

  std::vector<std::tuple<std::string, std::size_t, std::string, double>> rows;
  for (const auto& [run_id, path] : sources) {
    for (const MetricsRecord& r : read_metrics(path)) {
      for (std::size_t m = 0; m < kMetricCount; ++m) {
        if (r.values[m]) rows.emplace_back(run_id, r.step, std::string(kMetricColumns[m]), *r.values[m]);
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });
  std::string out = "step\tmetric\tvalue\trun_id\n";
  for (const auto& [run_id, step, metric, value] : rows) {
    out += std::to_string(step) + "\t" + metric + "\t" + format_real(value) + "\t" + run_id + "\n";
  }
  const fs::path path = dir / "plot_data.tsv";
  write_text(path, out);
  return path;
}

}  // namespace unireg::harness
