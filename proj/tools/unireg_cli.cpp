// Command-line front end: train, sweep, diagnose, export-plots, keys.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unireg/diagnostics.hpp"
#include "unireg/error.hpp"
#include "unireg/harness/config.hpp"
#include "unireg/harness/metrics.hpp"
#include "unireg/harness/run.hpp"

namespace fs = std::filesystem;
using namespace unireg;
using namespace unireg::harness;
using nlohmann::json;

namespace {

struct Common {
  std::string source;
  std::string seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, const char* what) {
  cmd->add_option("config", c.source, what)->required();
  cmd->add_option("--seed", c.seed, "Override the run seed");
  cmd->add_option("--out", c.out, "Override output.dir");
  cmd->add_option("--override", c.overrides, "key=value, repeatable");
}

ExperimentConfig load(const Common& c) {
  const fs::path path(c.source);
  ConfigMap raw = path.extension() == ".json" ? manifest_config(path) : read_config_file(path);
  if (!c.seed.empty()) raw["seed"] = c.seed;
  if (!c.out.empty()) raw["output.dir"] = c.out;
  for (const std::string& o : c.overrides) apply_override(raw, o);
  return build_config(raw);
}

void print_record(const MetricsRecord& r) {
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    if (r.values[m]) std::printf("  %-16s %s\n", std::string(kMetricColumns[m]).c_str(),
                                 format_real(*r.values[m]).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial uniformity regularization experiments"};
  app.require_subcommand(1);

  Common train_args;
  auto* train = app.add_subcommand("train", "Run one experiment");
  add_common(train, train_args, "Config file, or a manifest.json to replay");

  Common sweep_args;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run the baseline/regularized or prior-ladder sweep");
  add_common(sweep, sweep_args, "Config file");
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  std::string emb_path;
  std::size_t bins = 4, k = 1, budget = 200;
  std::uint64_t diag_seed = 0;
  auto* diagnose = app.add_subcommand("diagnose", "Uniformity diagnostics for an embedding file");
  diagnose->add_option("embeddings", emb_path, "embeddings.txt")->required();
  diagnose->add_option("--bins", bins, "Bins per dimension for occupancy");
  diagnose->add_option("--k", k, "Neighbour order for the entropy estimate");
  diagnose->add_option("--probe-budget", budget, "Probe training steps; 0 skips the probe");
  diagnose->add_option("--seed", diag_seed, "Probe seed");

  std::string plot_dir;
  auto* plots = app.add_subcommand("export-plots", "Write plot_data.tsv for a run or sweep dir");
  plots->add_option("dir", plot_dir, "Run or sweep directory")->required();

  auto* keys = app.add_subcommand("keys", "Print the configuration key table as markdown");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const ExperimentConfig c = load(train_args);
      if (c.experiment == Experiment::kPriorLadder) {
        throw ConfigError("prior_ladder is a sweep; use 'unireg sweep'", "experiment");
      }
      const RunResult r = run(c);
      std::printf("run %s -> %s (%.1fs)\n", r.run_id.c_str(), r.run_dir.string().c_str(),
                  r.wall_clock_seconds);
      print_record(r.final_record);
    } else if (*sweep) {
      const SweepSummary s = run_sweep(load(sweep_args), jobs);
      std::printf("sweep -> %s\n", s.sweep_dir.string().c_str());
      std::cout << "summary: " << s.summary_tsv.string() << "\n";
    } else if (*diagnose) {
      const Tensor z = read_embeddings(emb_path);
      UniformityOptions o;
      o.bins_per_dim = bins;
      o.entropy_k = k;
      o.probe.budget = budget;
      Rng rng(diag_seed);
      const UniformityReport u = uniformity_report(z, o, rng);
      json j = {{"max_ks", u.max_ks},
                {"per_dim_ks", u.per_dim_ks},
                {"occupancy", u.occupancy},
                {"out_of_cube", u.out_of_cube},
                {"entropy", u.entropy_estimate}};
      j["probe_accuracy"] = std::isnan(u.probe_accuracy) ? json(nullptr) : json(u.probe_accuracy);
      std::cout << j.dump(2) << "\n";
    } else if (*plots) {
      std::cout << export_plot_data(plot_dir).string() << "\n";
    } else if (*keys) {
      std::cout << key_table_markdown();
    }
  } catch (const unireg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
