#ifndef UNIREG_HARNESS_RUN_HPP_
#define UNIREG_HARNESS_RUN_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "unireg/harness/config.hpp"
#include "unireg/harness/metrics.hpp"

namespace unireg::harness {

inline constexpr int kManifestFormatVersion = 1;

struct RunResult {
  std::string run_id;
  std::filesystem::path run_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path manifest_path;
  MetricsRecord final_record;
  double wall_clock_seconds = 0.0;
};

// Executes one seeded run of a single-run experiment and writes
// metrics.csv, embeddings.txt and manifest.json into <out_dir>/<run_id>.
// The prior_ladder experiment is a sweep; use run_sweep.
RunResult run(const ExperimentConfig& config);

// Resolved configuration echoed by a run's manifest.
ConfigMap manifest_config(const std::filesystem::path& manifest_path);

struct SweepCell {
  std::string label;
  std::vector<RunResult> runs;
};

struct SweepSummary {
  std::filesystem::path sweep_dir;
  std::vector<SweepCell> cells;
  std::filesystem::path summary_tsv;

  // Mean and sample standard deviation of a final metric across a cell.
  double mean(std::size_t cell, Metric m) const;
  double stddev(std::size_t cell, Metric m) const;
};

// prior_ladder: baseline plus the five-prior ladder on the zsda task.
// Other experiments: baseline against the regularized configuration
// (gamma preset when the config leaves it unset). Each cell runs
// sweep.seeds seeds starting at seed, on up to `jobs` threads, under
// <out_dir>/<run_id>. Writes summary.tsv and summary.json there.
SweepSummary run_sweep(const ExperimentConfig& config, std::size_t jobs = 1);

// Long-format plot data (run_id, step, metric, value) for every metrics.csv
// at or directly under `dir`, sorted by (run_id, step, metric). Written to
// <dir>/plot_data.tsv. IoError when no metrics file exists.
std::filesystem::path export_plot_data(const std::filesystem::path& dir);

}  // namespace unireg::harness

#endif  // UNIREG_HARNESS_RUN_HPP_
