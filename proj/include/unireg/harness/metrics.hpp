#ifndef UNIREG_HARNESS_METRICS_HPP_
#define UNIREG_HARNESS_METRICS_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unireg/tensor.hpp"

namespace unireg::harness {

inline constexpr std::array<std::string_view, 12> kMetricColumns = {
    "task_loss",       "uniformity_loss", "disc_loss", "disc_accuracy",
    "source_accuracy", "eval_accuracy",   "recall_at_1", "nmi",
    "max_ks",          "occupancy",       "entropy",   "probe_accuracy"};

enum Metric : std::size_t {
  kTaskLoss,
  kUniformityLoss,
  kDiscLoss,
  kDiscAccuracy,
  kSourceAccuracy,
  kEvalAccuracy,
  kRecallAt1,
  kNmi,
  kMaxKs,
  kOccupancy,
  kEntropy,
  kProbeAccuracy,
  kMetricCount,
};

struct MetricsRecord {
  std::size_t step = 0;
  std::array<std::optional<double>, kMetricCount> values{};

  void set(Metric m, double v) { values[m] = v; }
  const std::optional<double>& get(Metric m) const { return values[m]; }
};

// Shortest decimal form that round-trips, independent of locale. NaN is
// written as "nan".
std::string format_real(double v);

// "step," followed by kMetricColumns.
std::string metrics_header();
std::string metrics_row(const MetricsRecord& record);

// Streams rows to a CSV; steps must be strictly increasing.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void write(const MetricsRecord& record);
  void close();

 private:
  struct Impl;
  Impl* impl_;
  std::optional<std::size_t> last_step_;
};

// Parses a metrics CSV written by MetricsWriter. IoError when the file is
// missing, FormatError on a bad header or row.
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

// Embedding dump: "n d version" then n rows of d values.
inline constexpr int kEmbeddingFormatVersion = 1;
void write_embeddings(const std::filesystem::path& path, const Tensor& z);
Tensor read_embeddings(const std::filesystem::path& path);

}  // namespace unireg::harness

#endif  // UNIREG_HARNESS_METRICS_HPP_
