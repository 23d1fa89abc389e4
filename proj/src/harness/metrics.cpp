#include "unireg/harness/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unireg/error.hpp"

namespace unireg::harness {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path) {
  if (cell == "nan") return std::nan("");
  double v = 0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) {
    throw FormatError("metrics file " + path.string() + ": bad value '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string metrics_header() {
  std::string h = "step";
  for (std::string_view c : kMetricColumns) {
    h += ',';
    h += c;
  }
  return h;
}

std::string metrics_row(const MetricsRecord& record) {
  std::string row = std::to_string(record.step);
  for (const auto& v : record.values) {
    row += ',';
    if (v) row += format_real(*v);
  }
  return row;
}

struct MetricsWriter::Impl {
  std::ofstream out;
};

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) {
    delete impl_;
    throw IoError("cannot open metrics file " + path.string());
  }
  impl_->out << metrics_header() << '\n';
}

MetricsWriter::~MetricsWriter() { delete impl_; }

void MetricsWriter::write(const MetricsRecord& record) {
  if (last_step_ && record.step <= *last_step_) {
    throw ContractError("metrics steps must be strictly increasing");
  }
  last_step_ = record.step;
  impl_->out << metrics_row(record) << '\n';
}

void MetricsWriter::close() {
  impl_->out.close();
  if (impl_->out.fail()) throw IoError("failed writing metrics file");
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != metrics_header()) {
    throw FormatError("metrics file " + path.string() + ": unexpected header");
  }
  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != kMetricCount + 1) {
      throw FormatError("metrics file " + path.string() + ": wrong cell count");
    }
    MetricsRecord r;
    std::uint64_t step = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), step);
    if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size()) {
      throw FormatError("metrics file " + path.string() + ": bad step '" + cells[0] + "'");
    }
    r.step = static_cast<std::size_t>(step);
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      if (!cells[m + 1].empty()) r.values[m] = parse_cell(cells[m + 1], path);
    }
    records.push_back(r);
  }
  return records;
}

void write_embeddings(const std::filesystem::path& path, const Tensor& z) {
  if (z.rank() != 2) throw DimensionError("embedding dump needs an [n x d] tensor");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open embedding file " + path.string());
  out << z.rows() << ' ' << z.cols() << ' ' << kEmbeddingFormatVersion << '\n';
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (j) out << ' ';
      out << format_real(z.at(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing embedding file " + path.string());
}

Tensor read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::size_t n = 0, d = 0;
  int version = 0;
  if (!(in >> n >> d >> version) || n == 0 || d == 0) {
    throw FormatError("embedding file " + path.string() + ": bad header");
  }
  if (version != kEmbeddingFormatVersion) {
    throw FormatError("embedding file " + path.string() + ": unsupported version " +
                      std::to_string(version));
  }
  Tensor z({n, d});
  std::string token;
  for (std::size_t i = 0; i < n * d; ++i) {
    if (!(in >> token)) throw FormatError("embedding file " + path.string() + ": truncated");
    z[i] = parse_cell(token, path);
  }
  if (in >> token) throw FormatError("embedding file " + path.string() + ": trailing data");
  return z;
}

}  // namespace unireg::harness
