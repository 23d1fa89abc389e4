#include "unireg/data.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "unireg/error.hpp"

namespace unireg {

void LabeledBatch::validate() const {
  if (inputs.rank() != 2 || inputs.rows() != labels.size()) {
    throw ContractError("labeled batch: inputs " + shape_string(inputs.shape()) +
                        " do not match " + std::to_string(labels.size()) +
                        " labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ContractError("labeled batch: label " + std::to_string(y) +
                          " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

LabeledBatch select_rows(const LabeledBatch& batch,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("select_rows needs at least one row");
  const std::size_t d = batch.inputs.cols();
  LabeledBatch out;
  out.num_classes = batch.num_classes;
  out.inputs = Tensor({rows.size(), d});
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= batch.size()) throw ContractError("select_rows: row out of range");
    for (std::size_t k = 0; k < d; ++k) out.inputs.at(i, k) = batch.inputs.at(r, k);
    out.labels.push_back(batch.labels[r]);
  }
  return out;
}

ClassPool::ClassPool(LabeledBatch data) : data_(std::move(data)) {
  data_.validate();
  by_class_.resize(data_.num_classes);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    by_class_[static_cast<std::size_t>(data_.labels[i])].push_back(i);
  }
}

namespace {

// First `count` entries of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t count,
                                                    Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

}  // namespace

Episode sample_episode(const ClassPool& pool, std::size_t n_way, std::size_t k_shot,
                       std::size_t q_queries, Rng& rng) {
  if (n_way == 0 || k_shot == 0 || q_queries == 0) {
    throw ContractError("sample_episode: n_way, k_shot and q_queries must be positive");
  }
  if (pool.num_classes() < n_way) {
    throw ContractError("sample_episode: pool has " +
                        std::to_string(pool.num_classes()) + " classes, need " +
                        std::to_string(n_way));
  }
  const std::size_t per_class = k_shot + q_queries;
  for (std::size_t c = 0; c < pool.num_classes(); ++c) {
    if (pool.rows_of(c).size() < per_class) {
      throw ContractError("sample_episode: class " + std::to_string(c) + " has " +
                          std::to_string(pool.rows_of(c).size()) +
                          " rows, need " + std::to_string(per_class));
    }
  }

  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_queries = q_queries;
  const std::vector<std::size_t> chosen =
      choose_without_replacement(pool.num_classes(), n_way, rng);
  std::vector<int> support_labels;
  std::vector<int> query_labels;
  for (std::size_t w = 0; w < n_way; ++w) {
    const auto& members = pool.rows_of(chosen[w]);
    const std::vector<std::size_t> pick =
        choose_without_replacement(members.size(), per_class, rng);
    ep.classes.push_back(static_cast<int>(chosen[w]));
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t row = members[pick[i]];
      if (i < k_shot) {
        ep.support_rows.push_back(row);
        support_labels.push_back(static_cast<int>(w));
      } else {
        ep.query_rows.push_back(row);
        query_labels.push_back(static_cast<int>(w));
      }
    }
  }
  ep.support = select_rows(pool.data(), ep.support_rows);
  ep.support.labels = std::move(support_labels);
  ep.support.num_classes = n_way;
  ep.query = select_rows(pool.data(), ep.query_rows);
  ep.query.labels = std::move(query_labels);
  ep.query.num_classes = n_way;
  return ep;
}

namespace {

void check_shift_dims(const AffineShift& s, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("affine shift needs [n x d] inputs");
  if (!s.translation.empty() && s.translation.size() != x.cols()) {
    throw DimensionError("affine shift: translation length does not match input width");
  }
  if (s.rotation_deg != 0.0 && x.cols() < 2) {
    throw DimensionError("affine shift: rotation needs at least two coordinates");
  }
  if (!(s.scale != 0.0)) throw ContractError("affine shift: scale must be nonzero");
}

}  // namespace

Tensor AffineShift::apply(const Tensor& x) const {
  check_shift_dims(*this, x);
  const double a = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (rotation_deg != 0.0) {
      const double u = x.at(i, 0);
      const double v = x.at(i, 1);
      out.at(i, 0) = c * u - s * v;
      out.at(i, 1) = s * u + c * v;
    }
    for (std::size_t k = 0; k < x.cols(); ++k) {
      out.at(i, k) = scale * out.at(i, k) +
                     (translation.empty() ? 0.0 : translation[k]);
    }
  }
  return out;
}

Tensor AffineShift::inverse(const Tensor& x) const {
  check_shift_dims(*this, x);
  const double a = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      out.at(i, k) = (x.at(i, k) - (translation.empty() ? 0.0 : translation[k])) / scale;
    }
    if (rotation_deg != 0.0) {
      const double u = out.at(i, 0);
      const double v = out.at(i, 1);
      out.at(i, 0) = c * u + s * v;
      out.at(i, 1) = -s * u + c * v;
    }
  }
  return out;
}

bool AffineShift::is_identity() const {
  if (rotation_deg != 0.0 || scale != 1.0) return false;
  for (double t : translation) {
    if (t != 0.0) return false;
  }
  return true;
}

AffineShift default_blobs_shift(std::size_t d_in) {
  return AffineShift{30.0, std::vector<double>(d_in, 0.5), 1.0};
}

LabeledBatch DomainShiftTask::sample_source(std::size_t n, Rng& rng) const {
  if (n == 0) throw ContractError("sample_source needs n >= 1");
  const std::size_t classes = num_classes();
  const std::size_t d = input_dim();
  LabeledBatch out;
  out.num_classes = classes;
  out.inputs = Tensor({n, d});
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % classes;
    out.labels[i] = static_cast<int>(y);
    for (std::size_t k = 0; k < d; ++k) {
      out.inputs.at(i, k) = class_means.at(y, k) + class_scale * rng.normal();
    }
  }
  return out;
}

LabeledBatch DomainShiftTask::sample_target(std::size_t n, Rng& rng) const {
  LabeledBatch out = sample_source(n, rng);
  out.inputs = shift.apply(out.inputs);
  return out;
}

DomainShiftTask make_blobs_task(const BlobsOptions& options, const AffineShift& shift,
                                std::uint64_t seed) {
  if (options.n_classes < 2) throw ConfigError("blobs task needs >= 2 classes", "task.n_classes");
  if (options.d_in == 0) throw ConfigError("must be positive", "task.input_dim");
  if (!(options.class_scale > 0.0)) throw ConfigError("must be positive", "task.class_scale");
  Rng rng(seed);
  DomainShiftTask task;
  task.class_means = Tensor({options.n_classes, options.d_in});
  for (double& v : task.class_means.values()) v = options.mean_spread * rng.normal();
  task.class_scale = options.class_scale;
  task.shift = shift;
  return task;
}

DomainShiftTask make_blobs_task(const BlobsOptions& options, std::uint64_t seed) {
  return make_blobs_task(options, default_blobs_shift(options.d_in), seed);
}

LabeledBatch LatentClassTask::sample(std::span<const int> classes,
                                     std::size_t per_class, Rng& rng) const {
  if (classes.empty() || per_class == 0) {
    throw ContractError("latent class sample needs classes and per_class >= 1");
  }
  const std::size_t latent = class_means.cols();
  const std::size_t d = input_dim();
  const std::size_t n = classes.size() * per_class;
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  LabeledBatch out;
  out.num_classes = classes.size();
  out.labels.resize(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const int cls = classes[c];
    if (cls < 0 || static_cast<std::size_t>(cls) >= num_classes()) {
      throw ContractError("latent class sample: class id out of range");
    }
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      out.labels[row] = static_cast<int>(c);
      for (std::size_t k = 0; k < d; ++k) {
        const auto r = static_cast<Eigen::Index>(row);
        const auto col = static_cast<Eigen::Index>(k);
        raw(r, col) = k < latent
                          ? class_means.at(static_cast<std::size_t>(cls), k) +
                                class_scale * rng.normal()
                          : nuisance_scale * rng.normal();
      }
    }
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      mix(mixing.values().data(), static_cast<Eigen::Index>(d),
          static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd mixed = raw * mix;
  out.inputs = Tensor({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.inputs.at(i, k) = mixed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

LatentClassTask make_latent_class_task(const LatentClassOptions& options,
                                       std::uint64_t seed) {
  if (options.n_classes < 2) throw ConfigError("needs >= 2 classes", "task.n_classes");
  if (options.latent_dim == 0) throw ConfigError("must be positive", "task.latent_dim");
  Rng rng(seed);
  LatentClassTask task;
  task.class_scale = options.class_scale;
  task.nuisance_scale = options.nuisance_scale;
  task.class_means = Tensor({options.n_classes, options.latent_dim});
  for (double& v : task.class_means.values()) v = rng.normal();
  const std::size_t d = options.latent_dim + options.nuisance_dim;
  Eigen::MatrixXd gauss(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < gauss.rows(); ++i) {
    for (Eigen::Index j = 0; j < gauss.cols(); ++j) gauss(i, j) = rng.normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
  task.mixing = Tensor({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      task.mixing.at(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return task;
}

}  // namespace unireg
