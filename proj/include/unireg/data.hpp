#ifndef UNIREG_DATA_HPP_
#define UNIREG_DATA_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "unireg/rng.hpp"
#include "unireg/tensor.hpp"

namespace unireg {

struct LabeledBatch {
  Tensor inputs;            // [b x d_in]
  std::vector<int> labels;  // length b, each in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  void validate() const;
};

LabeledBatch select_rows(const LabeledBatch& batch,
                         std::span<const std::size_t> rows);

// Rows grouped by class label.
class ClassPool {
 public:
  explicit ClassPool(LabeledBatch data);

  const LabeledBatch& data() const { return data_; }
  std::size_t num_classes() const { return by_class_.size(); }
  const std::vector<std::size_t>& rows_of(std::size_t label) const {
    return by_class_[label];
  }

 private:
  LabeledBatch data_;
  std::vector<std::vector<std::size_t>> by_class_;
};

struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_queries = 0;
  // Class-major rows, labels relabeled to [0, n_way).
  LabeledBatch support;
  LabeledBatch query;
  // Pool label of each episode class.
  std::vector<int> classes;
  // Pool row indices, for disjointness checks.
  std::vector<std::size_t> support_rows;
  std::vector<std::size_t> query_rows;
};

// Chooses n_way classes uniformly without replacement, then k_shot + q_queries
// distinct rows from each. Every pool class must hold at least
// k_shot + q_queries rows.
Episode sample_episode(const ClassPool& pool, std::size_t n_way, std::size_t k_shot,
                       std::size_t q_queries, Rng& rng);

// x -> scale * R x + translation, R a planar rotation of coordinates 0 and 1.
struct AffineShift {
  double rotation_deg = 0.0;
  std::vector<double> translation;  // empty means zero
  double scale = 1.0;

  Tensor apply(const Tensor& x) const;
  Tensor inverse(const Tensor& x) const;
  bool is_identity() const;
};

// 30 degree rotation in the first two coordinates plus 0.5 * 1.
AffineShift default_blobs_shift(std::size_t d_in);

// Gaussian class blobs with a source domain and an affinely shifted target
// domain sharing the label set.
struct DomainShiftTask {
  Tensor class_means;  // [n_classes x d_in]
  double class_scale = 0.5;
  AffineShift shift;

  std::size_t num_classes() const { return class_means.rows(); }
  std::size_t input_dim() const { return class_means.cols(); }

  // Labels cycle through the classes so every draw is balanced to within one.
  LabeledBatch sample_source(std::size_t n, Rng& rng) const;
  LabeledBatch sample_target(std::size_t n, Rng& rng) const;
};

struct BlobsOptions {
  std::size_t n_classes = 8;
  std::size_t d_in = 16;
  double class_scale = 0.5;
  // Class means are drawn from N(0, mean_spread^2 I).
  double mean_spread = 1.0;
};

DomainShiftTask make_blobs_task(const BlobsOptions& options, std::uint64_t seed);
DomainShiftTask make_blobs_task(const BlobsOptions& options, const AffineShift& shift,
                                std::uint64_t seed);

// Classes live in a low-dimensional latent subspace padded with nuisance
// noise; an orthogonal mixing matrix hides the split from the encoder.
struct LatentClassOptions {
  std::size_t n_classes = 30;
  std::size_t latent_dim = 8;
  std::size_t nuisance_dim = 8;
  double class_scale = 0.6;
  double nuisance_scale = 1.5;
};

struct LatentClassTask {
  Tensor class_means;  // [n_classes x latent_dim]
  Tensor mixing;       // orthogonal [(latent + nuisance) x (latent + nuisance)]
  double class_scale = 0.6;
  double nuisance_scale = 1.5;

  std::size_t num_classes() const { return class_means.rows(); }
  std::size_t input_dim() const { return mixing.cols(); }

  // `per_class` rows for each listed class, class-major, labeled by their
  // position in `classes`.
  LabeledBatch sample(std::span<const int> classes, std::size_t per_class,
                      Rng& rng) const;
};

LatentClassTask make_latent_class_task(const LatentClassOptions& options,
                                       std::uint64_t seed);

}  // namespace unireg

#endif  // UNIREG_DATA_HPP_
