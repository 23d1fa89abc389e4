#ifndef UNIREG_DIAGNOSTICS_HPP_
#define UNIREG_DIAGNOSTICS_HPP_

// Measurements of embedding-space uniformity and of task quality. Each
// uniformity estimator looks at a different aspect: marginals (KS), volume
// coverage (occupancy), spread (differential entropy) and separability from
// the prior (a freshly trained probe).

#include <cstdint>
#include <span>
#include <vector>

#include "unireg/priors.hpp"
#include "unireg/rng.hpp"
#include "unireg/tensor.hpp"

namespace unireg {

struct KsResult {
  std::vector<double> per_dim;
  double max = 0.0;
};

// Per column, sup |F_n - F| against U(low, high), evaluated on both sides of
// every sample point.
KsResult ks_uniformity(const Tensor& z, double low = -1.0, double high = 1.0);

struct OccupancyResult {
  double occupancy = 0.0;
  bool out_of_cube = false;  // some coordinate fell outside [low, high]
  bool joint = true;         // false when the marginal fallback was used
};

inline constexpr double kMaxJointBins = 1e6;

// Fraction of non-empty cells of a bins_per_dim^d grid over [low, high]^d.
// When the grid would exceed 1e6 cells, the mean of the per-dimension
// marginal occupancies is returned instead. Points outside the cube are
// clamped to the edge cells.
OccupancyResult hypercube_occupancy(const Tensor& z, std::size_t bins_per_dim,
                                    double low = -1.0, double high = 1.0);

// Zero nearest-neighbour distances are replaced by this value.
inline constexpr double kEntropyDistanceJitter = 1e-12;

// Kozachenko-Leonenko estimate in nats:
//   psi(n) - psi(k) + log V_d + (d / n) sum_i log eps_i,
// eps_i the Euclidean distance to the k-th neighbour, V_d the unit-ball
// volume.
double knn_entropy(const Tensor& z, std::size_t k = 1);

struct ProbeOptions {
  std::size_t budget = 500;  // Adam steps
  std::size_t batch_size = 128;
  double lr = 1e-3;
};

// Balanced held-out accuracy of a fresh [d,100,100,1] discriminator trained
// to tell rows of z from an equal number of prior samples. Even rows (after
// a shuffle) train, odd rows evaluate.
double probe_accuracy(const Tensor& z, const PriorSpec& prior, Rng& rng,
                      const ProbeOptions& options = {});

struct UniformityReport {
  std::vector<double> per_dim_ks;
  double max_ks = 0.0;
  double occupancy = 0.0;
  bool out_of_cube = false;
  double entropy_estimate = 0.0;
  // NaN when the probe was skipped.
  double probe_accuracy = 0.0;
};

struct UniformityOptions {
  double low = -1.0;
  double high = 1.0;
  std::size_t bins_per_dim = 4;
  std::size_t entropy_k = 1;
  // probe.budget == 0 skips the probe.
  ProbeOptions probe;
};

UniformityReport uniformity_report(const Tensor& z, const UniformityOptions& options,
                                   Rng& rng);

struct RetrievalReport {
  double recall_at_1 = 0.0;
  double nmi = 0.0;
};

// Fraction of rows whose nearest other row (lowest index on ties) shares
// their label.
double recall_at_1(const Tensor& z, std::span<const int> labels);

// Mutual information over the arithmetic mean of the two entropies. Defined
// as 1 when both partitions are trivial and 0 when only one is.
double nmi(std::span<const int> clusters, std::span<const int> labels);

struct KMeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeds, best inertia over `restarts`.
KMeansResult kmeans(const Tensor& z, std::size_t k, Rng& rng, std::size_t restarts = 10,
                    std::size_t max_iterations = 100);

// Recall@1 and NMI of a k-means clustering with k = number of labels.
RetrievalReport retrieval_report(const Tensor& z, std::span<const int> labels, Rng& rng);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Row-wise argmax of a [b x c] matrix, lowest index on ties.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace unireg

#endif  // UNIREG_DIAGNOSTICS_HPP_
