#include "unireg/diagnostics.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_set>

#include "unireg/autodiff.hpp"
#include "unireg/error.hpp"
#include "unireg/nn.hpp"
#include "unireg/regularizer.hpp"

namespace unireg {

namespace {

void require_matrix(const Tensor& z, const char* op) {
  if (z.rank() != 2) {
    throw DimensionError(std::string(op) + " needs an [n x d] matrix, got " +
                         shape_string(z.shape()));
  }
}

double sq_dist(const Tensor& z, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    const double diff = z.at(i, k) - z.at(j, k);
    s += diff * diff;
  }
  return s;
}

}  // namespace

KsResult ks_uniformity(const Tensor& z, double low, double high) {
  if (!(low < high)) throw ConfigError("ks_uniformity needs low < high");
  require_matrix(z, "ks_uniformity");
  const std::size_t n = z.rows();
  if (n < 2) throw ContractError("ks_uniformity needs n >= 2");
  KsResult result;
  std::vector<double> column(n);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < z.cols(); ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = z.at(i, k);
    std::sort(column.begin(), column.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = std::clamp((column[i] - low) / (high - low), 0.0, 1.0);
      d = std::max(d, static_cast<double>(i + 1) / nd - f);
      d = std::max(d, f - static_cast<double>(i) / nd);
    }
    result.per_dim.push_back(d);
    result.max = std::max(result.max, d);
  }
  return result;
}

OccupancyResult hypercube_occupancy(const Tensor& z, std::size_t bins_per_dim,
                                    double low, double high) {
  require_matrix(z, "hypercube_occupancy");
  if (bins_per_dim < 2) throw ContractError("hypercube_occupancy needs >= 2 bins per dim");
  if (!(low < high)) throw ConfigError("hypercube_occupancy needs low < high");
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  OccupancyResult result;
  auto bin_of = [&](double v) {
    if (v < low || v > high) result.out_of_cube = true;
    const double f = (v - low) / (high - low) * static_cast<double>(bins_per_dim);
    const double clamped = std::clamp(std::floor(f), 0.0, static_cast<double>(bins_per_dim - 1));
    return static_cast<std::size_t>(clamped);
  };
  const double cells = std::pow(static_cast<double>(bins_per_dim), static_cast<double>(d));
  if (cells <= kMaxJointBins) {
    std::unordered_set<std::size_t> occupied;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t cell = 0;
      for (std::size_t k = 0; k < d; ++k) cell = cell * bins_per_dim + bin_of(z.at(i, k));
      occupied.insert(cell);
    }
    result.occupancy = static_cast<double>(occupied.size()) / cells;
    result.joint = true;
    return result;
  }
  result.joint = false;
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<bool> hit(bins_per_dim, false);
    for (std::size_t i = 0; i < n; ++i) hit[bin_of(z.at(i, k))] = true;
    total += static_cast<double>(std::count(hit.begin(), hit.end(), true)) /
             static_cast<double>(bins_per_dim);
  }
  result.occupancy = total / static_cast<double>(d);
  return result;
}

double knn_entropy(const Tensor& z, std::size_t k) {
  require_matrix(z, "knn_entropy");
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (k < 1 || n <= k) throw ContractError("knn_entropy needs n > k >= 1");
  std::vector<double> dists(n - 1);
  double log_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dists[m++] = sq_dist(z, i, j);
    }
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     dists.end());
    const double eps = std::max(std::sqrt(dists[k - 1]), kEntropyDistanceJitter);
    log_sum += std::log(eps);
  }
  const double dd = static_cast<double>(d);
  const double log_unit_ball =
      0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd + 1.0);
  return boost::math::digamma(static_cast<double>(n)) -
         boost::math::digamma(static_cast<double>(k)) + log_unit_ball +
         dd * log_sum / static_cast<double>(n);
}

double probe_accuracy(const Tensor& z, const PriorSpec& prior, Rng& rng,
                      const ProbeOptions& options) {
  require_matrix(z, "probe_accuracy");
  const std::size_t n = z.rows();
  if (n < 4) throw ContractError("probe_accuracy needs at least 4 rows");
  if (options.budget < 1) throw ContractError("probe_accuracy needs budget >= 1");
  if (z.cols() != prior.dim) {
    throw DimensionError("probe_accuracy: embedding width does not match prior dim");
  }
  const Tensor reference = sample_prior(prior, n, rng);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.index(i + 1)]);

  const std::size_t d = z.cols();
  auto gather = [&](const Tensor& src, std::size_t parity) {
    std::vector<double> values;
    std::size_t rows = 0;
    for (std::size_t i = parity; i < n; i += 2, ++rows) {
      const std::size_t r = order[i];
      for (std::size_t k = 0; k < d; ++k) values.push_back(src.at(r, k));
    }
    return Tensor({rows, d}, std::move(values));
  };
  const Tensor train_fake = gather(z, 0);
  const Tensor train_real = gather(reference, 0);
  const Tensor test_fake = gather(z, 1);
  const Tensor test_real = gather(reference, 1);

  Discriminator probe(nn::MlpSpec::discriminator(d), nn::AdamConfig{options.lr},
                      rng.next_u64());
  const std::size_t batch = std::min(options.batch_size, train_fake.rows());
  auto minibatch = [&](const Tensor& src) {
    Tensor out({batch, d});
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t r = rng.index(src.rows());
      for (std::size_t k = 0; k < d; ++k) out.at(i, k) = src.at(r, k);
    }
    return out;
  };
  for (std::size_t step = 0; step < options.budget; ++step) {
    Tensor fake = minibatch(train_fake);
    Tensor real = minibatch(train_real);
    probe.update(fake, real);
  }
  ad::Tape tape;
  ad::Var d_fake = probe(tape.constant(test_fake), false);
  ad::Var d_real = probe(tape.constant(test_real), false);
  return discriminator_accuracy(d_fake.value(), d_real.value());
}

UniformityReport uniformity_report(const Tensor& z, const UniformityOptions& options,
                                   Rng& rng) {
  UniformityReport report;
  KsResult ks = ks_uniformity(z, options.low, options.high);
  report.per_dim_ks = std::move(ks.per_dim);
  report.max_ks = ks.max;
  OccupancyResult occ = hypercube_occupancy(z, options.bins_per_dim, options.low, options.high);
  report.occupancy = occ.occupancy;
  report.out_of_cube = occ.out_of_cube;
  report.entropy_estimate = knn_entropy(z, options.entropy_k);
  if (options.probe.budget > 0) {
    report.probe_accuracy = probe_accuracy(
        z, PriorSpec::uniform(z.cols(), options.low, options.high), rng, options.probe);
  } else {
    report.probe_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

double recall_at_1(const Tensor& z, std::span<const int> labels) {
  require_matrix(z, "recall_at_1");
  const std::size_t n = z.rows();
  if (n < 2) throw ContractError("recall_at_1 needs n >= 2");
  if (labels.size() != n) throw ContractError("recall_at_1: label count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = sq_dist(z, i, j);
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    if (labels[best] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double nmi(std::span<const int> clusters, std::span<const int> labels) {
  if (clusters.size() != labels.size()) throw ContractError("nmi: length mismatch");
  const std::size_t n = labels.size();
  if (n == 0) throw ContractError("nmi needs at least one element");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pc;
  std::map<int, double> pl;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{clusters[i], labels[i]}] += 1.0;
    pc[clusters[i]] += 1.0;
    pl[labels[i]] += 1.0;
  }
  const double nd = static_cast<double>(n);
  auto entropy = [nd](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [key, c] : counts) h -= (c / nd) * std::log(c / nd);
    return h;
  };
  const double hc = entropy(pc);
  const double hl = entropy(pl);
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pxy = c / nd;
    mi += pxy * std::log(pxy / ((pc[key.first] / nd) * (pl[key.second] / nd)));
  }
  const double denom = 0.5 * (hc + hl);
  if (denom == 0.0) return 1.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

KMeansResult kmeans(const Tensor& z, std::size_t k, Rng& rng, std::size_t restarts,
                    std::size_t max_iterations) {
  require_matrix(z, "kmeans");
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (k < 1 || k > n) throw ContractError("kmeans needs 1 <= k <= n");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::vector<double> centers(k * d);
  auto center_dist = [&](std::size_t i, std::size_t c) {
    double s = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
      const double diff = z.at(i, f) - centers[c * d + f];
      s += diff * diff;
    }
    return s;
  };
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(restarts, 1); ++attempt) {
    // k-means++ seeding.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(n);
    for (std::size_t f = 0; f < d; ++f) centers[f] = z.at(first, f);
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], center_dist(i, c - 1));
        total += nearest[i];
      }
      std::size_t pick = n - 1;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          target -= nearest[i];
          if (target < 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.index(n);
      }
      for (std::size_t f = 0; f < d; ++f) centers[c * d + f] = z.at(pick, f);
    }

    std::vector<int> assignment(n, -1);
    double inertia = 0.0;
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double bd = center_dist(i, 0);
        for (std::size_t c = 1; c < k; ++c) {
          const double dist = center_dist(i, c);
          if (dist < bd) {
            bd = dist;
            arg = c;
          }
        }
        inertia += bd;
        if (assignment[i] != static_cast<int>(arg)) {
          assignment[i] = static_cast<int>(arg);
          changed = true;
        }
      }
      if (!changed) break;
      std::vector<double> sums(k * d, 0.0);
      std::vector<double> counts(k, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        counts[c] += 1.0;
        for (std::size_t f = 0; f < d; ++f) sums[c * d + f] += z.at(i, f);
      }
      // Empty clusters keep their previous centre.
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0.0) continue;
        for (std::size_t f = 0; f < d; ++f) centers[c * d + f] = sums[c * d + f] / counts[c];
      }
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assignment = assignment;
    }
  }
  return best;
}

RetrievalReport retrieval_report(const Tensor& z, std::span<const int> labels, Rng& rng) {
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  RetrievalReport report;
  report.recall_at_1 = recall_at_1(z, labels);
  const KMeansResult clusters = kmeans(z, distinct.size(), rng);
  report.nmi = nmi(clusters.assignment, labels);
  return report;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ContractError("accuracy: length mismatch");
  if (labels.empty()) throw ContractError("accuracy needs at least one element");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> argmax_rows(const Tensor& scores) {
  require_matrix(scores, "argmax_rows");
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j) {
      if (scores.at(i, j) > scores.at(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace unireg
