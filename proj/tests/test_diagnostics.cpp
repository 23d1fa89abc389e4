#include "unireg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "gradcheck.hpp"
#include "unireg/error.hpp"

using namespace unireg;
using unireg::testing::random_tensor;

namespace {

// Exhaustive O(n^2) nearest neighbour, lowest index on ties.
double recall_oracle(const Tensor& z, const std::vector<int>& y) {
  int hits = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < z.rows(); ++j) {
      if (j == i) continue;
      double d = 0;
      for (std::size_t k = 0; k < z.cols(); ++k) d += std::pow(z.at(i, k) - z.at(j, k), 2);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    hits += y[arg] == y[i];
  }
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

double nmi_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0, ha = 0, hb = 0;
  for (auto [key, p] : joint) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  for (auto [k, p] : pa) ha -= p * std::log(p);
  for (auto [k, p] : pb) hb -= p * std::log(p);
  if (ha == 0 && hb == 0) return 1.0;
  return mi / (0.5 * (ha + hb));
}

Tensor uniform_points(std::size_t n, std::size_t d, Rng& rng) {
  return random_tensor({n, d}, rng, -1.0, 1.0);
}

Tensor reverse_columns(const Tensor& z) {
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) out.at(i, j) = z.at(i, z.cols() - 1 - j);
  return out;
}

}  // namespace

TEST_CASE("KS fixtures") {
  const KsResult at_zero = ks_uniformity(Tensor({50, 2}, 0.0));
  CHECK(at_zero.per_dim[0] == doctest::Approx(0.5));
  CHECK(at_zero.max == doctest::Approx(0.5));

  const std::size_t n = 40;
  Tensor lattice({n, 1});
  for (std::size_t i = 0; i < n; ++i) lattice[i] = -1.0 + 2.0 * (2.0 * i + 1.0) / (2.0 * n);
  CHECK(std::abs(ks_uniformity(lattice).max - 1.0 / (2.0 * n)) < 1e-12);
  CHECK_THROWS_AS(ks_uniformity(lattice, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(ks_uniformity(Tensor({1, 2})), ContractError);
}

TEST_CASE("KS of uniform samples and invariances") {
  Rng rng(1);
  const Tensor z = uniform_points(10000, 3, rng);
  const KsResult r = ks_uniformity(z);
  CHECK(r.max < 1.63 / 100.0);
  CHECK(r.max == *std::max_element(r.per_dim.begin(), r.per_dim.end()));

  std::vector<std::size_t> perm(z.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7919) % perm.size();
  Tensor shuffled(z.shape());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < 3; ++j) shuffled.at(i, j) = z.at(perm[i], j);
  const KsResult s = ks_uniformity(shuffled);
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.per_dim[j] == r.per_dim[j]);
  const KsResult c = ks_uniformity(reverse_columns(z));
  for (std::size_t j = 0; j < 3; ++j) CHECK(c.per_dim[j] == r.per_dim[2 - j]);
}

TEST_CASE("occupancy fixtures") {
  const OccupancyResult same = hypercube_occupancy(Tensor({30, 2}, 0.1), 4);
  CHECK(same.joint);
  CHECK(same.occupancy == doctest::Approx(1.0 / 16.0));

  Tensor grid({16, 2});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      grid.at(4 * i + j, 0) = -0.75 + 0.5 * i;
      grid.at(4 * i + j, 1) = -0.75 + 0.5 * j;
    }
  CHECK(hypercube_occupancy(grid, 4).occupancy == 1.0);
  CHECK_FALSE(hypercube_occupancy(grid, 4).out_of_cube);

  const OccupancyResult outside = hypercube_occupancy(Tensor::from_rows({{5, -5}, {0.1, 0.1}}), 2);
  CHECK(outside.out_of_cube);
  CHECK(outside.occupancy == doctest::Approx(0.5));

  CHECK_THROWS_AS(hypercube_occupancy(grid, 1), ContractError);
}

TEST_CASE("occupancy of many uniform points and the marginal fallback") {
  Rng rng(2);
  CHECK(hypercube_occupancy(uniform_points(100000, 2, rng), 10).occupancy > 0.99);
  const OccupancyResult wide = hypercube_occupancy(uniform_points(2000, 12, rng), 4);
  CHECK_FALSE(wide.joint);
  CHECK(wide.occupancy == 1.0);
}

TEST_CASE("entropy of uniform intervals and squares") {
  Rng rng(3);
  CHECK(std::abs(knn_entropy(uniform_points(10000, 1, rng)) - std::log(2.0)) < 0.05);
  CHECK(std::abs(knn_entropy(uniform_points(10000, 2, rng)) - 2.0 * std::log(2.0)) < 0.1);
  CHECK_THROWS_AS(knn_entropy(uniform_points(3, 2, rng), 3), ContractError);
}

TEST_CASE("entropy affine property") {
  Rng rng(4);
  const Tensor z = uniform_points(2000, 3, rng);
  const double h = knn_entropy(z);
  for (double c : {0.5, 3.0}) {
    Tensor s = z;
    for (double& v : s.values()) v *= c;
    CHECK(std::abs(knn_entropy(s) - (h + 3.0 * std::log(c))) < 1e-9);
  }
  Tensor shifted = z;
  for (double& v : shifted.values()) v += 4.0;
  CHECK(std::abs(knn_entropy(shifted) - h) < 1e-9);
}

TEST_CASE("entropy grows under added noise") {
  Rng rng(5);
  const Tensor z = uniform_points(3000, 2, rng);
  Tensor noisy = z;
  for (double& v : noisy.values()) v += rng.normal(0.0, 0.2);
  CHECK(knn_entropy(noisy) >= knn_entropy(z) - 0.02);
}

TEST_CASE("entropy tolerates duplicates") {
  Tensor z({10, 2}, 0.0);
  for (std::size_t i = 5; i < 10; ++i) z.at(i, 0) = 1.0;
  CHECK(std::isfinite(knn_entropy(z)));
}

TEST_CASE("probe calibration") {
  const PriorSpec prior = PriorSpec::uniform(4);
  Rng data(6), probe(7);
  const double null_acc = probe_accuracy(sample_prior(prior, 4000, data), prior, probe);
  CHECK(null_acc >= 0.47);
  CHECK(null_acc <= 0.53);

  Rng p2(8);
  const Tensor zeros({2000, 4}, 0.0);
  const double sep = probe_accuracy(zeros, prior, p2);
  CHECK(sep > 0.95);
  Rng p3(8);
  const double sep2 = probe_accuracy(zeros, prior, p3, ProbeOptions{1000});
  CHECK(sep2 >= sep - 0.03);
}

TEST_CASE("uniformity report") {
  Rng data(9), rng(10);
  const Tensor z = uniform_points(3000, 3, data);
  UniformityOptions options;
  options.probe.budget = 0;
  const UniformityReport r = uniformity_report(z, options, rng);
  CHECK(r.max_ks == ks_uniformity(z).max);
  CHECK(r.occupancy == hypercube_occupancy(z, 4).occupancy);
  CHECK(r.entropy_estimate == knn_entropy(z));
  CHECK(std::isnan(r.probe_accuracy));
  CHECK(r.per_dim_ks.size() == 3);
}

TEST_CASE("recall fixtures") {
  const Tensor clusters = Tensor::from_rows({{0, 0}, {0.1, 0}, {0, 0.1}, {10, 10}, {10.1, 10}, {10, 10.1}});
  CHECK(recall_at_1(clusters, std::vector<int>{0, 0, 0, 1, 1, 1}) == 1.0);
  Tensor line({8, 1});
  std::vector<int> alternating;
  for (int i = 0; i < 8; ++i) {
    line[i] = i;
    alternating.push_back(i % 2);
  }
  CHECK(recall_at_1(line, alternating) == 0.0);
  // Point 1 is equidistant from 0 and 2; the lower index wins.
  CHECK(recall_at_1(Tensor::from_rows({{0}, {1}, {2}}), std::vector<int>{0, 0, 1}) ==
        doctest::Approx(2.0 / 3.0));
}

TEST_CASE("recall and nmi match brute force") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.index(19);
    const std::size_t d = 1 + rng.index(4);
    Tensor z = random_tensor({n, d}, rng);
    // Snap to a coarse grid so ties occur.
    if (t % 3 == 0) for (double& v : z.values()) v = std::round(v * 2.0) / 2.0;
    std::vector<int> y(n), c(n);
    const std::size_t ky = 1 + rng.index(4), kc = 1 + rng.index(5);
    for (auto& v : y) v = static_cast<int>(rng.index(ky));
    for (auto& v : c) v = static_cast<int>(rng.index(kc));
    CHECK(std::abs(recall_at_1(z, y) - recall_oracle(z, y)) < 1e-10);
    CHECK(std::abs(nmi(c, y) - nmi_oracle(c, y)) < 1e-10);
  }
}

TEST_CASE("nmi fixtures") {
  const std::vector<int> y = {0, 0, 1, 1, 2, 2};
  CHECK(nmi(y, y) == doctest::Approx(1.0));
  CHECK(nmi(std::vector<int>{5, 5, 3, 3, 9, 9}, y) == doctest::Approx(1.0));
  CHECK(nmi(std::vector<int>(6, 0), y) == 0.0);
  CHECK_THROWS_AS(nmi(std::vector<int>{0, 1}, y), ContractError);
  Rng rng(12);
  std::vector<int> a(15), b(15);
  for (auto& v : a) v = static_cast<int>(rng.index(3));
  for (auto& v : b) v = static_cast<int>(rng.index(4));
  CHECK(std::abs(nmi(a, b) - nmi_oracle(a, b)) < 1e-10);
}

TEST_CASE("retrieval metrics ignore rotation and translation") {
  Rng rng(13);
  Tensor z = random_tensor({40, 2}, rng, -3, 3);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = static_cast<int>(i % 4);
    z.at(i, 0) += 10.0 * (y[i] % 2);
    z.at(i, 1) += 10.0 * (y[i] / 2);
  }
  const double th = 0.7;
  Tensor moved(z.shape());
  for (std::size_t i = 0; i < 40; ++i) {
    moved.at(i, 0) = std::cos(th) * z.at(i, 0) - std::sin(th) * z.at(i, 1) + 5.0;
    moved.at(i, 1) = std::sin(th) * z.at(i, 0) + std::cos(th) * z.at(i, 1) - 2.0;
  }
  CHECK(recall_at_1(z, y) == recall_at_1(moved, y));
  Rng ka(14), kb(14);
  const RetrievalReport a = retrieval_report(z, y, ka);
  const RetrievalReport b = retrieval_report(moved, y, kb);
  CHECK(std::abs(a.nmi - b.nmi) < 1e-12);
  CHECK(a.nmi > 0.8);
}

TEST_CASE("kmeans separates clear clusters") {
  Rng rng(15);
  Tensor z({60, 2});
  std::vector<int> y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    y[i] = static_cast<int>(i / 20);
    z.at(i, 0) = 8.0 * y[i] + rng.normal(0, 0.3);
    z.at(i, 1) = rng.normal(0, 0.3);
  }
  const KMeansResult km = kmeans(z, 3, rng);
  CHECK(nmi(km.assignment, y) == doctest::Approx(1.0));
}

TEST_CASE("accuracy") {
  const std::vector<int> y = {0, 1, 2, 3, 0, 1, 2, 3, 0, 1};
  CHECK(accuracy(y, y) == 1.0);
  std::vector<int> shifted(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) shifted[i] = (y[i] + 1) % 4;
  CHECK(accuracy(shifted, y) <= 0.25);
  const std::vector<int> p = {0, 1, 2, 0, 0, 2, 2, 3, 1, 1};
  CHECK(accuracy(p, y) == 0.7);
  CHECK_THROWS_AS(accuracy(p, std::vector<int>{0}), ContractError);
  CHECK(argmax_rows(Tensor::from_rows({{1, 3, 3}, {2, 0, 1}})) == std::vector<int>{1, 0});
}
