#include "unireg/priors.hpp"

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "unireg/error.hpp"

using namespace unireg;

namespace {

double column_mean(const Tensor& t, std::size_t c) {
  double s = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) s += t.at(r, c);
  return s / static_cast<double>(t.rows());
}

double column_central_moment(const Tensor& t, std::size_t c, int k) {
  const double m = column_mean(t, c);
  double s = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) s += std::pow(t.at(r, c) - m, k);
  return s / static_cast<double>(t.rows());
}

// Exact sup-distance to the U(low, high) CDF, written independently of
// the diagnostics module.
double ks_column(const Tensor& t, std::size_t c, double low, double high) {
  std::vector<double> v(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) v[r] = t.at(r, c);
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - low) / (high - low);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST_CASE("uniform sampler stays inside its support") {
  Rng rng(1);
  const Tensor z = sample_prior(PriorSpec::uniform(6), 5000, rng);
  CHECK(z.shape() == Shape{5000, 6});
  for (double v : z.values()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  Rng rng2(2);
  for (double v : sample_prior(PriorSpec::uniform(2, 3.0, 4.5), 1000, rng2).values()) {
    CHECK(v >= 3.0);
    CHECK(v <= 4.5);
  }
}

TEST_CASE("gaussian sampler moments") {
  Rng rng(3);
  const Tensor z = sample_prior(PriorSpec::gaussian(4, 0.0, 1.0), 100000, rng);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(std::abs(column_mean(z, c)) < 0.02);
    const double var = column_central_moment(z, c, 2);
    CHECK(std::abs(var - 1.0) < 0.05);
    const double excess = column_central_moment(z, c, 4) / (var * var) - 3.0;
    CHECK(std::abs(excess) < 0.1);
  }
}

TEST_CASE("gaussian scale is a variance") {
  Rng rng(4);
  const Tensor z = sample_prior(PriorSpec::gaussian(2, 1.5, 5.0), 100000, rng);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::abs(column_mean(z, c) - 1.5) < 0.05);
    CHECK(std::abs(column_central_moment(z, c, 2) / 5.0 - 1.0) < 0.05);
  }
}

TEST_CASE("uniform sampler passes the KS critical value") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    Rng rng(seed);
    const std::size_t n = 10000;
    const Tensor z = sample_prior(PriorSpec::uniform(3), n, rng);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(ks_column(z, c, -1.0, 1.0) < 1.63 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("sampling is deterministic under seed") {
  for (const PriorSpec& spec : table1_prior_ladder(3)) {
    Rng a(7), b(7), c(8);
    const Tensor za = sample_prior(spec, 50, a);
    CHECK(za == sample_prior(spec, 50, b));
    CHECK_FALSE(za == sample_prior(spec, 50, c));
  }
}

TEST_CASE("rng streams are seed xor index") {
  Rng a = Rng::stream(100, streams::kPrior);
  Rng b(100 ^ streams::kPrior);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng index is uniform and in range") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::size_t k = rng.index(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("invalid specs") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_prior(PriorSpec::uniform(2, 1.0, 1.0), 4, rng), ConfigError);
  CHECK_THROWS_AS(sample_prior(PriorSpec::uniform(2, 2.0, 1.0), 4, rng), ConfigError);
  CHECK_THROWS_AS(sample_prior(PriorSpec::gaussian(2, 0.0, 0.0), 4, rng), ConfigError);
  CHECK_THROWS_AS(sample_prior(PriorSpec::gaussian(2, 0.0, -1.0), 4, rng), ConfigError);
  CHECK_THROWS_AS(sample_prior(PriorSpec::uniform(0), 4, rng), ConfigError);
  CHECK_THROWS_AS(sample_prior(PriorSpec::uniform(2), 0, rng), ContractError);
}

TEST_CASE("prior ladder") {
  const std::vector<PriorSpec> ladder = table1_prior_ladder(8);
  REQUIRE(ladder.size() == 5);
  const double scales[] = {0.1, 1.0, 5.0, 10.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto* g = std::get_if<IsotropicGaussian>(&ladder[i].kind);
    REQUIRE(g != nullptr);
    CHECK(g->mean == 0.0);
    CHECK(g->variance_scale == scales[i]);
    CHECK(ladder[i].dim == 8);
  }
  const auto* u = std::get_if<UniformHypercube>(&ladder[4].kind);
  REQUIRE(u != nullptr);
  CHECK(u->low == -1.0);
  CHECK(u->high == 1.0);
  CHECK(ladder[4].label() == "U(-1,1)");
  CHECK(ladder[2].label() == "N(0,5I)");
}
