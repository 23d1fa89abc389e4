#ifndef UNIREG_PRIORS_HPP_
#define UNIREG_PRIORS_HPP_

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "unireg/rng.hpp"
#include "unireg/tensor.hpp"

namespace unireg {

struct UniformHypercube {
  double low = -1.0;
  double high = 1.0;
};

// N(mean * 1, variance_scale * I).
struct IsotropicGaussian {
  double mean = 0.0;
  double variance_scale = 1.0;
};

struct PriorSpec {
  std::variant<UniformHypercube, IsotropicGaussian> kind = UniformHypercube{};
  std::size_t dim = 1;

  static PriorSpec uniform(std::size_t dim, double low = -1.0, double high = 1.0) {
    return PriorSpec{UniformHypercube{low, high}, dim};
  }
  static PriorSpec gaussian(std::size_t dim, double mean, double variance_scale) {
    return PriorSpec{IsotropicGaussian{mean, variance_scale}, dim};
  }

  bool is_uniform() const {
    return std::holds_alternative<UniformHypercube>(kind);
  }
  // Throws ConfigError when low >= high, variance_scale <= 0 or dim == 0.
  void validate() const;
  // Short label such as "U(-1,1)" or "N(0,5I)".
  std::string label() const;
};

// n i.i.d. rows from the prior.
Tensor sample_prior(const PriorSpec& spec, std::size_t n, Rng& rng);

// N(0,0.1I), N(0,I), N(0,5I), N(0,10I), U(-1,1): increasing uniformity.
std::vector<PriorSpec> table1_prior_ladder(std::size_t dim);

}  // namespace unireg

#endif  // UNIREG_PRIORS_HPP_
