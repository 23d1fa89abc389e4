#include "unireg/priors.hpp"

#include <cmath>
#include <sstream>

#include "unireg/error.hpp"

namespace unireg {

void PriorSpec::validate() const {
  if (dim == 0) throw ConfigError("prior dimension must be positive", "regularizer.prior");
  if (const auto* u = std::get_if<UniformHypercube>(&kind)) {
    if (!(u->low < u->high)) {
      throw ConfigError("uniform prior needs low < high", "regularizer.prior.low");
    }
  } else {
    const auto& g = std::get<IsotropicGaussian>(kind);
    if (!(g.variance_scale > 0.0)) {
      throw ConfigError("gaussian prior needs variance_scale > 0",
                        "regularizer.prior.variance_scale");
    }
  }
}

std::string PriorSpec::label() const {
  std::ostringstream out;
  if (const auto* u = std::get_if<UniformHypercube>(&kind)) {
    out << "U(" << u->low << "," << u->high << ")";
  } else {
    const auto& g = std::get<IsotropicGaussian>(kind);
    out << "N(" << g.mean << ",";
    if (g.variance_scale != 1.0) out << g.variance_scale;
    out << "I)";
  }
  return out.str();
}

Tensor sample_prior(const PriorSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (n == 0) throw ContractError("sample_prior needs n >= 1");
  Tensor out({n, spec.dim});
  if (const auto* u = std::get_if<UniformHypercube>(&spec.kind)) {
    for (double& v : out.values()) v = rng.uniform(u->low, u->high);
  } else {
    const auto& g = std::get<IsotropicGaussian>(spec.kind);
    const double stddev = std::sqrt(g.variance_scale);
    for (double& v : out.values()) v = rng.normal(g.mean, stddev);
  }
  return out;
}

std::vector<PriorSpec> table1_prior_ladder(std::size_t dim) {
  if (dim == 0) throw ContractError("prior ladder needs dim >= 1");
  return {PriorSpec::gaussian(dim, 0.0, 0.1), PriorSpec::gaussian(dim, 0.0, 1.0),
          PriorSpec::gaussian(dim, 0.0, 5.0), PriorSpec::gaussian(dim, 0.0, 10.0),
          PriorSpec::uniform(dim, -1.0, 1.0)};
}

}  // namespace unireg
