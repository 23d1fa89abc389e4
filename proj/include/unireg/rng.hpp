#ifndef UNIREG_RNG_HPP_
#define UNIREG_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace unireg {

// Seedable generator with a platform-independent stream. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard;
// all derived variates are computed here rather than through the
// implementation-defined <random> distributions.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64/u53/box-muller/v1";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream for a sub-task: seed XOR stream_index.
  static Rng stream(std::uint64_t run_seed, std::uint64_t stream_index) {
    return Rng(run_seed ^ stream_index);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double low, double high) {
    return low + (high - low) * uniform();
  }

  // Standard normal by the Box-Muller transform; the second
  // variate of each pair is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n) by rejection sampling, n >= 1.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// Stream indices used when deriving per-purpose generators from a run seed.
namespace streams {
inline constexpr std::uint64_t kEncoderInit = 0x01;
inline constexpr std::uint64_t kDiscriminatorInit = 0x02;
inline constexpr std::uint64_t kData = 0x03;
inline constexpr std::uint64_t kBatches = 0x04;
inline constexpr std::uint64_t kPrior = 0x05;
inline constexpr std::uint64_t kEval = 0x06;
inline constexpr std::uint64_t kProbe = 0x07;
inline constexpr std::uint64_t kTask = 0x08;
}  // namespace streams

}  // namespace unireg

#endif  // UNIREG_RNG_HPP_
