#ifndef UNIREG_NN_HPP_
#define UNIREG_NN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "unireg/autodiff.hpp"

namespace unireg::nn {

enum class Activation { kNone, kRelu, kTanh, kSigmoid };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct MlpSpec {
  // Input width first, output width last.
  std::vector<std::size_t> layer_widths;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kNone;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  std::size_t num_layers() const { return layer_widths.size() - 1; }

  // Throws ConfigError on fewer than two widths, zero widths, or a hidden
  // activation other than relu/tanh.
  void validate() const;

  // [input_dim, 100, 100, 1], relu hidden, sigmoid output.
  static MlpSpec discriminator(std::size_t input_dim);
};

// Named parameters in insertion order.
class ParameterStore {
 public:
  ad::Parameter& add(std::string name, Tensor value);
  ad::Parameter& get(std::string_view name);
  const ad::Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  ad::Parameter& at(std::size_t i) { return entries_[i].param; }
  const ad::Parameter& at(std::size_t i) const { return entries_[i].param; }

  void zero_grad();
  // Copies of every parameter value in order; used for isolation checks.
  std::vector<Tensor> snapshot() const;
  std::size_t total_values() const;

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  struct Entry {
    std::string name;
    ad::Parameter param;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Weights "<prefix>layer<i>.weight" [in x out] drawn from N(0, s^2) with
// s = sqrt(2 / fan_in) for relu layers and sqrt(1 / fan_in) otherwise;
// biases "<prefix>layer<i>.bias" [1 x out] are zero.
ParameterStore init_parameters(const MlpSpec& spec, std::uint64_t seed,
                               std::string_view prefix = "");
// Adds the same layers to an existing store.
void init_parameters_into(ParameterStore& store, const MlpSpec& spec,
                          std::uint64_t seed, std::string_view prefix = "");

// Affine-activation chain recorded on batch's tape. Parameters are bound as
// trainable leaves when `trainable`, as constants otherwise.
ad::Var forward_mlp(const MlpSpec& spec, ParameterStore& params, ad::Var batch,
                    bool trainable = true, std::string_view prefix = "");

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return t_; }

  // Bias-corrected Adam update of every parameter in the store. Grads are
  // left in place. Throws ContractError if any parameter lacks a grad.
  void step(ParameterStore& params);

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::map<std::string, Moments, std::less<>> moments_;
};

inline void adam_step(AdamState& state, ParameterStore& params) {
  state.step(params);
}

// w <- w - lr * grad for every parameter.
void sgd_step(ParameterStore& params, double lr);

struct SgdConfig {
  double lr = 1e-2;
};

// Encoder-side optimizer: Adam or plain SGD.
class Optimizer {
 public:
  explicit Optimizer(AdamConfig adam) : impl_(AdamState(adam)) {}
  explicit Optimizer(SgdConfig sgd) : impl_(sgd) {}

  void step(ParameterStore& params);

 private:
  std::variant<AdamState, SgdConfig> impl_;
};

// Binary checkpoint, little-endian:
//   "URCK" | u32 version | u64 count |
//   count x (u32 name_len | name | u32 rank | rank x u64 dim | f64 values)
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace unireg::nn

#endif  // UNIREG_NN_HPP_
