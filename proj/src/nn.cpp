#include "unireg/nn.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "unireg/error.hpp"
#include "unireg/rng.hpp"

namespace unireg::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ConfigError("an MLP needs at least input and output widths");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw ConfigError("MLP layer widths must be positive");
  }
  if (hidden_activation != Activation::kRelu &&
      hidden_activation != Activation::kTanh) {
    throw ConfigError("hidden activation must be relu or tanh");
  }
}

MlpSpec MlpSpec::discriminator(std::size_t input_dim) {
  return MlpSpec{{input_dim, 100, 100, 1}, Activation::kRelu,
                 Activation::kSigmoid};
}

ad::Parameter& ParameterStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) {
    throw ContractError("duplicate parameter name '" + name + "'");
  }
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), ad::Parameter{std::move(value), {}}});
  return entries_.back().param;
}

ad::Parameter& ParameterStore::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("no parameter named '" + std::string(name) + "'");
  }
  return entries_[it->second].param;
}

const ad::Parameter& ParameterStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("no parameter named '" + std::string(name) + "'");
  }
  return entries_[it->second].param;
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

void ParameterStore::zero_grad() {
  for (Entry& e : entries_) e.param.zero_grad();
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.param.value);
  return out;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.param.value.numel();
  return n;
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name) return false;
    if (!(a.entries_[i].param.value == b.entries_[i].param.value)) return false;
  }
  return true;
}

namespace {

std::string layer_name(std::string_view prefix, std::size_t i,
                       std::string_view what) {
  return std::string(prefix) + "layer" + std::to_string(i) + "." +
         std::string(what);
}

ad::Var activate(ad::Var x, Activation a) {
  switch (a) {
    case Activation::kNone: return x;
    case Activation::kRelu: return ad::relu(x);
    case Activation::kTanh: return ad::tanh(x);
    case Activation::kSigmoid: return ad::sigmoid(x);
  }
  return x;
}

}  // namespace

void init_parameters_into(ParameterStore& store, const MlpSpec& spec,
                          std::uint64_t seed, std::string_view prefix) {
  spec.validate();
  Rng rng(seed);
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    const std::size_t fan_in = spec.layer_widths[i];
    const std::size_t fan_out = spec.layer_widths[i + 1];
    const bool last = i + 1 == spec.num_layers();
    const Activation act = last ? spec.output_activation : spec.hidden_activation;
    const double gain = act == Activation::kRelu ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (double& v : w.values()) v = rng.normal(0.0, stddev);
    store.add(layer_name(prefix, i, "weight"), std::move(w));
    store.add(layer_name(prefix, i, "bias"), Tensor({1, fan_out}));
  }
}

ParameterStore init_parameters(const MlpSpec& spec, std::uint64_t seed,
                               std::string_view prefix) {
  ParameterStore store;
  init_parameters_into(store, spec, seed, prefix);
  return store;
}

ad::Var forward_mlp(const MlpSpec& spec, ParameterStore& params, ad::Var batch,
                    bool trainable, std::string_view prefix) {
  const Tensor& x = batch.value();
  if (x.rank() != 2 || x.cols() != spec.input_width()) {
    throw DimensionError("forward_mlp: batch " + shape_string(x.shape()) +
                         " does not match input width " +
                         std::to_string(spec.input_width()));
  }
  ad::Tape& tape = batch.tape();
  ad::Var h = batch;
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    ad::Var w = tape.param(params.get(layer_name(prefix, i, "weight")), trainable);
    ad::Var b = tape.param(params.get(layer_name(prefix, i, "bias")), trainable);
    h = ad::add_bias(ad::matmul(h, w), b);
    const bool last = i + 1 == spec.num_layers();
    h = activate(h, last ? spec.output_activation : spec.hidden_activation);
  }
  return h;
}

void AdamState::step(ParameterStore& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& p = params.at(i);
    if (!p.has_grad() || p.grad.shape() != p.value.shape()) {
      throw ContractError("adam_step: parameter '" + params.name(i) +
                          "' has no gradient");
    }
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = params.at(i);
    auto [it, inserted] = moments_.try_emplace(params.name(i));
    Moments& mo = it->second;
    if (inserted) {
      mo.m = Tensor::zeros_like(p.value);
      mo.v = Tensor::zeros_like(p.value);
    }
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = mo.m.values();
    auto v = mo.v.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void sgd_step(ParameterStore& params, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& p = params.at(i);
    if (!p.has_grad() || p.grad.shape() != p.value.shape()) {
      throw ContractError("sgd_step: parameter '" + params.name(i) +
                          "' has no gradient");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = params.at(i);
    auto w = p.value.values();
    auto g = p.grad.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
  }
}

void Optimizer::step(ParameterStore& params) {
  if (auto* adam = std::get_if<AdamState>(&impl_)) {
    adam->step(params);
  } else {
    sgd_step(params, std::get<SgdConfig>(impl_).lr);
  }
}

namespace {

constexpr char kCheckpointMagic[4] = {'U', 'R', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  if (!in) throw FormatError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    const Tensor& value = params.at(i).value;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) put_u64(out, d);
    for (double v : value.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw FormatError("checkpoint: bad magic");
  }
  const auto version = static_cast<std::uint32_t>(get_le(in, 4));
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint64_t count = get_le(in, 8);
  ParameterStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = static_cast<std::uint32_t>(get_le(in, 4));
    if (name_len > 4096) throw FormatError("checkpoint: implausible name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("checkpoint: truncated file");
    const auto rank = static_cast<std::uint32_t>(get_le(in, 4));
    if (rank > 8) throw FormatError("checkpoint: implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = get_le(in, 8);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = std::bit_cast<double>(get_le(in, 8));
    store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return store;
}

}  // namespace unireg::nn
