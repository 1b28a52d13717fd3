#pragma once

// Generator, discriminator, and polishing networks assembled from the layer
// set, plus the named-parameter registry and the checkpoint container.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lpsr/adam.hpp"
#include "lpsr/layers.hpp"
#include "lpsr/rng.hpp"
#include "lpsr/tape.hpp"

namespace lpsr {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Parameter registry: named tensors in a fixed creation order, with a config
// fingerprint so checkpoints can refuse to load into the wrong architecture.

struct ParamEntry {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

class NetworkParams {
 public:
  std::uint64_t fingerprint = 0;

  void add(const std::string& name, Tensor t, bool trainable = true) {
    if (index_.count(name)) throw std::invalid_argument("params: duplicate entry '" + name + "'");
    index_[name] = entries_.size();
    entries_.push_back(ParamEntry{name, std::move(t), trainable});
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("params: no entry '" + name + "'");
    return entries_[it->second].tensor;
  }
  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("params: no entry '" + name + "'");
    return entries_[it->second].tensor;
  }

  std::vector<double>& values(const std::string& name) { return at(name).values; }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }

  std::int64_t trainable_scalar_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) {
      if (e.trainable) n += e.tensor.size();
    }
    return n;
  }

  bool bit_equal(const NetworkParams& other) const {
    if (entries_.size() != other.entries_.size() || fingerprint != other.fingerprint) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = other.entries_[i];
      if (a.name != b.name || !(a.tensor.shape == b.tensor.shape)) return false;
      if (std::memcmp(a.tensor.values.data(), b.tensor.values.data(),
                      a.tensor.values.size() * sizeof(double)) != 0) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Leafs every non-running-stat entry onto a tape; running stats stay in the
/// source registry and are mutated in place by train-mode batch norm.
class MountedParams {
 public:
  MountedParams(Tape& tape, NetworkParams& source, bool with_grad) : source_(&source) {
    for (auto& e : source.entries()) {
      if (is_running_stat(e.name)) continue;
      vars_[e.name] = tape.leaf(e.tensor.shape, e.tensor.values, with_grad && e.trainable);
    }
  }

  Var at(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw std::invalid_argument("mounted params: no entry '" + name + "'");
    return it->second;
  }

  std::vector<double>& running(const std::string& name) { return source_->values(name); }

  NetworkParams& source() { return *source_; }

  /// Optimizer work list: every trainable entry whose leaf received a
  /// gradient during backward.
  std::vector<AdamItem> adam_items(Tape& tape) {
    std::vector<AdamItem> items;
    for (auto& e : source_->entries()) {
      if (!e.trainable || is_running_stat(e.name)) continue;
      Var v = at(e.name);
      if (!tape.has_grad(v)) continue;
      items.push_back(AdamItem{e.name, &e.tensor.values, &tape.gradient(v)});
    }
    return items;
  }

  static bool is_running_stat(const std::string& name) {
    return name.size() > 6 && (name.rfind(".rmean") == name.size() - 6 ||
                               (name.size() > 5 && name.rfind(".rvar") == name.size() - 5));
  }

 private:
  NetworkParams* source_;
  std::unordered_map<std::string, Var> vars_;
};

namespace detail {

inline void add_conv(NetworkParams& p, Rng& rng, const std::string& prefix, std::int64_t out_ch,
                     std::int64_t in_ch, std::int64_t k, bool zero_init = false) {
  Tensor w = Tensor::zeros(Shape{out_ch, in_ch, k});
  if (!zero_init) {
    for (auto& v : w.values) v = rng.normal(0.0, 0.02);
  }
  p.add(prefix + ".w", std::move(w), true);
  p.add(prefix + ".b", Tensor::zeros(Shape{1, out_ch, 1}), true);
}

inline void add_tconv(NetworkParams& p, Rng& rng, const std::string& prefix, std::int64_t in_ch,
                      std::int64_t out_ch, std::int64_t k) {
  Tensor w = Tensor::zeros(Shape{in_ch, out_ch, k});
  for (auto& v : w.values) v = rng.normal(0.0, 0.02);
  p.add(prefix + ".w", std::move(w), true);
  p.add(prefix + ".b", Tensor::zeros(Shape{1, out_ch, 1}), true);
}

inline void add_bn(NetworkParams& p, const std::string& prefix, std::int64_t ch) {
  p.add(prefix + ".gamma", Tensor::full(Shape{1, ch, 1}, 1.0), true);
  p.add(prefix + ".beta", Tensor::zeros(Shape{1, ch, 1}), true);
  p.add(prefix + ".rmean", Tensor::zeros(Shape{1, ch, 1}), false);
  p.add(prefix + ".rvar", Tensor::full(Shape{1, ch, 1}, 1.0), false);
}

inline Var bn_layer(Tape& t, Var x, MountedParams& m, const std::string& prefix, Mode mode) {
  return batch_norm(t, x, m.at(prefix + ".gamma"), m.at(prefix + ".beta"),
                    m.running(prefix + ".rmean"), m.running(prefix + ".rvar"), mode);
}

inline ResidualBlockVars res_vars(MountedParams& m, const std::string& prefix) {
  ResidualBlockVars v;
  v.w1 = m.at(prefix + ".conv1.w");
  v.b1 = m.at(prefix + ".conv1.b");
  v.gamma1 = m.at(prefix + ".bn1.gamma");
  v.beta1 = m.at(prefix + ".bn1.beta");
  v.w2 = m.at(prefix + ".conv2.w");
  v.b2 = m.at(prefix + ".conv2.b");
  v.gamma2 = m.at(prefix + ".bn2.gamma");
  v.beta2 = m.at(prefix + ".bn2.beta");
  v.rmean1 = &m.running(prefix + ".bn1.rmean");
  v.rvar1 = &m.running(prefix + ".bn1.rvar");
  v.rmean2 = &m.running(prefix + ".bn2.rmean");
  v.rvar2 = &m.running(prefix + ".bn2.rvar");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generator.

/// Picks the two transpose-convolution strides for a scale-up factor.
inline std::pair<int, int> transpose_strides_for_alpha(int alpha) {
  switch (alpha) {
    case 3: return {3, 1};
    case 6: return {2, 3};
    case 12: return {3, 4};
    default: break;
  }
  if (alpha >= 1 && alpha <= 4) return {alpha, 1};
  for (int s1 = 2; s1 <= 4; ++s1) {
    if (alpha % s1 == 0 && alpha / s1 <= 4) return {s1, alpha / s1};
  }
  throw std::invalid_argument("alpha " + std::to_string(alpha) +
                              " is not factorable into two transpose strides <= 4");
}

struct GeneratorConfig {
  int in_channels = 1;        // 1 load channel + weather channels
  int features = 64;          // n
  int residual_blocks = 4;
  int kernel_head = 9;        // first and last conv
  int kernel_inner = 3;       // residual-block convs
  int stride1 = 2;            // transpose stages; a stage with stride 1 is omitted
  int stride2 = 3;

  int alpha() const { return stride1 * stride2; }

  void validate() const {
    if (in_channels < 1 || features < 1 || residual_blocks < 0) {
      throw std::invalid_argument("generator config: channel/feature counts must be positive");
    }
    if (kernel_head % 2 == 0 || kernel_inner % 2 == 0) {
      throw std::invalid_argument("generator config: kernels must be odd to preserve length");
    }
    if (stride1 < 1 || stride2 < 1) {
      throw std::invalid_argument("generator config: strides must be >= 1");
    }
  }

  std::string describe() const {
    return "gen:in=" + std::to_string(in_channels) + ",n=" + std::to_string(features) +
           ",rb=" + std::to_string(residual_blocks) + ",kh=" + std::to_string(kernel_head) +
           ",ki=" + std::to_string(kernel_inner) + ",s1=" + std::to_string(stride1) +
           ",s2=" + std::to_string(stride2);
  }

  std::uint64_t fingerprint() const { return fnv1a64(describe()); }
};

inline NetworkParams init_generator(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams p;
  p.fingerprint = cfg.fingerprint();
  const std::int64_t n = cfg.features;
  detail::add_conv(p, rng, "head.conv", n, cfg.in_channels, cfg.kernel_head);
  detail::add_bn(p, "head.bn", n);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    const std::string r = "res" + std::to_string(i);
    detail::add_conv(p, rng, r + ".conv1", n, n, cfg.kernel_inner);
    detail::add_bn(p, r + ".bn1", n);
    detail::add_conv(p, rng, r + ".conv2", n, n, cfg.kernel_inner);
    detail::add_bn(p, r + ".bn2", n);
  }
  if (cfg.stride1 > 1) {
    detail::add_tconv(p, rng, "up1.tconv", n, n, cfg.stride1);
    detail::add_bn(p, "up1.bn", n);
  }
  if (cfg.stride2 > 1) {
    detail::add_tconv(p, rng, "up2.tconv", n, n, cfg.stride2);
    detail::add_bn(p, "up2.bn", n);
  }
  detail::add_conv(p, rng, "out.conv", 1, n, cfg.kernel_head);
  return p;
}

inline void require_fingerprint(const NetworkParams& params, std::uint64_t expected,
                                const char* what) {
  if (params.fingerprint != expected) {
    throw std::runtime_error(std::string(what) + ": parameter fingerprint " +
                             std::to_string(params.fingerprint) + " does not match config " +
                             std::to_string(expected));
  }
}

/// LR load (B,1,M) plus optional weather (B,W,M) -> HR (B,1,alpha*M).
/// Internal activations are ReLU; the output layer is linear.
inline Var generator_forward(Tape& t, const GeneratorConfig& cfg, MountedParams& m, Var load,
                             std::optional<Var> weather, Mode mode) {
  cfg.validate();
  const Shape sl = t.shape(load);
  Var x = load;
  if (weather.has_value()) {
    const Shape sw = t.shape(*weather);
    if (sw.length != sl.length || sw.batch != sl.batch) {
      throw std::invalid_argument("generator: weather shape " + sw.str() +
                                  " does not align with load shape " + sl.str());
    }
    x = concat_channels(t, load, *weather);
  }
  if (t.shape(x).channel != cfg.in_channels) {
    throw std::invalid_argument("generator: input has " + std::to_string(t.shape(x).channel) +
                                " channels, config expects " + std::to_string(cfg.in_channels));
  }
  Var h = conv1d(t, x, m.at("head.conv.w"), m.at("head.conv.b"), 1, (cfg.kernel_head - 1) / 2);
  h = detail::bn_layer(t, h, m, "head.bn", mode);
  h = relu(t, h);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    h = residual_block(t, h, detail::res_vars(m, "res" + std::to_string(i)), mode);
  }
  if (cfg.stride1 > 1) {
    h = conv1d_transpose(t, h, m.at("up1.tconv.w"), m.at("up1.tconv.b"), cfg.stride1);
    h = detail::bn_layer(t, h, m, "up1.bn", mode);
    h = relu(t, h);
  }
  if (cfg.stride2 > 1) {
    h = conv1d_transpose(t, h, m.at("up2.tconv.w"), m.at("up2.tconv.b"), cfg.stride2);
    h = detail::bn_layer(t, h, m, "up2.bn", mode);
    h = relu(t, h);
  }
  return conv1d(t, h, m.at("out.conv.w"), m.at("out.conv.b"), 1, (cfg.kernel_head - 1) / 2);
}

/// Eval-mode convenience on plain tensors.
inline Tensor generate(const GeneratorConfig& cfg, NetworkParams& params, const Tensor& load,
                       const std::optional<Tensor>& weather = std::nullopt) {
  require_fingerprint(params, cfg.fingerprint(), "generator");
  Tape t;
  MountedParams m(t, params, false);
  Var l = t.leaf(load);
  std::optional<Var> w;
  if (weather.has_value()) w = t.leaf(*weather);
  return t.read(generator_forward(t, cfg, m, l, w, Mode::eval));
}

// ---------------------------------------------------------------------------
// Discriminator.

struct DiscriminatorConfig {
  int input_length = 288;
  std::array<int, 4> features{4, 8, 16, 32};
  int kernel = 3;
  int stride = 2;
  double leaky_slope = 0.2;

  void validate() const {
    if (!(features[0] < features[1] && features[1] < features[2] && features[2] < features[3])) {
      throw std::invalid_argument("discriminator config: feature maps must increase across the four layers");
    }
    if (features[0] < 1) throw std::invalid_argument("discriminator config: feature maps must be positive");
    if (kernel % 2 == 0) throw std::invalid_argument("discriminator config: kernel must be odd");
    if (stride < 2) throw std::invalid_argument("discriminator config: strides must be >= 2");
    if (input_length < 16) throw std::invalid_argument("discriminator config: input too short");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
      throw std::invalid_argument("discriminator config: leaky slope must be in (0,1)");
    }
  }

  std::int64_t layer_length(int layer) const {  // length after `layer` convs
    std::int64_t len = input_length;
    for (int i = 0; i < layer; ++i) len = (len - 1) / stride + 1;
    return len;
  }

  std::int64_t fc_inputs() const { return features[3] * layer_length(4); }

  std::string describe() const {
    return "disc:len=" + std::to_string(input_length) + ",f=" + std::to_string(features[0]) + "-" +
           std::to_string(features[1]) + "-" + std::to_string(features[2]) + "-" +
           std::to_string(features[3]) + ",k=" + std::to_string(kernel) +
           ",s=" + std::to_string(stride) + ",a=" + std::to_string(leaky_slope);
  }

  std::uint64_t fingerprint() const { return fnv1a64(describe()); }
};

inline NetworkParams init_discriminator(const DiscriminatorConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams p;
  p.fingerprint = cfg.fingerprint();
  int in_ch = 1;
  for (int i = 0; i < 4; ++i) {
    const std::string c = "conv" + std::to_string(i + 1);
    detail::add_conv(p, rng, c, cfg.features[static_cast<std::size_t>(i)], in_ch, cfg.kernel);
    if (i > 0) detail::add_bn(p, c + ".bn", cfg.features[static_cast<std::size_t>(i)]);
    in_ch = cfg.features[static_cast<std::size_t>(i)];
  }
  Tensor w = Tensor::zeros(Shape{1, 1, cfg.fc_inputs()});
  for (auto& v : w.values) v = rng.normal(0.0, 0.02);
  p.add("fc.w", std::move(w), true);
  p.add("fc.b", Tensor::zeros(Shape{1, 1, 1}), true);
  return p;
}

struct DiscriminatorOut {
  Var score;                  // (B,1,1), strictly in (0,1)
  std::vector<Var> features;  // post-activation outputs of the four conv layers
};

inline DiscriminatorOut discriminator_forward(Tape& t, const DiscriminatorConfig& cfg,
                                              MountedParams& m, Var hr, Mode mode) {
  cfg.validate();
  const Shape s = t.shape(hr);
  if (s.length != cfg.input_length || s.channel != 1) {
    throw std::invalid_argument("discriminator: input shape " + s.str() + " must be (B,1," +
                                std::to_string(cfg.input_length) + ")");
  }
  DiscriminatorOut out;
  Var h = hr;
  for (int i = 0; i < 4; ++i) {
    const std::string c = "conv" + std::to_string(i + 1);
    h = conv1d(t, h, m.at(c + ".w"), m.at(c + ".b"), cfg.stride, (cfg.kernel - 1) / 2);
    if (i > 0) h = detail::bn_layer(t, h, m, c + ".bn", mode);
    h = leaky_relu(t, h, cfg.leaky_slope);
    out.features.push_back(h);
  }
  Var logit = fully_connected(t, h, m.at("fc.w"), m.at("fc.b"));
  out.score = sigmoid(t, logit);
  return out;
}

// ---------------------------------------------------------------------------
// Polishing network: generator layout minus the upsampling stages, fewer
// feature maps, and a residual output so a zero correction is the identity.

struct PolisherConfig {
  int features = 32;
  int residual_blocks = 2;
  int kernel_head = 9;
  int kernel_inner = 3;

  void validate() const {
    if (features < 1 || residual_blocks < 0) {
      throw std::invalid_argument("polisher config: feature counts must be positive");
    }
    if (kernel_head % 2 == 0 || kernel_inner % 2 == 0) {
      throw std::invalid_argument("polisher config: kernels must be odd to preserve length");
    }
  }

  std::string describe() const {
    return "pol:n=" + std::to_string(features) + ",rb=" + std::to_string(residual_blocks) +
           ",kh=" + std::to_string(kernel_head) + ",ki=" + std::to_string(kernel_inner);
  }

  std::uint64_t fingerprint() const { return fnv1a64(describe()); }
};

inline NetworkParams init_polisher(const PolisherConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams p;
  p.fingerprint = cfg.fingerprint();
  const std::int64_t n = cfg.features;
  detail::add_conv(p, rng, "head.conv", n, 1, cfg.kernel_head);
  detail::add_bn(p, "head.bn", n);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    const std::string r = "res" + std::to_string(i);
    detail::add_conv(p, rng, r + ".conv1", n, n, cfg.kernel_inner);
    detail::add_bn(p, r + ".bn1", n);
    detail::add_conv(p, rng, r + ".conv2", n, n, cfg.kernel_inner);
    detail::add_bn(p, r + ".bn2", n);
  }
  // Zero-initialized output conv: an untrained polisher passes its input
  // through unchanged.
  detail::add_conv(p, rng, "out.conv", 1, n, cfg.kernel_head, /*zero_init=*/true);
  return p;
}

inline Var polisher_forward(Tape& t, const PolisherConfig& cfg, MountedParams& m, Var hr, Mode mode) {
  cfg.validate();
  Var h = conv1d(t, hr, m.at("head.conv.w"), m.at("head.conv.b"), 1, (cfg.kernel_head - 1) / 2);
  h = detail::bn_layer(t, h, m, "head.bn", mode);
  h = relu(t, h);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    h = residual_block(t, h, detail::res_vars(m, "res" + std::to_string(i)), mode);
  }
  Var corr = conv1d(t, h, m.at("out.conv.w"), m.at("out.conv.b"), 1, (cfg.kernel_head - 1) / 2);
  return add(t, corr, hr);
}

inline Tensor polish(const PolisherConfig& cfg, NetworkParams& params, const Tensor& hr) {
  require_fingerprint(params, cfg.fingerprint(), "polisher");
  Tape t;
  MountedParams m(t, params, false);
  return t.read(polisher_forward(t, cfg, m, t.leaf(hr), Mode::eval));
}

// ---------------------------------------------------------------------------
// Checkpoints: flat binary container of named fp64 arrays. Little-endian,
// bit-exact round trip.
//
//   magic "LPSRCKP1" | u32 version | u64 fingerprint | u32 alpha | u32 epoch
//   u32 count | count x { u16 name_len | name | u8 trainable
//                         | i64 batch,channel,length | f64 data[] }

struct Checkpoint {
  NetworkParams params;
  int alpha = 0;
  int epoch = 0;
};

namespace detail {
template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const NetworkParams& params, int alpha,
                            int epoch) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write("LPSRCKP1", 8);
  detail::write_pod<std::uint32_t>(f, 1);
  detail::write_pod<std::uint64_t>(f, params.fingerprint);
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(alpha));
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(epoch));
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    detail::write_pod<std::uint16_t>(f, static_cast<std::uint16_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::write_pod<std::uint8_t>(f, e.trainable ? 1 : 0);
    detail::write_pod<std::int64_t>(f, e.tensor.shape.batch);
    detail::write_pod<std::int64_t>(f, e.tensor.shape.channel);
    detail::write_pod<std::int64_t>(f, e.tensor.shape.length);
    f.write(reinterpret_cast<const char*>(e.tensor.values.data()),
            static_cast<std::streamsize>(e.tensor.values.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != "LPSRCKP1") {
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  }
  const auto version = detail::read_pod<std::uint32_t>(f);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint c;
  c.params.fingerprint = detail::read_pod<std::uint64_t>(f);
  c.alpha = static_cast<int>(detail::read_pod<std::uint32_t>(f));
  c.epoch = static_cast<int>(detail::read_pod<std::uint32_t>(f));
  const auto count = detail::read_pod<std::uint32_t>(f);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint16_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto trainable = detail::read_pod<std::uint8_t>(f);
    Shape s;
    s.batch = detail::read_pod<std::int64_t>(f);
    s.channel = detail::read_pod<std::int64_t>(f);
    s.length = detail::read_pod<std::int64_t>(f);
    std::vector<double> vals(static_cast<std::size_t>(s.size()));
    f.read(reinterpret_cast<char*>(vals.data()),
           static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
    c.params.add(name, Tensor(s, std::move(vals)), trainable != 0);
  }
  return c;
}

/// Load with an architecture check; mismatched fingerprints are rejected.
inline Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_fingerprint) {
  Checkpoint c = load_checkpoint(path);
  require_fingerprint(c.params, expected_fingerprint, "checkpoint");
  return c;
}

}  // namespace lpsr
