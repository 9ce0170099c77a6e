#pragma once

// The convolutional autoencoder used for illuminant estimation, in both
// variants: a 50-channel code with a 15->3 regression head added after
// pre-training (fine-tuned variant), and a 3-channel code read directly as
// the illuminant estimate (composite variant).
//
// Encoder: four blocks of [conv (same), relu, maxpool2, dropout] with
// 32@5x5, 32@5x5, 32@4x4, 256@3x3 filters, then a bottleneck of global
// average pooling + 1x1 convolution producing a 1x1 x code_channels code.
// Decoder mirrors the encoder with nearest-neighbor upsampling + convolution
// and a sigmoid output so reconstructions live in (0, 1).

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "c3ae/errors.hpp"
#include "c3ae/nn/layers.hpp"

namespace c3ae {

struct CaeConfig {
  int code_channels = 50;
  int input_size = 64;  // must be 16 * 2^k
  double dropout_rate = 0.25;
  bool with_head = true;  // 15->3 estimation head on top of the code

  /// 50-channel code plus estimation head (two-step training).
  static CaeConfig finetuned_variant() { return {50, 64, 0.25, true}; }
  /// 3-channel code read directly as the estimate (composite training).
  static CaeConfig composite_variant() { return {3, 64, 0.25, false}; }

  /// Codes other than 3 and 50 are allowed but non-canonical.
  bool canonical() const { return code_channels == 3 || code_channels == 50; }

  void validate() const {
    if (code_channels < 1) throw ConfigError("code_channels must be >= 1");
    // Four halvings must leave at least the largest kernel (the fourth
    // block convolves 3x3 at input_size / 8).
    int s = input_size;
    if (s < 32) throw ConfigError("input_size must be at least 32");
    while (s > 16 && s % 2 == 0) s /= 2;
    if (s != 16) throw ConfigError("input_size must be 16 * 2^k");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("dropout_rate must be in [0, 1)");
  }
};

template <class T>
class Cae {
 public:
  Cae(const CaeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix64(seed) ^ 0xC3AEC3AEULL);
    const double rate = cfg_.dropout_rate;

    auto block = [&](const std::string& name, int cin, int cout, int k) {
      conv_layers_.push_back(
          encoder_.template add<nn::Conv2dLayer<T>>(name, cin, cout, k));
      encoder_.template add<nn::ReluLayer<T>>();
      encoder_.template add<nn::MaxPool2Layer<T>>();
      encoder_.template add<nn::DropoutLayer<T>>(rate);
    };
    block("enc1", 3, 32, 5);
    block("enc2", 32, 32, 5);
    block("enc3", 32, 32, 4);
    block("enc4", 32, 256, 3);
    encoder_.front()->need_input_grad = false;

    middle_.template add<nn::GlobalAvgPoolLayer<T>>();
    conv_layers_.push_back(middle_.template add<nn::Conv2dLayer<T>>(
        "mid", 256, cfg_.code_channels, 1));

    // Decoder: expand the 1x1 code back to the pre-pool grid, then mirror
    // the encoder blocks (upsample, conv, relu) ending in a sigmoid image.
    conv_layers_.push_back(decoder_.template add<nn::Conv2dLayer<T>>(
        "dec0", cfg_.code_channels, 256, 1));
    decoder_.template add<nn::ReluLayer<T>>();
    for (int s = 16; s < cfg_.input_size; s *= 2)
      decoder_.template add<nn::Upsample2Layer<T>>();
    auto mirror = [&](const std::string& name, int cin, int cout, int k) {
      decoder_.template add<nn::Upsample2Layer<T>>();
      conv_layers_.push_back(
          decoder_.template add<nn::Conv2dLayer<T>>(name, cin, cout, k));
    };
    mirror("dec1", 256, 32, 3);
    decoder_.template add<nn::ReluLayer<T>>();
    mirror("dec2", 32, 32, 4);
    decoder_.template add<nn::ReluLayer<T>>();
    mirror("dec3", 32, 32, 5);
    decoder_.template add<nn::ReluLayer<T>>();
    mirror("dec4", 32, 3, 5);
    decoder_.template add<nn::SigmoidLayer<T>>();

    if (cfg_.with_head) {
      conv_layers_.push_back(head_.template add<nn::Conv2dLayer<T>>(
          "head1", cfg_.code_channels, 15, 1));
      head_.template add<nn::ReluLayer<T>>();
      conv_layers_.push_back(
          head_.template add<nn::Conv2dLayer<T>>("head2", 15, 3, 1));
    }

    for (auto* conv : conv_layers_) conv->init_he(rng);
  }

  const CaeConfig& config() const { return cfg_; }

  // -- autoencoding path ----------------------------------------------------

  struct AutoencodeResult {
    Tensor<T> recon;  // [N, 3, S, S], sigmoid outputs
    Tensor<T> code;   // [N, code_channels]
  };

  AutoencodeResult forward_autoencode(const Tensor<T>& batch, bool training,
                                      Rng& rng) {
    check_batch(batch);
    Tensor<T> z = middle_.forward(encoder_.forward(batch, training, rng),
                                  training, rng);
    code4_shape_ = z.shape;
    Tensor<T> code = z.reshaped({z.dim(0), cfg_.code_channels});
    Tensor<T> recon = decoder_.forward(std::move(z), training, rng);
    return {std::move(recon), std::move(code)};
  }

  /// Reverse pass of forward_autoencode(training=true). `grad_code` is an
  /// optional extra [N, code_channels] gradient flowing into the bottleneck
  /// (used by the composite objective); pass nullptr when absent.
  void backward_autoencode(const Tensor<T>& grad_recon,
                           const Tensor<T>* grad_code = nullptr) {
    Tensor<T> gz = decoder_.backward(grad_recon);
    if (grad_code) {
      for (std::size_t i = 0; i < gz.numel(); ++i)
        gz.data[i] += grad_code->data[i];
    }
    encoder_.backward(middle_.backward(std::move(gz)));
  }

  // -- estimation path ------------------------------------------------------

  struct CodeEstimateCtx {
    Tensor<T> pre;  // input to softplus
    nn::RowNormCtx<T> norm;
  };

  /// Maps a raw [N, k] code/head output to a strictly positive unit-norm
  /// estimate via softplus + row normalization.
  static Tensor<T> map_to_estimate(const Tensor<T>& pre,
                                   CodeEstimateCtx* ctx = nullptr) {
    Tensor<T> sp = nn::softplus(pre);
    if (ctx) ctx->pre = pre;
    return nn::row_l2_normalize(sp, ctx ? &ctx->norm : nullptr);
  }

  static Tensor<T> map_to_estimate_backward(const Tensor<T>& grad_est,
                                            const CodeEstimateCtx& ctx) {
    return nn::softplus_backward(nn::row_l2_normalize_backward(grad_est, ctx.norm),
                                 ctx.pre);
  }

  /// Illuminant estimates for a batch: [N, 3] rows, positive, unit norm.
  /// Needs the head (fine-tuned variant) or a 3-channel code (composite).
  Tensor<T> forward_estimate(const Tensor<T>& batch, bool training = false,
                             Rng* rng = nullptr) {
    check_batch(batch);
    if (!cfg_.with_head && cfg_.code_channels != 3)
      throw ConfigError(
          "forward_estimate: model has no head and its code is not 3-channel");
    Rng fallback(0);
    Rng& r = rng ? *rng : fallback;
    Tensor<T> z = middle_.forward(encoder_.forward(batch, training, r),
                                  training, r);
    est_through_head_ = cfg_.with_head;
    if (cfg_.with_head) z = head_.forward(std::move(z), training, r);
    Tensor<T> pre = z.reshaped({z.dim(0), 3});
    est_code4_shape_ = z.shape;
    return map_to_estimate(pre, training ? &est_ctx_ : nullptr);
  }

  /// Reverse pass of forward_estimate(training=true).
  void backward_estimate(const Tensor<T>& grad_est) {
    Tensor<T> g = map_to_estimate_backward(grad_est, est_ctx_);
    Tensor<T> g4 = g.reshaped(est_code4_shape_);
    if (est_through_head_) g4 = head_.backward(std::move(g4));
    encoder_.backward(middle_.backward(std::move(g4)));
  }

  // -- parameter access -----------------------------------------------------

  std::vector<nn::NamedParam<T>> named_params() {
    std::vector<nn::NamedParam<T>> out;
    encoder_.collect_params(out);
    middle_.collect_params(out);
    decoder_.collect_params(out);
    head_.collect_params(out);
    return out;
  }

  std::vector<Tensor<T>*> params_with_prefix(const std::string& prefix) {
    std::vector<Tensor<T>*> out;
    for (auto& np : named_params())
      if (np.name.rfind(prefix, 0) == 0) out.push_back(np.tensor);
    return out;
  }

  /// Everything the reconstruction objective trains: encoder + bottleneck +
  /// decoder. Never includes the head.
  std::vector<Tensor<T>*> autoencoder_params() {
    std::vector<Tensor<T>*> out;
    for (auto& np : named_params())
      if (np.name.rfind("head", 0) != 0) out.push_back(np.tensor);
    return out;
  }

  /// Everything the estimation objective trains: encoder + bottleneck +
  /// head when present. Never includes the decoder.
  std::vector<Tensor<T>*> estimator_params() {
    std::vector<Tensor<T>*> out;
    for (auto& np : named_params())
      if (np.name.rfind("dec", 0) != 0) out.push_back(np.tensor);
    return out;
  }

 private:
  void check_batch(const Tensor<T>& batch) const {
    if (batch.ndim() != 4 || batch.dim(1) != 3 ||
        batch.dim(2) != cfg_.input_size || batch.dim(3) != cfg_.input_size)
      throw DomainError("model expects [N, 3, " +
                        std::to_string(cfg_.input_size) + ", " +
                        std::to_string(cfg_.input_size) + "], got " +
                        shape_string(batch.shape));
  }

  CaeConfig cfg_;
  nn::Sequential<T> encoder_, middle_, decoder_, head_;
  std::vector<nn::Conv2dLayer<T>*> conv_layers_;

  std::vector<int> code4_shape_;
  std::vector<int> est_code4_shape_;
  CodeEstimateCtx est_ctx_;
  bool est_through_head_ = false;
};

template <class T>
void zero_grads(const std::vector<Tensor<T>*>& params) {
  for (auto* p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// parameter accounting

struct ParamBudget {
  std::size_t encoder = 0, middle = 0, decoder = 0, head = 0;

  std::size_t total() const { return encoder + middle + decoder + head; }
  /// Parameters the deployed estimator runs: encoder + bottleneck + head.
  std::size_t estimator() const { return encoder + middle + head; }
  /// Parameters the reconstruction path runs.
  std::size_t autoencoder() const { return encoder + middle + decoder; }
};

template <class T>
std::size_t param_count(Cae<T>& model) {
  std::size_t n = 0;
  for (auto& np : model.named_params()) n += np.tensor->numel();
  return n;
}

template <class T>
ParamBudget param_budget(Cae<T>& model) {
  ParamBudget b;
  for (auto& np : model.named_params()) {
    const std::size_t n = np.tensor->numel();
    if (np.name.rfind("enc", 0) == 0) b.encoder += n;
    else if (np.name.rfind("mid", 0) == 0) b.middle += n;
    else if (np.name.rfind("dec", 0) == 0) b.decoder += n;
    else b.head += n;
  }
  return b;
}

// ---------------------------------------------------------------------------
// serialization: versioned little-endian container
//
//   "C3AE" | u32 version | i32 code_channels | i32 input_size |
//   f32 dropout_rate | u8 with_head | u32 tensor_count |
//   { u32 name_len | name | u32 ndim | i32 dims... | f32 data... } *

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <class V>
void write_pod(std::ostream& os, V v) {
  write_bytes(os, &v, sizeof(v));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw ModelFormatError(ModelFormatError::Kind::Truncated,
                           "model file ends early");
}
template <class V>
V read_pod(std::istream& is) {
  V v{};
  read_bytes(is, &v, sizeof(v));
  return v;
}

}  // namespace detail

inline constexpr char kModelMagic[4] = {'C', '3', 'A', 'E'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_cae(Cae<float>& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  detail::write_bytes(os, kModelMagic, 4);
  detail::write_pod<std::uint32_t>(os, kModelVersion);
  const CaeConfig& cfg = model.config();
  detail::write_pod<std::int32_t>(os, cfg.code_channels);
  detail::write_pod<std::int32_t>(os, cfg.input_size);
  detail::write_pod<float>(os, static_cast<float>(cfg.dropout_rate));
  detail::write_pod<std::uint8_t>(os, cfg.with_head ? 1 : 0);
  auto params = model.named_params();
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (auto& np : params) {
    detail::write_pod<std::uint32_t>(os,
                                     static_cast<std::uint32_t>(np.name.size()));
    detail::write_bytes(os, np.name.data(), np.name.size());
    detail::write_pod<std::uint32_t>(
        os, static_cast<std::uint32_t>(np.tensor->shape.size()));
    for (int d : np.tensor->shape) detail::write_pod<std::int32_t>(os, d);
    detail::write_bytes(os, np.tensor->data.data(),
                        np.tensor->numel() * sizeof(float));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline Cae<float> load_cae(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[4];
  detail::read_bytes(is, magic, 4);
  if (std::memcmp(magic, kModelMagic, 4) != 0)
    throw ModelFormatError(ModelFormatError::Kind::BadMagic,
                           "not a model file (bad magic)");
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kModelVersion)
    throw ModelFormatError(ModelFormatError::Kind::BadVersion,
                           "unsupported model version " +
                               std::to_string(version));
  CaeConfig cfg;
  cfg.code_channels = detail::read_pod<std::int32_t>(is);
  cfg.input_size = detail::read_pod<std::int32_t>(is);
  cfg.dropout_rate = detail::read_pod<float>(is);
  cfg.with_head = detail::read_pod<std::uint8_t>(is) != 0;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ModelFormatError(ModelFormatError::Kind::Corrupt, e.what());
  }

  Cae<float> model(cfg, 0);
  auto params = model.named_params();
  const auto count = detail::read_pod<std::uint32_t>(is);
  if (count != params.size())
    throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                           "unexpected tensor count");
  for (auto& np : params) {
    const auto name_len = detail::read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    detail::read_bytes(is, name.data(), name_len);
    if (name != np.name)
      throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                             "unexpected tensor '" + name + "'");
    const auto ndim = detail::read_pod<std::uint32_t>(is);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = detail::read_pod<std::int32_t>(is);
    if (shape != np.tensor->shape)
      throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                             "shape mismatch for '" + name + "'");
    detail::read_bytes(is, np.tensor->data.data(),
                       np.tensor->numel() * sizeof(float));
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                           "trailing bytes after last tensor");
  return model;
}

}  // namespace c3ae
