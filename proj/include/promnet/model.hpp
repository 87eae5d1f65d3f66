#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "promnet/convlstm.hpp"
#include "promnet/ops.hpp"
#include "promnet/tensor.hpp"

namespace promnet {

// ---------------------------------------------------------------------------
// shared layer wrappers

template <typename T>
struct ConvLayer {
  TensorT<T> w, b, gw, gb;
  int stride = 1, pad = 0;

  ConvLayer() = default;
  ConvLayer(std::int64_t out_ch, std::int64_t in_ch, int kernel, int stride_, int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = TensorT<T>({out_ch, in_ch, kernel, kernel});
    b = TensorT<T>({out_ch});
    fill_glorot(w, rng, in_ch * kernel * kernel, out_ch * kernel * kernel);
    gw = zeros_like(w);
    gb = zeros_like(b);
  }

  TensorT<T> forward(const TensorT<T>& x) const { return conv2d(x, w, b, stride, pad); }
  TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& gy) {
    TensorT<T> gx(x.shape);
    conv2d_backward(x, w, stride, pad, gy, &gx, &gw, &gb);
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
  void zero_grad() {
    gw.zero();
    gb.zero();
  }
};

template <typename T>
struct DeconvLayer {
  TensorT<T> w, b, gw, gb;  // w is [Cin, Cout, k, k]
  int stride = 2, pad = 1;

  DeconvLayer() = default;
  DeconvLayer(std::int64_t in_ch, std::int64_t out_ch, int kernel, int stride_, int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = TensorT<T>({in_ch, out_ch, kernel, kernel});
    b = TensorT<T>({out_ch});
    fill_glorot(w, rng, in_ch * kernel * kernel, out_ch * kernel * kernel);
    gw = zeros_like(w);
    gb = zeros_like(b);
  }

  TensorT<T> forward(const TensorT<T>& x) const { return conv2d_transpose(x, w, b, stride, pad); }
  TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& gy) {
    TensorT<T> gx(x.shape);
    conv2d_transpose_backward(x, w, stride, pad, gy, &gx, &gw, &gb);
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
  void zero_grad() {
    gw.zero();
    gb.zero();
  }
};

template <typename T>
struct BatchNormLayer {
  TensorT<T> gamma, beta, ggamma, gbeta;
  TensorT<T> running_mean, running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::int64_t channels) {
    gamma = TensorT<T>({channels}, T(1));
    beta = TensorT<T>({channels});
    ggamma = zeros_like(gamma);
    gbeta = zeros_like(beta);
    running_mean = TensorT<T>({channels});
    running_var = TensorT<T>({channels}, T(1));
  }

  // Inference mode only reads the running stats.
  TensorT<T> forward(const TensorT<T>& x, bool train, BatchNormContext<T>* ctx) {
    return batchnorm(x, gamma, beta, running_mean, running_var, train, eps, momentum, ctx);
  }
  TensorT<T> backward(const BatchNormContext<T>& ctx, const TensorT<T>& gy) {
    TensorT<T> gx(gy.shape);
    batchnorm_backward(ctx, gamma, gy, &gx, &ggamma, &gbeta);
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
  }
  void collect_stats(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".running_mean", &running_mean, nullptr});
    out.push_back({prefix + ".running_var", &running_var, nullptr});
  }
  void zero_grad() {
    ggamma.zero();
    gbeta.zero();
  }
};

// ---------------------------------------------------------------------------
// PROM-Net

struct PromNetConfig {
  std::int64_t input_h = 64;
  std::int64_t input_w = 64;
  std::int64_t input_channels = 1;
  double scale = 1.0;  // channel multiplier; 1.0 reproduces the full network
  int t_in = 10;
  int t_out = 10;
  int lstm_kernel = 5;
  int deconv_kernel = 4;  // stride 2, pad 1: exact x2 upsampling
  enum class OutputActivation { sigmoid, relu_clamp };
  OutputActivation output_activation = OutputActivation::sigmoid;

  std::int64_t ch(std::int64_t base) const {
    std::int64_t v = static_cast<std::int64_t>(std::llround(static_cast<double>(base) * scale));
    return v < 1 ? 1 : v;
  }
  void validate() const;
};

// Exact count of trainable scalars (batchnorm gamma/beta included, running
// stats excluded) for a network built from this config.
std::int64_t param_count(const PromNetConfig& cfg);

template <typename T>
struct EncoderFeatures {
  TensorT<T> latent;  // [N, ch(32), H/8, W/8]
  TensorT<T> s1;      // post-pool map   [N, ch(8), H/2, W/2]
  TensorT<T> s2;      // enc-LSTM1 output [N, ch(16), H/4, W/4]
};

template <typename T>
struct EncoderStates {
  ConvLstmState<T> lstm1, lstm2;
};

template <typename T>
struct DecoderStates {
  ConvLstmState<T> lstm1, lstm2, lstm3;
  bool initialized = false;
};

template <typename T>
struct EncodeCtx {
  TensorT<T> frame, conv1_out, pool_out, conv2_out;
  std::vector<std::int64_t> pool_argmax;
  std::vector<std::int64_t> pool_in_shape;
  ConvLstmStepCtx<T> lstm1;
  BatchNormContext<T> bn1;
  ConvLstmStepCtx<T> lstm2;
  BatchNormContext<T> bn2;
};

template <typename T>
struct DecodeCtx {
  ConvLstmStepCtx<T> lstm1;
  BatchNormContext<T> bn1;
  TensorT<T> b1, f1;  // deconv1 input, pre-relu fusion
  ConvLstmStepCtx<T> lstm2;
  BatchNormContext<T> bn2;
  TensorT<T> b2, f2;
  ConvLstmStepCtx<T> lstm3;
  BatchNormContext<T> bn3;
  TensorT<T> b3, d3, r3;  // deconv3 input, pre-relu, head input
  TensorT<T> frame;       // post-activation output
};

// Backward-flowing (gh, gc) carries per recurrent layer.
template <typename T>
struct StateGradPair {
  TensorT<T> gh, gc;
};

// Encoder-decoder ConvLSTM network. One encode step per observed frame; each
// decode step consumes the most recent encoder features (latent + skips) and
// emits one predicted frame, which is re-encoded before the next decode step.
template <typename T>
class PromNet {
 public:
  using Scalar = T;

  PromNet() = default;
  PromNet(const PromNetConfig& cfg, std::uint64_t seed);

  const PromNetConfig& config() const { return cfg_; }

  EncoderStates<T> initial_encoder_states(std::int64_t batch) const;

  // conv -> relu -> maxpool -> conv -> relu -> lstm -> bn -> lstm(s2) -> bn
  EncoderFeatures<T> encode_step(const TensorT<T>& frame, EncoderStates<T>& states, bool train_bn,
                                 EncodeCtx<T>* ctx);

  // [lstm -> bn -> deconv (+skip, relu)] x3 -> conv -> output activation.
  // Seeds dec-LSTM1 from the encoder's final LSTM2 state on first use.
  TensorT<T> decode_step(DecoderStates<T>& states, const EncoderFeatures<T>& feats, bool train_bn,
                         DecodeCtx<T>* ctx);

  DecoderStates<T> initial_decoder_states(const EncoderStates<T>& enc_states) const;

  // t_in frames in, t_out frames out. Inference mode: reads parameters and
  // running stats, mutates nothing, safe to call from several threads.
  std::vector<TensorT<T>> predict_sequence(const std::vector<TensorT<T>>& frames);

  // Returns the mean over the horizon of per-frame MSE and accumulates
  // parameter gradients for the whole unrolled graph. train_batchnorm=false
  // runs the same graph against running stats, which makes the forward pass
  // coincide with predict_sequence.
  T forward_train(const std::vector<TensorT<T>>& inputs, const std::vector<TensorT<T>>& targets,
                  bool teacher_forcing, bool train_batchnorm = true);

  std::vector<ParamRef<T>> params();
  std::vector<ParamRef<T>> state_buffers();
  void zero_grad();
  std::int64_t param_count() const;

  ConvLayer<T> enc_conv1, enc_conv2, out_conv;
  ConvLstmCell<T> enc_lstm1, enc_lstm2, dec_lstm1, dec_lstm2, dec_lstm3;
  BatchNormLayer<T> enc_bn1, enc_bn2, dec_bn1, dec_bn2, dec_bn3;
  DeconvLayer<T> deconv1, deconv2, deconv3;

 private:
  TensorT<T> output_activation(const TensorT<T>& y) const;
  TensorT<T> output_activation_backward(const TensorT<T>& frame, const TensorT<T>& gframe) const;

  // Adjoint of one encode step. g_feats entries may be empty (treated as 0);
  // carries are updated in place; returns dLoss/dframe.
  TensorT<T> encode_backward(const EncodeCtx<T>& ctx, const EncoderFeatures<T>& g_feats,
                             StateGradPair<T>& carry1, StateGradPair<T>& carry2);

  // Adjoint of one decode step; returns the encoder-feature gradients.
  EncoderFeatures<T> decode_backward(const DecodeCtx<T>& ctx, const TensorT<T>& g_frame,
                                     StateGradPair<T>& carry1, StateGradPair<T>& carry2,
                                     StateGradPair<T>& carry3);

  PromNetConfig cfg_;
};

// ---------------------------------------------------------------------------
// FC-LSTM baseline: flattened frames through two dense LSTM layers (realized
// as 1x1 ConvLSTM cells on [N, H*W, 1, 1]) and a linear head.

struct FcLstmConfig {
  std::int64_t input_h = 64;
  std::int64_t input_w = 64;
  std::int64_t hidden = 0;  // 0: derived as max(8, round(input_h*input_w*scale))
  int layers = 2;
  int t_in = 10;
  int t_out = 10;
  double scale = 1.0;

  std::int64_t flat_size() const { return input_h * input_w; }
  std::int64_t hidden_size() const {
    if (hidden > 0) return hidden;
    auto v = static_cast<std::int64_t>(std::llround(static_cast<double>(flat_size()) * scale));
    return v < 8 ? 8 : v;
  }
  void validate() const;
};

std::int64_t param_count(const FcLstmConfig& cfg);

template <typename T>
class FcLstm {
 public:
  using Scalar = T;

  FcLstm() = default;
  FcLstm(const FcLstmConfig& cfg, std::uint64_t seed);

  const FcLstmConfig& config() const { return cfg_; }

  std::vector<TensorT<T>> predict_sequence(const std::vector<TensorT<T>>& frames);
  T forward_train(const std::vector<TensorT<T>>& inputs, const std::vector<TensorT<T>>& targets,
                  bool teacher_forcing);

  std::vector<ParamRef<T>> params();
  std::vector<ParamRef<T>> state_buffers() { return {}; }
  void zero_grad();
  std::int64_t param_count() const;

  ConvLstmCell<T> lstm1, lstm2;
  ConvLayer<T> head;

 private:
  TensorT<T> flatten(const TensorT<T>& frame) const;
  FcLstmConfig cfg_;
};

}  // namespace promnet
