#include "promnet/model.hpp"

#include <stdexcept>

namespace promnet {

namespace {

template <typename T>
void add_into(TensorT<T>& dst, const TensorT<T>& src) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = src;
  } else {
    accumulate(dst, src);
  }
}

template <typename T>
const TensorT<T>& or_zeros(const TensorT<T>& maybe, TensorT<T>& scratch,
                           const std::vector<std::int64_t>& shape) {
  if (!maybe.empty()) return maybe;
  scratch = TensorT<T>(shape);
  return scratch;
}

std::int64_t conv_params(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k) {
  return out_ch * in_ch * k * k + out_ch;
}

std::int64_t convlstm_params(std::int64_t in_ch, std::int64_t out_ch, std::int64_t k) {
  return 4 * (out_ch * in_ch * k * k + out_ch * out_ch * k * k + out_ch);
}

}  // namespace

void PromNetConfig::validate() const {
  if (input_h < 8 || input_w < 8 || input_h % 8 != 0 || input_w % 8 != 0)
    throw std::invalid_argument("promnet: frame size " + std::to_string(input_h) + "x" +
                                std::to_string(input_w) + " must be divisible by 8");
  if (input_channels != 1)
    throw std::invalid_argument("promnet: only single-channel (grayscale) input is supported");
  if (scale <= 0.0) throw std::invalid_argument("promnet: scale must be positive");
  if (t_in < 1 || t_out < 1)
    throw std::invalid_argument("promnet: t_in and t_out must be at least 1");
  if (lstm_kernel < 1 || lstm_kernel % 2 == 0)
    throw std::invalid_argument("promnet: lstm_kernel must be odd");
  if (deconv_kernel != 4)
    throw std::invalid_argument("promnet: deconv kernel is fixed at 4 (stride 2, pad 1)");
}

std::int64_t param_count(const PromNetConfig& cfg) {
  cfg.validate();
  const std::int64_t k = cfg.lstm_kernel, dk = cfg.deconv_kernel;
  const std::int64_t c8 = cfg.ch(8), c16 = cfg.ch(16), c32 = cfg.ch(32), c4 = cfg.ch(4);
  std::int64_t n = 0;
  n += conv_params(c8, cfg.input_channels, 3);  // enc_conv1
  n += conv_params(c16, c8, 5);                 // enc_conv2
  n += convlstm_params(c16, c16, k) + 2 * c16;  // enc_lstm1 + bn
  n += convlstm_params(c16, c32, k) + 2 * c32;  // enc_lstm2 + bn
  n += convlstm_params(c32, c32, k) + 2 * c32;  // dec_lstm1 + bn
  n += c32 * c16 * dk * dk + c16;               // deconv1
  n += convlstm_params(c16, c16, k) + 2 * c16;  // dec_lstm2 + bn
  n += c16 * c8 * dk * dk + c8;                 // deconv2
  n += convlstm_params(c8, c8, k) + 2 * c8;     // dec_lstm3 + bn
  n += c8 * c4 * dk * dk + c4;                  // deconv3
  n += conv_params(cfg.input_channels, c4, 3);  // out_conv
  return n;
}

template <typename T>
PromNet<T>::PromNet(const PromNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(Rng::derive(seed, 0x70726f6dULL));
  const std::int64_t c8 = cfg_.ch(8), c16 = cfg_.ch(16), c32 = cfg_.ch(32), c4 = cfg_.ch(4);
  const int k = cfg_.lstm_kernel, dk = cfg_.deconv_kernel;

  enc_conv1 = ConvLayer<T>(c8, cfg_.input_channels, 3, 1, 1, rng);
  enc_conv2 = ConvLayer<T>(c16, c8, 5, 2, 2, rng);
  enc_lstm1 = ConvLstmCell<T>({c16, c16, k, 1}, rng);
  enc_bn1 = BatchNormLayer<T>(c16);
  enc_lstm2 = ConvLstmCell<T>({c16, c32, k, 2}, rng);
  enc_bn2 = BatchNormLayer<T>(c32);

  dec_lstm1 = ConvLstmCell<T>({c32, c32, k, 1}, rng);
  dec_bn1 = BatchNormLayer<T>(c32);
  deconv1 = DeconvLayer<T>(c32, c16, dk, 2, 1, rng);
  dec_lstm2 = ConvLstmCell<T>({c16, c16, k, 1}, rng);
  dec_bn2 = BatchNormLayer<T>(c16);
  deconv2 = DeconvLayer<T>(c16, c8, dk, 2, 1, rng);
  dec_lstm3 = ConvLstmCell<T>({c8, c8, k, 1}, rng);
  dec_bn3 = BatchNormLayer<T>(c8);
  deconv3 = DeconvLayer<T>(c8, c4, dk, 2, 1, rng);
  out_conv = ConvLayer<T>(cfg_.input_channels, c4, 3, 1, 1, rng);
}

template <typename T>
EncoderStates<T> PromNet<T>::initial_encoder_states(std::int64_t batch) const {
  EncoderStates<T> s;
  s.lstm1 = enc_lstm1.zero_state(batch, cfg_.input_h / 4, cfg_.input_w / 4);
  s.lstm2 = enc_lstm2.zero_state(batch, cfg_.input_h / 4, cfg_.input_w / 4);
  return s;
}

template <typename T>
EncoderFeatures<T> PromNet<T>::encode_step(const TensorT<T>& frame, EncoderStates<T>& states,
                                           bool train_bn, EncodeCtx<T>* ctx) {
  require_rank(frame, 4, "encode_step", "frame");
  if (frame.dim(1) != cfg_.input_channels || frame.dim(2) != cfg_.input_h ||
      frame.dim(3) != cfg_.input_w)
    throw std::invalid_argument("encode_step: frame shape " + shape_str(frame.shape) +
                                " does not match configured " +
                                shape_str({frame.dim(0), cfg_.input_channels, cfg_.input_h,
                                           cfg_.input_w}));

  TensorT<T> conv1_out = enc_conv1.forward(frame);
  TensorT<T> r1 = relu(conv1_out);
  MaxPool2dResult<T> pool = maxpool2d(r1, 2, 2);
  TensorT<T> conv2_out = enc_conv2.forward(pool.out);
  TensorT<T> r2 = relu(conv2_out);

  ConvLstmState<T> st1 =
      enc_lstm1.step(r2, states.lstm1, ctx ? &ctx->lstm1 : nullptr);
  TensorT<T> bn1_out = enc_bn1.forward(st1.h, train_bn, ctx ? &ctx->bn1 : nullptr);
  ConvLstmState<T> st2 =
      enc_lstm2.step(bn1_out, states.lstm2, ctx ? &ctx->lstm2 : nullptr);
  TensorT<T> latent = enc_bn2.forward(st2.h, train_bn, ctx ? &ctx->bn2 : nullptr);

  EncoderFeatures<T> feats;
  feats.s1 = pool.out;
  feats.s2 = st1.h;
  feats.latent = std::move(latent);

  if (ctx) {
    ctx->frame = frame;
    ctx->conv1_out = std::move(conv1_out);
    ctx->pool_in_shape = r1.shape;
    ctx->pool_argmax = std::move(pool.argmax);
    ctx->pool_out = feats.s1;
    ctx->conv2_out = std::move(conv2_out);
  }
  states.lstm1 = std::move(st1);
  states.lstm2 = std::move(st2);
  return feats;
}

template <typename T>
DecoderStates<T> PromNet<T>::initial_decoder_states(const EncoderStates<T>& enc_states) const {
  // mirror seeding: the encoder states hand their spatio-temporal summary to
  // the geometry-matched decoder layers; dec-LSTM3 has no encoder counterpart
  DecoderStates<T> d;
  d.lstm1 = enc_states.lstm2;
  d.lstm2 = enc_states.lstm1;
  const std::int64_t n = d.lstm1.h.dim(0);
  const std::int64_t h8 = d.lstm1.h.dim(2), w8 = d.lstm1.h.dim(3);
  d.lstm3 = dec_lstm3.zero_state(n, 4 * h8, 4 * w8);
  d.initialized = true;
  return d;
}

template <typename T>
TensorT<T> PromNet<T>::output_activation(const TensorT<T>& y) const {
  if (cfg_.output_activation == PromNetConfig::OutputActivation::sigmoid) return sigmoid(y);
  TensorT<T> out(y.shape);
  for (std::int64_t i = 0; i < y.numel(); ++i)
    out[i] = y[i] < T(0) ? T(0) : (y[i] > T(1) ? T(1) : y[i]);
  return out;
}

template <typename T>
TensorT<T> PromNet<T>::output_activation_backward(const TensorT<T>& frame,
                                                  const TensorT<T>& gframe) const {
  TensorT<T> gy(frame.shape);
  if (cfg_.output_activation == PromNetConfig::OutputActivation::sigmoid) {
    sigmoid_backward(frame, gframe, &gy);
  } else {
    for (std::int64_t i = 0; i < frame.numel(); ++i)
      if (frame[i] > T(0) && frame[i] < T(1)) gy[i] = gframe[i];
  }
  return gy;
}

template <typename T>
TensorT<T> PromNet<T>::decode_step(DecoderStates<T>& states, const EncoderFeatures<T>& feats,
                                   bool train_bn, DecodeCtx<T>* ctx) {
  if (!states.initialized)
    throw std::invalid_argument("decode_step: decoder states are not initialized");

  ConvLstmState<T> st1 =
      dec_lstm1.step(feats.latent, states.lstm1, ctx ? &ctx->lstm1 : nullptr);
  TensorT<T> b1 = dec_bn1.forward(st1.h, train_bn, ctx ? &ctx->bn1 : nullptr);
  TensorT<T> f1 = add(deconv1.forward(b1), feats.s2);
  TensorT<T> r1 = relu(f1);

  ConvLstmState<T> st2 = dec_lstm2.step(r1, states.lstm2, ctx ? &ctx->lstm2 : nullptr);
  TensorT<T> b2 = dec_bn2.forward(st2.h, train_bn, ctx ? &ctx->bn2 : nullptr);
  TensorT<T> f2 = add(deconv2.forward(b2), feats.s1);
  TensorT<T> r2 = relu(f2);

  ConvLstmState<T> st3 = dec_lstm3.step(r2, states.lstm3, ctx ? &ctx->lstm3 : nullptr);
  TensorT<T> b3 = dec_bn3.forward(st3.h, train_bn, ctx ? &ctx->bn3 : nullptr);
  TensorT<T> d3 = deconv3.forward(b3);
  TensorT<T> r3 = relu(d3);
  TensorT<T> y = out_conv.forward(r3);
  TensorT<T> frame = output_activation(y);

  if (ctx) {
    ctx->b1 = std::move(b1);
    ctx->f1 = std::move(f1);
    ctx->b2 = std::move(b2);
    ctx->f2 = std::move(f2);
    ctx->b3 = std::move(b3);
    ctx->d3 = std::move(d3);
    ctx->r3 = std::move(r3);
    ctx->frame = frame;
  }
  states.lstm1 = std::move(st1);
  states.lstm2 = std::move(st2);
  states.lstm3 = std::move(st3);
  return frame;
}

template <typename T>
EncoderFeatures<T> PromNet<T>::decode_backward(const DecodeCtx<T>& ctx, const TensorT<T>& g_frame,
                                               StateGradPair<T>& carry1, StateGradPair<T>& carry2,
                                               StateGradPair<T>& carry3) {
  TensorT<T> g_y = output_activation_backward(ctx.frame, g_frame);
  TensorT<T> g_r3 = out_conv.backward(ctx.r3, g_y);
  TensorT<T> g_d3(ctx.d3.shape);
  relu_backward(ctx.d3, g_r3, &g_d3);
  TensorT<T> g_b3 = deconv3.backward(ctx.b3, g_d3);
  TensorT<T> g_u3 = dec_bn3.backward(ctx.bn3, g_b3);
  add_into(g_u3, carry3.gh);
  auto sg3 = dec_lstm3.step_backward(ctx.lstm3, g_u3, carry3.gc);
  carry3 = {std::move(sg3.gh_prev), std::move(sg3.gc_prev)};

  TensorT<T> g_f2(ctx.f2.shape);
  relu_backward(ctx.f2, sg3.gx, &g_f2);
  EncoderFeatures<T> g_feats;
  g_feats.s1 = g_f2;  // skip add fans out
  TensorT<T> g_b2 = deconv2.backward(ctx.b2, g_f2);
  TensorT<T> g_u2 = dec_bn2.backward(ctx.bn2, g_b2);
  add_into(g_u2, carry2.gh);
  auto sg2 = dec_lstm2.step_backward(ctx.lstm2, g_u2, carry2.gc);
  carry2 = {std::move(sg2.gh_prev), std::move(sg2.gc_prev)};

  TensorT<T> g_f1(ctx.f1.shape);
  relu_backward(ctx.f1, sg2.gx, &g_f1);
  g_feats.s2 = g_f1;
  TensorT<T> g_b1 = deconv1.backward(ctx.b1, g_f1);
  TensorT<T> g_u1 = dec_bn1.backward(ctx.bn1, g_b1);
  add_into(g_u1, carry1.gh);
  auto sg1 = dec_lstm1.step_backward(ctx.lstm1, g_u1, carry1.gc);
  carry1 = {std::move(sg1.gh_prev), std::move(sg1.gc_prev)};
  g_feats.latent = std::move(sg1.gx);
  return g_feats;
}

template <typename T>
TensorT<T> PromNet<T>::encode_backward(const EncodeCtx<T>& ctx, const EncoderFeatures<T>& g_feats,
                                       StateGradPair<T>& carry1, StateGradPair<T>& carry2) {
  TensorT<T> scratch;
  const TensorT<T>& g_latent = or_zeros(g_feats.latent, scratch, ctx.bn2.xhat.shape);
  TensorT<T> g_h2 = enc_bn2.backward(ctx.bn2, g_latent);
  add_into(g_h2, carry2.gh);
  auto sg2 = enc_lstm2.step_backward(ctx.lstm2, g_h2, carry2.gc);
  carry2 = {std::move(sg2.gh_prev), std::move(sg2.gc_prev)};

  TensorT<T> g_h1 = enc_bn1.backward(ctx.bn1, sg2.gx);
  add_into(g_h1, g_feats.s2);
  add_into(g_h1, carry1.gh);
  auto sg1 = enc_lstm1.step_backward(ctx.lstm1, g_h1, carry1.gc);
  carry1 = {std::move(sg1.gh_prev), std::move(sg1.gc_prev)};

  TensorT<T> g_conv2(ctx.conv2_out.shape);
  relu_backward(ctx.conv2_out, sg1.gx, &g_conv2);
  TensorT<T> g_pool = enc_conv2.backward(ctx.pool_out, g_conv2);
  add_into(g_pool, g_feats.s1);
  TensorT<T> g_r1(ctx.pool_in_shape);
  maxpool2d_backward(ctx.pool_argmax, ctx.pool_in_shape, g_pool, &g_r1);
  TensorT<T> g_conv1(ctx.conv1_out.shape);
  relu_backward(ctx.conv1_out, g_r1, &g_conv1);
  return enc_conv1.backward(ctx.frame, g_conv1);
}

template <typename T>
std::vector<TensorT<T>> PromNet<T>::predict_sequence(const std::vector<TensorT<T>>& frames) {
  if (static_cast<int>(frames.size()) != cfg_.t_in)
    throw std::invalid_argument("predict_sequence: expected " + std::to_string(cfg_.t_in) +
                                " input frames, got " + std::to_string(frames.size()));
  EncoderStates<T> enc_states = initial_encoder_states(frames[0].dim(0));
  EncoderFeatures<T> feats;
  for (const auto& f : frames) feats = encode_step(f, enc_states, false, nullptr);
  DecoderStates<T> dec_states = initial_decoder_states(enc_states);
  std::vector<TensorT<T>> preds;
  preds.reserve(static_cast<std::size_t>(cfg_.t_out));
  for (int k = 0; k < cfg_.t_out; ++k) {
    preds.push_back(decode_step(dec_states, feats, false, nullptr));
    if (k + 1 < cfg_.t_out) feats = encode_step(preds.back(), enc_states, false, nullptr);
  }
  return preds;
}

template <typename T>
T PromNet<T>::forward_train(const std::vector<TensorT<T>>& inputs,
                            const std::vector<TensorT<T>>& targets, bool teacher_forcing,
                            bool train_batchnorm) {
  if (static_cast<int>(inputs.size()) != cfg_.t_in)
    throw std::invalid_argument("forward_train: expected " + std::to_string(cfg_.t_in) +
                                " input frames, got " + std::to_string(inputs.size()));
  if (static_cast<int>(targets.size()) != cfg_.t_out)
    throw std::invalid_argument("forward_train: expected " + std::to_string(cfg_.t_out) +
                                " target frames, got " + std::to_string(targets.size()));
  const int t_in = cfg_.t_in, t_out = cfg_.t_out;

  std::vector<EncodeCtx<T>> enc_ctxs(static_cast<std::size_t>(t_in + t_out - 1));
  std::vector<DecodeCtx<T>> dec_ctxs(static_cast<std::size_t>(t_out));
  std::vector<TensorT<T>> preds(static_cast<std::size_t>(t_out));

  EncoderStates<T> enc_states = initial_encoder_states(inputs[0].dim(0));
  EncoderFeatures<T> feats;
  for (int t = 0; t < t_in; ++t)
    feats = encode_step(inputs[static_cast<std::size_t>(t)], enc_states, train_batchnorm,
                        &enc_ctxs[static_cast<std::size_t>(t)]);

  DecoderStates<T> dec_states = initial_decoder_states(enc_states);
  T loss = T(0);
  for (int k = 0; k < t_out; ++k) {
    preds[static_cast<std::size_t>(k)] =
        decode_step(dec_states, feats, train_batchnorm, &dec_ctxs[static_cast<std::size_t>(k)]);
    loss += mse_loss(preds[static_cast<std::size_t>(k)], targets[static_cast<std::size_t>(k)]) /
            static_cast<T>(t_out);
    if (k + 1 < t_out) {
      const TensorT<T>& feed =
          teacher_forcing ? targets[static_cast<std::size_t>(k)] : preds[static_cast<std::size_t>(k)];
      feats = encode_step(feed, enc_states, train_batchnorm,
                          &enc_ctxs[static_cast<std::size_t>(t_in + k)]);
    }
  }

  // ---- backward, in exact reverse op order ----
  StateGradPair<T> e1, e2, d1, d2, d3;
  EncoderFeatures<T> g_feats_next;  // dLoss/dfeats consumed by the decode step above
  TensorT<T> g_feed;                // dLoss/d(re-encoded frame)
  for (int k = t_out - 1; k >= 0; --k) {
    TensorT<T> g_pred = mse_loss_backward(preds[static_cast<std::size_t>(k)],
                                          targets[static_cast<std::size_t>(k)],
                                          T(1) / static_cast<T>(t_out));
    if (k + 1 < t_out) {
      g_feed = encode_backward(enc_ctxs[static_cast<std::size_t>(t_in + k)], g_feats_next, e1, e2);
      if (!teacher_forcing) accumulate(g_pred, g_feed);
    }
    g_feats_next = decode_backward(dec_ctxs[static_cast<std::size_t>(k)], g_pred, d1, d2, d3);
  }

  // decoder LSTM1/LSTM2 were seeded from the encoder's final states
  add_into(e2.gh, d1.gh);
  add_into(e2.gc, d1.gc);
  add_into(e1.gh, d2.gh);
  add_into(e1.gc, d2.gc);

  for (int t = t_in - 1; t >= 0; --t) {
    EncoderFeatures<T> g_feats = (t == t_in - 1) ? std::move(g_feats_next) : EncoderFeatures<T>{};
    encode_backward(enc_ctxs[static_cast<std::size_t>(t)], g_feats, e1, e2);
  }
  return loss;
}

template <typename T>
std::vector<ParamRef<T>> PromNet<T>::params() {
  std::vector<ParamRef<T>> out;
  enc_conv1.collect("enc_conv1", out);
  enc_conv2.collect("enc_conv2", out);
  enc_lstm1.collect_params("enc_lstm1", out);
  enc_bn1.collect("enc_bn1", out);
  enc_lstm2.collect_params("enc_lstm2", out);
  enc_bn2.collect("enc_bn2", out);
  dec_lstm1.collect_params("dec_lstm1", out);
  dec_bn1.collect("dec_bn1", out);
  deconv1.collect("deconv1", out);
  dec_lstm2.collect_params("dec_lstm2", out);
  dec_bn2.collect("dec_bn2", out);
  deconv2.collect("deconv2", out);
  dec_lstm3.collect_params("dec_lstm3", out);
  dec_bn3.collect("dec_bn3", out);
  deconv3.collect("deconv3", out);
  out_conv.collect("out_conv", out);
  return out;
}

template <typename T>
std::vector<ParamRef<T>> PromNet<T>::state_buffers() {
  std::vector<ParamRef<T>> out;
  enc_bn1.collect_stats("enc_bn1", out);
  enc_bn2.collect_stats("enc_bn2", out);
  dec_bn1.collect_stats("dec_bn1", out);
  dec_bn2.collect_stats("dec_bn2", out);
  dec_bn3.collect_stats("dec_bn3", out);
  return out;
}

template <typename T>
void PromNet<T>::zero_grad() {
  enc_conv1.zero_grad();
  enc_conv2.zero_grad();
  enc_lstm1.zero_grad();
  enc_bn1.zero_grad();
  enc_lstm2.zero_grad();
  enc_bn2.zero_grad();
  dec_lstm1.zero_grad();
  dec_bn1.zero_grad();
  deconv1.zero_grad();
  dec_lstm2.zero_grad();
  dec_bn2.zero_grad();
  deconv2.zero_grad();
  dec_lstm3.zero_grad();
  dec_bn3.zero_grad();
  deconv3.zero_grad();
  out_conv.zero_grad();
}

template <typename T>
std::int64_t PromNet<T>::param_count() const {
  std::int64_t n = 0;
  for (const auto& p : const_cast<PromNet<T>*>(this)->params()) n += p.value->numel();
  return n;
}

// ---------------------------------------------------------------------------
// FC-LSTM baseline

void FcLstmConfig::validate() const {
  if (input_h < 1 || input_w < 1) throw std::invalid_argument("fclstm: frame size must be positive");
  if (layers != 2) throw std::invalid_argument("fclstm: the baseline is fixed at 2 layers");
  if (t_in < 1 || t_out < 1) throw std::invalid_argument("fclstm: t_in and t_out must be at least 1");
  if (scale <= 0.0) throw std::invalid_argument("fclstm: scale must be positive");
}

std::int64_t param_count(const FcLstmConfig& cfg) {
  cfg.validate();
  const std::int64_t f = cfg.flat_size(), h = cfg.hidden_size();
  return convlstm_params(f, h, 1) + convlstm_params(h, h, 1) + (f * h + f);
}

template <typename T>
FcLstm<T>::FcLstm(const FcLstmConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(Rng::derive(seed, 0x66636cULL));
  const std::int64_t f = cfg_.flat_size(), h = cfg_.hidden_size();
  lstm1 = ConvLstmCell<T>({f, h, 1, 1}, rng);
  lstm2 = ConvLstmCell<T>({h, h, 1, 1}, rng);
  head = ConvLayer<T>(f, h, 1, 1, 0, rng);
}

template <typename T>
TensorT<T> FcLstm<T>::flatten(const TensorT<T>& frame) const {
  require_rank(frame, 4, "fclstm", "frame");
  if (frame.dim(1) != 1 || frame.dim(2) != cfg_.input_h || frame.dim(3) != cfg_.input_w)
    throw std::invalid_argument("fclstm: frame shape " + shape_str(frame.shape) +
                                " does not match configured " +
                                shape_str({frame.dim(0), 1, cfg_.input_h, cfg_.input_w}));
  return frame.reshaped({frame.dim(0), cfg_.flat_size(), 1, 1});
}

template <typename T>
std::vector<TensorT<T>> FcLstm<T>::predict_sequence(const std::vector<TensorT<T>>& frames) {
  if (static_cast<int>(frames.size()) != cfg_.t_in)
    throw std::invalid_argument("predict_sequence: expected " + std::to_string(cfg_.t_in) +
                                " input frames, got " + std::to_string(frames.size()));
  const std::int64_t n = frames[0].dim(0);
  ConvLstmState<T> s1 = lstm1.zero_state(n, 1, 1);
  ConvLstmState<T> s2 = lstm2.zero_state(n, 1, 1);
  std::vector<TensorT<T>> preds;
  const int total = cfg_.t_in + cfg_.t_out - 1;
  for (int s = 0; s < total; ++s) {
    const TensorT<T>& in_frame =
        s < cfg_.t_in ? frames[static_cast<std::size_t>(s)]
                      : preds[static_cast<std::size_t>(s - cfg_.t_in)];
    s1 = lstm1.step(flatten(in_frame), s1, nullptr);
    s2 = lstm2.step(s1.h, s2, nullptr);
    if (s >= cfg_.t_in - 1) {
      TensorT<T> y = head.forward(s2.h);
      preds.push_back(sigmoid(y).reshaped({n, 1, cfg_.input_h, cfg_.input_w}));
    }
  }
  return preds;
}

template <typename T>
T FcLstm<T>::forward_train(const std::vector<TensorT<T>>& inputs,
                           const std::vector<TensorT<T>>& targets, bool teacher_forcing) {
  if (static_cast<int>(inputs.size()) != cfg_.t_in)
    throw std::invalid_argument("forward_train: expected " + std::to_string(cfg_.t_in) +
                                " input frames, got " + std::to_string(inputs.size()));
  if (static_cast<int>(targets.size()) != cfg_.t_out)
    throw std::invalid_argument("forward_train: expected " + std::to_string(cfg_.t_out) +
                                " target frames, got " + std::to_string(targets.size()));
  const std::int64_t n = inputs[0].dim(0);
  const int t_in = cfg_.t_in, t_out = cfg_.t_out;
  const int total = t_in + t_out - 1;

  ConvLstmState<T> s1 = lstm1.zero_state(n, 1, 1);
  ConvLstmState<T> s2 = lstm2.zero_state(n, 1, 1);
  std::vector<ConvLstmStepCtx<T>> ctx1(static_cast<std::size_t>(total));
  std::vector<ConvLstmStepCtx<T>> ctx2(static_cast<std::size_t>(total));
  std::vector<TensorT<T>> head_in(static_cast<std::size_t>(t_out));
  std::vector<TensorT<T>> sig_out(static_cast<std::size_t>(t_out));  // flat
  std::vector<TensorT<T>> preds(static_cast<std::size_t>(t_out));

  T loss = T(0);
  for (int s = 0; s < total; ++s) {
    const TensorT<T>& in_frame =
        s < t_in ? inputs[static_cast<std::size_t>(s)]
                 : (teacher_forcing ? targets[static_cast<std::size_t>(s - t_in)]
                                    : preds[static_cast<std::size_t>(s - t_in)]);
    s1 = lstm1.step(flatten(in_frame), s1, &ctx1[static_cast<std::size_t>(s)]);
    s2 = lstm2.step(s1.h, s2, &ctx2[static_cast<std::size_t>(s)]);
    if (s >= t_in - 1) {
      const int k = s - t_in + 1;
      head_in[static_cast<std::size_t>(k)] = s2.h;
      TensorT<T> y = head.forward(s2.h);
      sig_out[static_cast<std::size_t>(k)] = sigmoid(y);
      preds[static_cast<std::size_t>(k)] = sig_out[static_cast<std::size_t>(k)].reshaped(
          {n, 1, cfg_.input_h, cfg_.input_w});
      loss += mse_loss(preds[static_cast<std::size_t>(k)], targets[static_cast<std::size_t>(k)]) /
              static_cast<T>(t_out);
    }
  }

  StateGradPair<T> c1, c2;
  std::vector<TensorT<T>> g_pred_extra(static_cast<std::size_t>(t_out));  // from autoregressive feed
  for (int s = total - 1; s >= 0; --s) {
    TensorT<T> gh2;
    if (s >= t_in - 1) {
      const int k = s - t_in + 1;
      TensorT<T> g_frame = mse_loss_backward(preds[static_cast<std::size_t>(k)],
                                             targets[static_cast<std::size_t>(k)],
                                             T(1) / static_cast<T>(t_out));
      add_into(g_frame, g_pred_extra[static_cast<std::size_t>(k)]);
      TensorT<T> g_flat = g_frame.reshaped(sig_out[static_cast<std::size_t>(k)].shape);
      TensorT<T> g_y(g_flat.shape);
      sigmoid_backward(sig_out[static_cast<std::size_t>(k)], g_flat, &g_y);
      gh2 = head.backward(head_in[static_cast<std::size_t>(k)], g_y);
    }
    add_into(gh2, c2.gh);
    if (gh2.empty()) gh2 = TensorT<T>(ctx2[static_cast<std::size_t>(s)].c_new.shape);
    auto sg2 = lstm2.step_backward(ctx2[static_cast<std::size_t>(s)], gh2, c2.gc);
    c2 = {std::move(sg2.gh_prev), std::move(sg2.gc_prev)};

    TensorT<T> gh1 = std::move(sg2.gx);
    add_into(gh1, c1.gh);
    auto sg1 = lstm1.step_backward(ctx1[static_cast<std::size_t>(s)], gh1, c1.gc);
    c1 = {std::move(sg1.gh_prev), std::move(sg1.gc_prev)};

    if (s >= t_in && !teacher_forcing) {
      g_pred_extra[static_cast<std::size_t>(s - t_in)] =
          sg1.gx.reshaped({n, std::int64_t(1), cfg_.input_h, cfg_.input_w});
    }
  }
  return loss;
}

template <typename T>
std::vector<ParamRef<T>> FcLstm<T>::params() {
  std::vector<ParamRef<T>> out;
  lstm1.collect_params("lstm1", out);
  lstm2.collect_params("lstm2", out);
  head.collect("head", out);
  return out;
}

template <typename T>
void FcLstm<T>::zero_grad() {
  lstm1.zero_grad();
  lstm2.zero_grad();
  head.zero_grad();
}

template <typename T>
std::int64_t FcLstm<T>::param_count() const {
  std::int64_t n = 0;
  for (const auto& p : const_cast<FcLstm<T>*>(this)->params()) n += p.value->numel();
  return n;
}

template class PromNet<float>;
template class PromNet<double>;
template class FcLstm<float>;
template class FcLstm<double>;

}  // namespace promnet
