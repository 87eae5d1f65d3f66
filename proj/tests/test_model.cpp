#include <cmath>

#include "doctest.h"
#include "promnet/model.hpp"

using namespace promnet;

namespace {

template <typename T>
std::vector<TensorT<T>> random_frames(int count, std::int64_t n, std::int64_t h, std::int64_t w,
                                      Rng& rng) {
  std::vector<TensorT<T>> out;
  for (int t = 0; t < count; ++t) {
    TensorT<T> f({n, 1, h, w});
    fill_uniform(f, rng, 0.0, 1.0);
    out.push_back(std::move(f));
  }
  return out;
}

PromNetConfig tiny_config() {
  PromNetConfig cfg;
  cfg.input_h = 16;
  cfg.input_w = 16;
  cfg.scale = 1.0 / 8.0;
  cfg.t_in = 2;
  cfg.t_out = 2;
  return cfg;
}

}  // namespace

TEST_CASE("scale=1 layer chain reproduces the configured progression") {
  PromNetConfig cfg;  // 64x64, scale 1
  PromNet<float> net(cfg, 1);
  Rng rng(1);
  TensorT<float> frame({1, 1, 64, 64});
  fill_uniform(frame, rng, 0.0, 1.0);

  auto states = net.initial_encoder_states(1);
  EncodeCtx<float> ctx;
  auto feats = net.encode_step(frame, states, true, &ctx);
  CHECK(ctx.conv1_out.shape == std::vector<std::int64_t>{1, 8, 64, 64});
  CHECK(feats.s1.shape == std::vector<std::int64_t>{1, 8, 32, 32});
  CHECK(feats.s2.shape == std::vector<std::int64_t>{1, 16, 16, 16});
  CHECK(feats.latent.shape == std::vector<std::int64_t>{1, 32, 8, 8});

  auto dec = net.initial_decoder_states(states);
  DecodeCtx<float> dctx;
  auto out = net.decode_step(dec, feats, true, &dctx);
  CHECK(dctx.b1.shape == std::vector<std::int64_t>{1, 32, 8, 8});
  CHECK(dctx.f1.shape == std::vector<std::int64_t>{1, 16, 16, 16});
  CHECK(dctx.f2.shape == std::vector<std::int64_t>{1, 8, 32, 32});
  CHECK(out.shape == std::vector<std::int64_t>{1, 1, 64, 64});
}

TEST_CASE("zero-initialized encoder maps a zero frame to a zero latent") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 3);
  for (auto& p : net.params()) p.value->zero();
  TensorT<float> frame({1, 1, 16, 16});
  auto states = net.initial_encoder_states(1);
  auto feats = net.encode_step(frame, states, true, nullptr);
  for (std::int64_t i = 0; i < feats.latent.numel(); ++i)
    CHECK(feats.latent[i] == doctest::Approx(0.0f));
}

TEST_CASE("zero net decodes to the constant 0.5 frame") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 5);
  for (auto& p : net.params()) p.value->zero();
  TensorT<float> frame({1, 1, 16, 16});
  auto states = net.initial_encoder_states(1);
  auto feats = net.encode_step(frame, states, true, nullptr);
  auto dec = net.initial_decoder_states(states);
  auto out = net.decode_step(dec, feats, true, nullptr);
  for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(0.5f));
}

TEST_CASE("decode_step requires initialized states") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 7);
  DecoderStates<float> dec;  // not initialized
  EncoderFeatures<float> feats;
  feats.latent = TensorT<float>({1, net.config().ch(32), 2, 2});
  feats.s1 = TensorT<float>({1, net.config().ch(8), 8, 8});
  feats.s2 = TensorT<float>({1, net.config().ch(16), 4, 4});
  CHECK_THROWS_AS(net.decode_step(dec, feats, true, nullptr), std::invalid_argument);
}

TEST_CASE("predict_sequence honors the 10-in/10-out contract") {
  PromNetConfig cfg;
  cfg.input_h = cfg.input_w = 16;
  cfg.scale = 1.0 / 8.0;
  PromNet<float> net(cfg, 9);
  Rng rng(9);
  auto frames = random_frames<float>(10, 1, 16, 16, rng);
  auto preds = net.predict_sequence(frames);
  REQUIRE(preds.size() == 10);
  for (const auto& p : preds) {
    CHECK(p.shape == std::vector<std::int64_t>{1, 1, 16, 16});
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      CHECK(p[i] >= 0.0f);
      CHECK(p[i] <= 1.0f);
    }
  }
  CHECK_THROWS_AS(net.predict_sequence(random_frames<float>(9, 1, 16, 16, rng)),
                  std::invalid_argument);

  auto again = net.predict_sequence(frames);
  for (std::size_t k = 0; k < preds.size(); ++k) CHECK(preds[k].data == again[k].data);
}

TEST_CASE("forward_train reproduces its own predictions at zero loss") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 11);
  Rng rng(11);
  auto inputs = random_frames<float>(cfg.t_in, 2, 16, 16, rng);
  auto targets = net.predict_sequence(inputs);
  net.zero_grad();
  // running-stat mode on both paths makes the graphs coincide exactly
  float loss = net.forward_train(inputs, targets, false, false);
  CHECK(loss == doctest::Approx(0.0f));
}

TEST_CASE("forward_train loss is non-negative and shapes are enforced") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 13);
  Rng rng(13);
  auto inputs = random_frames<float>(cfg.t_in, 1, 16, 16, rng);
  auto targets = random_frames<float>(cfg.t_out, 1, 16, 16, rng);
  net.zero_grad();
  float loss = net.forward_train(inputs, targets, true);
  CHECK(loss >= 0.0f);
  auto short_targets = random_frames<float>(1, 1, 16, 16, rng);
  CHECK_THROWS_AS(net.forward_train(inputs, short_targets, true), std::invalid_argument);
}

TEST_CASE("param_count matches the enumerated parameters and the hand count") {
  PromNetConfig cfg;
  CHECK(param_count(cfg) == 488337);  // scale 1: fixed by the layer table
  PromNet<float> tiny(tiny_config(), 15);
  CHECK(tiny.param_count() == param_count(tiny_config()));

  // enc_conv1 alone at scale 1: 8 filters of 1x3x3 plus bias = 80
  PromNet<float> full(cfg, 15);
  CHECK(full.enc_conv1.w.numel() + full.enc_conv1.b.numel() == 80);

  PromNetConfig half = cfg;
  half.scale = 0.5;
  CHECK(param_count(half) < param_count(cfg));
}

TEST_CASE("parameter enumeration is stable and uniquely named") {
  PromNet<float> net(tiny_config(), 17);
  auto a = net.params();
  auto b = net.params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].value == b[i].value);
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(a[i].name != a[j].name);
  }
}

TEST_CASE("fc-lstm baseline obeys the same sequence contract") {
  FcLstmConfig cfg;
  cfg.input_h = cfg.input_w = 16;
  cfg.hidden = 24;
  FcLstm<float> net(cfg, 19);
  Rng rng(19);
  auto frames = random_frames<float>(10, 1, 16, 16, rng);
  auto preds = net.predict_sequence(frames);
  REQUIRE(preds.size() == 10);
  for (const auto& p : preds) CHECK(p.shape == std::vector<std::int64_t>{1, 1, 16, 16});

  // zero weights: sigmoid(0) everywhere
  for (auto& p : net.params()) p.value->zero();
  auto zero_preds = net.predict_sequence(frames);
  for (const auto& p : zero_preds)
    for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(p[i] == doctest::Approx(0.5f));
}

TEST_CASE("fc-lstm hidden size defaults to 1024 at the desk scale") {
  FcLstmConfig cfg;
  cfg.scale = 0.25;
  CHECK(cfg.hidden_size() == 1024);
  CHECK(param_count(cfg) > 0);
}

TEST_CASE("skip fusion assembles identical shapes only") {
  PromNetConfig cfg = tiny_config();
  PromNet<float> net(cfg, 21);
  Rng rng(21);
  TensorT<float> frame({1, 1, 16, 16});
  fill_uniform(frame, rng, 0.0, 1.0);
  auto states = net.initial_encoder_states(1);
  auto feats = net.encode_step(frame, states, true, nullptr);
  auto dec = net.initial_decoder_states(states);
  feats.s1 = TensorT<float>({1, net.config().ch(8), 4, 4});  // wrong geometry
  CHECK_THROWS_AS(net.decode_step(dec, feats, true, nullptr), std::invalid_argument);
}
