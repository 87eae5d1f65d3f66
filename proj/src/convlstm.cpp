#include "promnet/convlstm.hpp"

#include <stdexcept>

namespace promnet {

namespace {
const char* gate_letter(int g) {
  static const char* names[4] = {"i", "f", "g", "o"};
  return names[g];
}
}  // namespace

template <typename T>
ConvLstmCell<T>::ConvLstmCell(const ConvLstmSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.kernel < 1 || spec.kernel % 2 == 0)
    throw std::invalid_argument("convlstm: kernel must be odd and positive, got " +
                                std::to_string(spec.kernel));
  if (spec.input_stride != 1 && spec.input_stride != 2)
    throw std::invalid_argument("convlstm: input_stride must be 1 or 2, got " +
                                std::to_string(spec.input_stride));
  if (spec.in_channels < 1 || spec.out_channels < 1)
    throw std::invalid_argument("convlstm: channel counts must be positive");
  if (spec.peepholes)
    throw std::invalid_argument(
        "convlstm: peephole connections are not implemented; construct with peepholes=false");

  const std::int64_t k = spec.kernel;
  for (int g = 0; g < 4; ++g) {
    wx[g] = TensorT<T>({spec.out_channels, spec.in_channels, k, k});
    wh[g] = TensorT<T>({spec.out_channels, spec.out_channels, k, k});
    b[g] = TensorT<T>({spec.out_channels});
    fill_glorot(wx[g], rng, spec.in_channels * k * k, spec.out_channels * k * k);
    fill_glorot(wh[g], rng, spec.out_channels * k * k, spec.out_channels * k * k);
    gwx[g] = zeros_like(wx[g]);
    gwh[g] = zeros_like(wh[g]);
    gb[g] = zeros_like(b[g]);
  }
  b[kGateF].fill(T(1));  // open forget gate at init
}

template <typename T>
ConvLstmState<T> ConvLstmCell<T>::zero_state(std::int64_t batch, std::int64_t in_h,
                                             std::int64_t in_w) const {
  if (batch < 1 || in_h < 1 || in_w < 1)
    throw std::invalid_argument("convlstm: zero_state dimensions must be positive");
  if (in_h % spec_.input_stride != 0 || in_w % spec_.input_stride != 0)
    throw std::invalid_argument("convlstm: input " + std::to_string(in_h) + "x" +
                                std::to_string(in_w) + " is not divisible by input_stride " +
                                std::to_string(spec_.input_stride));
  ConvLstmState<T> s;
  s.h = TensorT<T>({batch, spec_.out_channels, in_h / spec_.input_stride,
                    in_w / spec_.input_stride});
  s.c = zeros_like(s.h);
  return s;
}

template <typename T>
ConvLstmState<T> ConvLstmCell<T>::step(const TensorT<T>& x, const ConvLstmState<T>& state,
                                       ConvLstmStepCtx<T>* ctx) const {
  require_rank(x, 4, "convlstm_step", "input");
  if (x.dim(1) != spec_.in_channels)
    throw std::invalid_argument("convlstm_step: input has " + std::to_string(x.dim(1)) +
                                " channels, cell expects " + std::to_string(spec_.in_channels));
  const std::int64_t out_h = x.dim(2) / spec_.input_stride;
  const std::int64_t out_w = x.dim(3) / spec_.input_stride;
  std::vector<std::int64_t> want{x.dim(0), spec_.out_channels, out_h, out_w};
  if (state.h.shape != want || state.c.shape != want)
    throw std::invalid_argument("convlstm_step: state geometry " + shape_str(state.h.shape) +
                                " does not match expected " + shape_str(want));

  TensorT<T> no_bias({spec_.out_channels});
  TensorT<T> pre[4];
  for (int g = 0; g < 4; ++g) {
    pre[g] = conv2d(x, wx[g], b[g], spec_.input_stride, pad());
    accumulate(pre[g], conv2d(state.h, wh[g], no_bias, 1, pad()));
  }

  TensorT<T> gi = sigmoid(pre[kGateI]);
  TensorT<T> gf = sigmoid(pre[kGateF]);
  TensorT<T> gg = tanh_act(pre[kGateG]);
  TensorT<T> go = sigmoid(pre[kGateO]);

  TensorT<T> c_new = add(hadamard(gf, state.c), hadamard(gi, gg));
  TensorT<T> tc = tanh_act(c_new);
  ConvLstmState<T> next;
  next.h = hadamard(go, tc);
  next.c = c_new;

  if (ctx) {
    ctx->x = x;
    ctx->h_prev = state.h;
    ctx->c_prev = state.c;
    ctx->i = std::move(gi);
    ctx->f = std::move(gf);
    ctx->g = std::move(gg);
    ctx->o = std::move(go);
    ctx->c_new = c_new;
    ctx->tanh_c = std::move(tc);
  }
  return next;
}

template <typename T>
typename ConvLstmCell<T>::StepGrads ConvLstmCell<T>::step_backward(const ConvLstmStepCtx<T>& ctx,
                                                                   const TensorT<T>& gh_total,
                                                                   const TensorT<T>& gc_next) {
  require_same_shape(gh_total, ctx.c_new, "convlstm step_backward");

  // h' = o . tanh(c')
  TensorT<T> g_o = hadamard(gh_total, ctx.tanh_c);
  TensorT<T> gc(ctx.c_new.shape);
  tanh_backward(ctx.tanh_c, hadamard(gh_total, ctx.o), &gc);
  if (!gc_next.empty()) accumulate(gc, gc_next);

  // c' = f . c_prev + i . g
  TensorT<T> g_f = hadamard(gc, ctx.c_prev);
  TensorT<T> g_i = hadamard(gc, ctx.g);
  TensorT<T> g_g = hadamard(gc, ctx.i);
  TensorT<T> gc_prev = hadamard(gc, ctx.f);

  // pre-activation gradients
  TensorT<T> da[4];
  da[kGateI] = TensorT<T>(ctx.i.shape);
  sigmoid_backward(ctx.i, g_i, &da[kGateI]);
  da[kGateF] = TensorT<T>(ctx.f.shape);
  sigmoid_backward(ctx.f, g_f, &da[kGateF]);
  da[kGateG] = TensorT<T>(ctx.g.shape);
  tanh_backward(ctx.g, g_g, &da[kGateG]);
  da[kGateO] = TensorT<T>(ctx.o.shape);
  sigmoid_backward(ctx.o, g_o, &da[kGateO]);

  StepGrads out;
  out.gx = TensorT<T>(ctx.x.shape);
  out.gh_prev = TensorT<T>(ctx.h_prev.shape);
  out.gc_prev = std::move(gc_prev);
  for (int g = 0; g < 4; ++g) {
    conv2d_backward(ctx.x, wx[g], spec_.input_stride, pad(), da[g], &out.gx, &gwx[g], &gb[g]);
    conv2d_backward<T>(ctx.h_prev, wh[g], 1, pad(), da[g], &out.gh_prev, &gwh[g], nullptr);
  }
  return out;
}

template <typename T>
typename ConvLstmCell<T>::SequenceResult ConvLstmCell<T>::sequence(
    const std::vector<TensorT<T>>& xs, const ConvLstmState<T>& init, bool keep_ctx) const {
  SequenceResult res;
  res.final_state = init;
  if (xs.empty()) return res;
  for (std::size_t t = 1; t < xs.size(); ++t)
    require_same_shape(xs[t], xs[0], "convlstm_sequence");
  res.hs.reserve(xs.size());
  if (keep_ctx) res.ctxs.resize(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    res.final_state = step(xs[t], res.final_state, keep_ctx ? &res.ctxs[t] : nullptr);
    res.hs.push_back(res.final_state.h);
  }
  return res;
}

template <typename T>
typename ConvLstmCell<T>::SequenceGrads ConvLstmCell<T>::sequence_backward(
    const std::vector<ConvLstmStepCtx<T>>& ctxs, const std::vector<TensorT<T>>& gh_per_step) {
  if (ctxs.size() != gh_per_step.size())
    throw std::invalid_argument("convlstm sequence_backward: " + std::to_string(ctxs.size()) +
                                " contexts vs " + std::to_string(gh_per_step.size()) +
                                " hidden gradients");
  SequenceGrads out;
  out.gxs.resize(ctxs.size());
  TensorT<T> gh_carry, gc_carry;
  for (std::size_t ti = ctxs.size(); ti-- > 0;) {
    TensorT<T> gh_total = gh_per_step[ti];
    if (!gh_carry.empty()) accumulate(gh_total, gh_carry);
    StepGrads sg = step_backward(ctxs[ti], gh_total, gc_carry);
    out.gxs[ti] = std::move(sg.gx);
    gh_carry = std::move(sg.gh_prev);
    gc_carry = std::move(sg.gc_prev);
  }
  out.gh_init = std::move(gh_carry);
  out.gc_init = std::move(gc_carry);
  return out;
}

template <typename T>
void ConvLstmCell<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  for (int g = 0; g < 4; ++g) {
    out.push_back({prefix + ".wx_" + gate_letter(g), &wx[g], &gwx[g]});
    out.push_back({prefix + ".wh_" + gate_letter(g), &wh[g], &gwh[g]});
    out.push_back({prefix + ".b_" + gate_letter(g), &b[g], &gb[g]});
  }
}

template <typename T>
void ConvLstmCell<T>::zero_grad() {
  for (int g = 0; g < 4; ++g) {
    gwx[g].zero();
    gwh[g].zero();
    gb[g].zero();
  }
}

template class ConvLstmCell<float>;
template class ConvLstmCell<double>;

}  // namespace promnet
