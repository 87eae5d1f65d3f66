#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promnet/ops.hpp"
#include "promnet/tensor.hpp"

namespace promnet {

struct ConvLstmSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  int kernel = 5;        // odd; both conv paths pad (kernel-1)/2
  int input_stride = 1;  // 1 or 2; downsampling lives on the input path only
  bool peepholes = false;
};

template <typename T>
struct ConvLstmState {
  TensorT<T> h, c;
};

// Saved forward values for one step, enough to run the step adjoint.
template <typename T>
struct ConvLstmStepCtx {
  TensorT<T> x, h_prev, c_prev;
  TensorT<T> i, f, g, o;  // post-activation gates
  TensorT<T> c_new, tanh_c;
};

// Convolutional LSTM cell:
//   i = sig(Wxi*x + Whi*h + bi)      f = sig(Wxf*x + Whf*h + bf)
//   g = tanh(Wxc*x + Whc*h + bc)     o = sig(Wxo*x + Who*h + bo)
//   c' = f.c + i.g                   h' = o.tanh(c')
// The hidden path is shape-preserving; the input path may carry stride 2.
template <typename T>
class ConvLstmCell {
 public:
  static constexpr int kGateI = 0, kGateF = 1, kGateG = 2, kGateO = 3;

  ConvLstmCell() = default;
  ConvLstmCell(const ConvLstmSpec& spec, Rng& rng);

  const ConvLstmSpec& spec() const { return spec_; }
  int pad() const { return (spec_.kernel - 1) / 2; }

  // Output geometry for an input of in_h x in_w.
  ConvLstmState<T> zero_state(std::int64_t batch, std::int64_t in_h, std::int64_t in_w) const;

  // One time step; the returned state's h is the step output. ctx may be null
  // for inference.
  ConvLstmState<T> step(const TensorT<T>& x, const ConvLstmState<T>& state,
                        ConvLstmStepCtx<T>* ctx) const;

  struct StepGrads {
    TensorT<T> gx, gh_prev, gc_prev;
  };

  // gh_total must already combine the output-path and the next-step state
  // gradients of h'; gc_next is the incoming cell-state gradient (empty = 0).
  // Parameter gradients accumulate into the cell's grad buffers.
  StepGrads step_backward(const ConvLstmStepCtx<T>& ctx, const TensorT<T>& gh_total,
                          const TensorT<T>& gc_next);

  struct SequenceResult {
    std::vector<TensorT<T>> hs;
    ConvLstmState<T> final_state;
    std::vector<ConvLstmStepCtx<T>> ctxs;  // empty unless keep_ctx
  };

  SequenceResult sequence(const std::vector<TensorT<T>>& xs, const ConvLstmState<T>& init,
                          bool keep_ctx) const;

  struct SequenceGrads {
    std::vector<TensorT<T>> gxs;
    TensorT<T> gh_init, gc_init;
  };

  // Unrolled adjoint over the whole sequence; gh_per_step[t] is dLoss/dhs[t].
  SequenceGrads sequence_backward(const std::vector<ConvLstmStepCtx<T>>& ctxs,
                                  const std::vector<TensorT<T>>& gh_per_step);

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out);
  void zero_grad();

  TensorT<T> wx[4], wh[4], b[4];
  TensorT<T> gwx[4], gwh[4], gb[4];

 private:
  ConvLstmSpec spec_;
};

using ConvLstmCellF = ConvLstmCell<float>;
using ConvLstmCellD = ConvLstmCell<double>;

}  // namespace promnet
