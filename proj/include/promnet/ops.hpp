#pragma once

#include <cstdint>
#include <vector>

#include "promnet/tensor.hpp"

namespace promnet {

// Forward/adjoint pairs for every primitive the network is built from.
// Conventions:
//  * layouts are NCHW; convolution is cross-correlation (no kernel flip);
//  * every backward ACCUMULATES into its output buffers (pass an empty tensor
//    to start from zeros, or a pre-filled one to sum contributions);
//  * a null output pointer skips that adjoint.

// input [N,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout]
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                  int padding);

template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding,
                     const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw, TensorT<T>* gb);

// input [N,Cin,H,W], weight [Cin,Cout,kh,kw], bias [Cout]; exact adjoint of
// conv2d's forward map with the first two weight axes swapped.
template <typename T>
TensorT<T> conv2d_transpose(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                            int stride, int padding);

template <typename T>
void conv2d_transpose_backward(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding,
                               const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw,
                               TensorT<T>* gb);

template <typename T>
struct MaxPool2dResult {
  TensorT<T> out;
  std::vector<std::int64_t> argmax;  // flat input index per output element
};

template <typename T>
MaxPool2dResult<T> maxpool2d(const TensorT<T>& x, int window = 2, int stride = 2);

template <typename T>
void maxpool2d_backward(const std::vector<std::int64_t>& argmax,
                        const std::vector<std::int64_t>& input_shape, const TensorT<T>& gy,
                        TensorT<T>* gx);

template <typename T>
struct BatchNormContext {
  bool train = false;
  TensorT<T> xhat;
  std::vector<T> inv_std;  // per channel
};

// Normalizes per channel over (N,H,W). Train mode uses batch statistics and
// updates the running stats in place: run' = (1-momentum)*run + momentum*batch.
template <typename T>
TensorT<T> batchnorm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                     TensorT<T>& running_mean, TensorT<T>& running_var, bool train, T eps,
                     T momentum, BatchNormContext<T>* ctx);

template <typename T>
void batchnorm_backward(const BatchNormContext<T>& ctx, const TensorT<T>& gamma,
                        const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* ggamma,
                        TensorT<T>* gbeta);

template <typename T>
TensorT<T> relu(const TensorT<T>& x);
// Subgradient 0 at exactly 0; takes the saved pre-activation input.
template <typename T>
void relu_backward(const TensorT<T>& x, const TensorT<T>& gy, TensorT<T>* gx);

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x);
// Takes the saved output y = sigmoid(x).
template <typename T>
void sigmoid_backward(const TensorT<T>& y, const TensorT<T>& gy, TensorT<T>* gx);

template <typename T>
TensorT<T> tanh_act(const TensorT<T>& x);
// Takes the saved output y = tanh(x).
template <typename T>
void tanh_backward(const TensorT<T>& y, const TensorT<T>& gy, TensorT<T>* gx);

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
TensorT<T> hadamard(const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
void hadamard_backward(const TensorT<T>& a, const TensorT<T>& b, const TensorT<T>& gy,
                       TensorT<T>* ga, TensorT<T>* gb);

// Mean over all elements of the squared difference.
template <typename T>
T mse_loss(const TensorT<T>& pred, const TensorT<T>& target);

// d(mse)/d(pred) scaled by upstream: 2*(pred-target)/count.
template <typename T>
TensorT<T> mse_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                             T upstream = T(1));

}  // namespace promnet
