#include "promnet/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "promnet/parallel.hpp"

namespace promnet {

namespace {

// Threading pays off only past this many multiply-accumulates.
constexpr std::int64_t kParallelWorkThreshold = 2000000;

bool worth_threading(std::int64_t work) {
  return work > kParallelWorkThreshold && num_threads() > 1;
}

// C[M,N] += A[M,K] * B[K,N], row-major. Row blocks are independent, so the
// sample/row split parallelizes without changing any summation order.
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c,
             bool parallel) {
  auto rows = [=](std::int64_t i0, std::int64_t i1) {
    if (n == 1) {  // matrix-vector: contiguous dot per row
      for (std::int64_t i = i0; i < i1; ++i) {
        const T* arow = a + i * k;
        T acc = T(0);
        for (std::int64_t p = 0; p < k; ++p) acc += arow[p] * b[p];
        c[i] += acc;
      }
      return;
    }
    for (std::int64_t i = i0; i < i1; ++i) {
      T* crow = c + i * n;
      const T* arow = a + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        T av = arow[p];
        if (av == T(0)) continue;
        const T* brow = b + p * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  };
  if (parallel && m >= 8 && worth_threading(m * k * n)) {
    parallel_chunks(m, rows);
  } else {
    rows(0, m);
  }
}

// C[M,N] += A^T * B with A stored [K,M], B stored [K,N].
template <typename T>
void gemm_tn(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c) {
  if (n == 1) {  // contiguous axpy per row of A
    for (std::int64_t p = 0; p < k; ++p) {
      T bv = b[p];
      if (bv == T(0)) continue;
      const T* arow = a + p * m;
      for (std::int64_t i = 0; i < m; ++i) c[i] += bv * arow[i];
    }
    return;
  }
  for (std::int64_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      T av = arow[i];
      if (av == T(0)) continue;
      T* crow = c + i * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A * B^T with A stored [M,K], B stored [N,K].
template <typename T>
void gemm_nt(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (std::int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// cols [C*kh*kw, Ho*Wo] for a single sample.
template <typename T>
void im2col(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t ho,
            std::int64_t wo, T* cols) {
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t r = 0; r < kh; ++r) {
      for (std::int64_t s = 0; s < kw; ++s, ++row) {
        T* dst = cols + row * (ho * wo);
        for (std::int64_t oh = 0; oh < ho; ++oh, dst += wo) {
          std::int64_t ih = oh * stride - pad + r;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* src = x + (c * h + ih) * w;
          for (std::int64_t ow = 0; ow < wo; ++ow) {
            std::int64_t iw = ow * stride - pad + s;
            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into the image buffer.
template <typename T>
void col2im(const T* cols, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t ho,
            std::int64_t wo, T* x) {
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t r = 0; r < kh; ++r) {
      for (std::int64_t s = 0; s < kw; ++s, ++row) {
        const T* src = cols + row * (ho * wo);
        for (std::int64_t oh = 0; oh < ho; ++oh, src += wo) {
          std::int64_t ih = oh * stride - pad + r;
          if (ih < 0 || ih >= h) continue;
          T* dst = x + (c * h + ih) * w;
          for (std::int64_t ow = 0; ow < wo; ++ow) {
            std::int64_t iw = ow * stride - pad + s;
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_common(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                       int padding, const char* op) {
  require_rank(x, 4, op, "input");
  require_rank(w, 4, op, "weight");
  require_rank(b, 1, op, "bias");
  if (stride <= 0)
    throw std::invalid_argument(std::string(op) + ": stride must be positive, got " +
                                std::to_string(stride));
  if (padding < 0)
    throw std::invalid_argument(std::string(op) + ": padding must be non-negative, got " +
                                std::to_string(padding));
}

struct ConvDims {
  std::int64_t n, cin, h, w, cout, kh, kw, ho, wo;
};

template <typename T>
ConvDims conv_dims(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                   int padding) {
  check_conv_common(x, w, b, stride, padding, "conv2d");
  ConvDims d;
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  if (w.dim(1) != d.cin)
    throw std::invalid_argument("conv2d: input has " + std::to_string(d.cin) +
                                " channels but weight expects " + std::to_string(w.dim(1)));
  if (b.dim(0) != d.cout)
    throw std::invalid_argument("conv2d: bias has " + std::to_string(b.dim(0)) +
                                " entries but weight produces " + std::to_string(d.cout) +
                                " channels");
  d.ho = (d.h + 2 * padding - d.kh) / stride + 1;
  d.wo = (d.w + 2 * padding - d.kw) / stride + 1;
  if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw || d.ho < 1 || d.wo < 1)
    throw std::invalid_argument("conv2d: kernel " + std::to_string(d.kh) + "x" +
                                std::to_string(d.kw) + " does not fit input " +
                                shape_str(x.shape) + " with padding " + std::to_string(padding));
  return d;
}

template <typename T>
ConvDims deconv_dims(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                     int padding) {
  check_conv_common(x, w, b, stride, padding, "conv2d_transpose");
  ConvDims d;
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(1);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  if (w.dim(0) != d.cin)
    throw std::invalid_argument("conv2d_transpose: input has " + std::to_string(d.cin) +
                                " channels but weight expects " + std::to_string(w.dim(0)));
  if (b.dim(0) != d.cout)
    throw std::invalid_argument("conv2d_transpose: bias has " + std::to_string(b.dim(0)) +
                                " entries but weight produces " + std::to_string(d.cout) +
                                " channels");
  d.ho = (d.h - 1) * stride - 2 * padding + d.kh;
  d.wo = (d.w - 1) * stride - 2 * padding + d.kw;
  if (d.ho < 1 || d.wo < 1)
    throw std::invalid_argument("conv2d_transpose: output size " + std::to_string(d.ho) + "x" +
                                std::to_string(d.wo) + " for input " + shape_str(x.shape) +
                                " is not positive");
  return d;
}

}  // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                  int padding) {
  ConvDims d = conv_dims(x, w, b, stride, padding);
  TensorT<T> y({d.n, d.cout, d.ho, d.wo});
  const std::int64_t ckk = d.cin * d.kh * d.kw;
  const std::int64_t plane = d.ho * d.wo;
  auto run = [&](std::int64_t n0, std::int64_t n1) {
    std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
    for (std::int64_t n = n0; n < n1; ++n) {
      im2col(x.data.data() + n * d.cin * d.h * d.w, d.cin, d.h, d.w, d.kh, d.kw, stride, padding,
             d.ho, d.wo, cols.data());
      T* yn = y.data.data() + n * d.cout * plane;
      gemm_nn(d.cout, ckk, plane, w.data.data(), cols.data(), yn, d.n == 1);
      for (std::int64_t c = 0; c < d.cout; ++c) {
        T bias = b[c];
        T* dst = yn + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) dst[i] += bias;
      }
    }
  };
  if (d.n > 1 && worth_threading(d.n * d.cout * ckk * plane)) {
    parallel_chunks(d.n, run);
  } else {
    run(0, d.n);
  }
  check_finite(y, "conv2d");
  return y;
}

template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding,
                     const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw, TensorT<T>* gb) {
  TensorT<T> bias_probe({w.dim(0)});
  ConvDims d = conv_dims(x, w, bias_probe, stride, padding);
  if (gy.shape != std::vector<std::int64_t>{d.n, d.cout, d.ho, d.wo})
    throw std::invalid_argument("conv2d_backward: upstream gradient shape " + shape_str(gy.shape) +
                                " does not match output " +
                                shape_str({d.n, d.cout, d.ho, d.wo}));
  const std::int64_t ckk = d.cin * d.kh * d.kw;
  const std::int64_t plane = d.ho * d.wo;

  if (gb) {
    ensure_grad(*gb, {d.cout}, "conv2d_backward(bias)");
    for (std::int64_t n = 0; n < d.n; ++n)
      for (std::int64_t c = 0; c < d.cout; ++c) {
        const T* src = gy.data.data() + (n * d.cout + c) * plane;
        T acc = T(0);
        for (std::int64_t i = 0; i < plane; ++i) acc += src[i];
        (*gb)[c] += acc;
      }
  }

  if (gw) {
    ensure_grad(*gw, w.shape, "conv2d_backward(weight)");
    std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
    for (std::int64_t n = 0; n < d.n; ++n) {
      im2col(x.data.data() + n * d.cin * d.h * d.w, d.cin, d.h, d.w, d.kh, d.kw, stride, padding,
             d.ho, d.wo, cols.data());
      gemm_nt(d.cout, plane, ckk, gy.data.data() + n * d.cout * plane, cols.data(),
              gw->data.data());
    }
  }

  if (gx) {
    ensure_grad(*gx, x.shape, "conv2d_backward(input)");
    auto run = [&](std::int64_t n0, std::int64_t n1) {
      std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
      for (std::int64_t n = n0; n < n1; ++n) {
        std::fill(cols.begin(), cols.end(), T(0));
        gemm_tn(ckk, d.cout, plane, w.data.data(), gy.data.data() + n * d.cout * plane,
                cols.data());
        col2im(cols.data(), d.cin, d.h, d.w, d.kh, d.kw, stride, padding, d.ho, d.wo,
               gx->data.data() + n * d.cin * d.h * d.w);
      }
    };
    if (d.n > 1 && worth_threading(d.n * d.cout * ckk * plane)) {
      parallel_chunks(d.n, run);
    } else {
      run(0, d.n);
    }
    check_finite(*gx, "conv2d_backward(input)");
  }
}

template <typename T>
TensorT<T> conv2d_transpose(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                            int stride, int padding) {
  ConvDims d = deconv_dims(x, w, b, stride, padding);
  TensorT<T> y({d.n, d.cout, d.ho, d.wo});
  const std::int64_t ckk = d.cout * d.kh * d.kw;  // column space of the adjoint conv
  const std::int64_t plane = d.h * d.w;           // input grid doubles as the output-column grid
  auto run = [&](std::int64_t n0, std::int64_t n1) {
    std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
    for (std::int64_t n = n0; n < n1; ++n) {
      std::fill(cols.begin(), cols.end(), T(0));
      // w viewed as [Cin, Cout*kh*kw]; cols = w^T * x_n
      gemm_tn(ckk, d.cin, plane, w.data.data(), x.data.data() + n * d.cin * plane, cols.data());
      T* yn = y.data.data() + n * d.cout * d.ho * d.wo;
      col2im(cols.data(), d.cout, d.ho, d.wo, d.kh, d.kw, stride, padding, d.h, d.w, yn);
      for (std::int64_t c = 0; c < d.cout; ++c) {
        T bias = b[c];
        T* dst = yn + c * d.ho * d.wo;
        for (std::int64_t i = 0; i < d.ho * d.wo; ++i) dst[i] += bias;
      }
    }
  };
  if (d.n > 1 && worth_threading(d.n * d.cin * ckk * plane)) {
    parallel_chunks(d.n, run);
  } else {
    run(0, d.n);
  }
  check_finite(y, "conv2d_transpose");
  return y;
}

template <typename T>
void conv2d_transpose_backward(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding,
                               const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw,
                               TensorT<T>* gb) {
  TensorT<T> bias_probe({w.dim(1)});
  ConvDims d = deconv_dims(x, w, bias_probe, stride, padding);
  if (gy.shape != std::vector<std::int64_t>{d.n, d.cout, d.ho, d.wo})
    throw std::invalid_argument("conv2d_transpose_backward: upstream gradient shape " +
                                shape_str(gy.shape) + " does not match output " +
                                shape_str({d.n, d.cout, d.ho, d.wo}));
  const std::int64_t ckk = d.cout * d.kh * d.kw;
  const std::int64_t plane = d.h * d.w;

  if (gb) {
    ensure_grad(*gb, {d.cout}, "conv2d_transpose_backward(bias)");
    const std::int64_t out_plane = d.ho * d.wo;
    for (std::int64_t n = 0; n < d.n; ++n)
      for (std::int64_t c = 0; c < d.cout; ++c) {
        const T* src = gy.data.data() + (n * d.cout + c) * out_plane;
        T acc = T(0);
        for (std::int64_t i = 0; i < out_plane; ++i) acc += src[i];
        (*gb)[c] += acc;
      }
  }

  if (gx || gw) {
    std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
    if (gx) ensure_grad(*gx, x.shape, "conv2d_transpose_backward(input)");
    if (gw) ensure_grad(*gw, w.shape, "conv2d_transpose_backward(weight)");
    for (std::int64_t n = 0; n < d.n; ++n) {
      im2col(gy.data.data() + n * d.cout * d.ho * d.wo, d.cout, d.ho, d.wo, d.kh, d.kw, stride,
             padding, d.h, d.w, cols.data());
      if (gx) {
        // gu = w * cols, w viewed as [Cin, Cout*kh*kw]
        gemm_nn(d.cin, ckk, plane, w.data.data(), cols.data(),
                gx->data.data() + n * d.cin * plane, false);
      }
      if (gw) {
        // gw = u * cols^T
        gemm_nt(d.cin, plane, ckk, x.data.data() + n * d.cin * plane, cols.data(),
                gw->data.data());
      }
    }
    if (gx) check_finite(*gx, "conv2d_transpose_backward(input)");
  }
}

template <typename T>
MaxPool2dResult<T> maxpool2d(const TensorT<T>& x, int window, int stride) {
  require_rank(x, 4, "maxpool2d", "input");
  if (window < 1 || stride < 1)
    throw std::invalid_argument("maxpool2d: window and stride must be positive");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % stride != 0 || w % stride != 0 || (h - window) % stride != 0 ||
      (w - window) % stride != 0 || h < window || w < window)
    throw std::invalid_argument("maxpool2d: input " + std::to_string(h) + "x" +
                                std::to_string(w) + " is not divisible by stride " +
                                std::to_string(stride) + " with window " +
                                std::to_string(window));
  const std::int64_t ho = (h - window) / stride + 1;
  const std::int64_t wo = (w - window) / stride + 1;
  MaxPool2dResult<T> res;
  res.out = TensorT<T>({n, c, ho, wo});
  res.argmax.assign(static_cast<std::size_t>(res.out.numel()), 0);
  std::int64_t o = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t oh = 0; oh < ho; ++oh)
        for (std::int64_t ow = 0; ow < wo; ++ow, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_idx = 0;
          for (std::int64_t r = 0; r < window; ++r)
            for (std::int64_t s = 0; s < window; ++s) {
              std::int64_t idx = x.offset4(i, ch, oh * stride + r, ow * stride + s);
              T v = x[idx];
              if (v > best) {  // strict: first position wins ties in scan order
                best = v;
                best_idx = idx;
              }
            }
          res.out[o] = best;
          res.argmax[static_cast<std::size_t>(o)] = best_idx;
        }
  check_finite(res.out, "maxpool2d");
  return res;
}

template <typename T>
void maxpool2d_backward(const std::vector<std::int64_t>& argmax,
                        const std::vector<std::int64_t>& input_shape, const TensorT<T>& gy,
                        TensorT<T>* gx) {
  if (!gx) return;
  if (static_cast<std::int64_t>(argmax.size()) != gy.numel())
    throw std::invalid_argument("maxpool2d_backward: argmax map has " +
                                std::to_string(argmax.size()) + " entries, upstream has " +
                                std::to_string(gy.numel()));
  ensure_grad(*gx, input_shape, "maxpool2d_backward");
  for (std::int64_t o = 0; o < gy.numel(); ++o)
    (*gx)[argmax[static_cast<std::size_t>(o)]] += gy[o];
}

template <typename T>
TensorT<T> batchnorm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                     TensorT<T>& running_mean, TensorT<T>& running_var, bool train, T eps,
                     T momentum, BatchNormContext<T>* ctx) {
  require_rank(x, 4, "batchnorm", "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  for (const TensorT<T>* t :
       std::initializer_list<const TensorT<T>*>{&gamma, &beta, &running_mean, &running_var}) {
    if (t->shape != std::vector<std::int64_t>{c})
      throw std::invalid_argument("batchnorm: per-channel tensor shape " + shape_str(t->shape) +
                                  " does not match " + std::to_string(c) + " channels");
  }
  const std::int64_t m = n * h * w;
  if (train && m < 2)
    throw std::invalid_argument("batchnorm: train mode needs at least 2 values per channel, got " +
                                std::to_string(m));

  TensorT<T> y(x.shape);
  TensorT<T> xhat(x.shape);
  std::vector<T> inv_std(static_cast<std::size_t>(c));
  const std::int64_t plane = h * w;

  for (std::int64_t ch = 0; ch < c; ++ch) {
    T mean, var;
    if (train) {
      double sum = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const T* src = x.data.data() + (i * c + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) sum += static_cast<double>(src[p]);
      }
      mean = static_cast<T>(sum / static_cast<double>(m));
      double sq = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const T* src = x.data.data() + (i * c + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          double dlt = static_cast<double>(src[p]) - static_cast<double>(mean);
          sq += dlt * dlt;
        }
      }
      var = static_cast<T>(sq / static_cast<double>(m));  // biased, matches the running update
      running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * mean;
      running_var[ch] = (T(1) - momentum) * running_var[ch] + momentum * var;
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    T istd = T(1) / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(ch)] = istd;
    for (std::int64_t i = 0; i < n; ++i) {
      const T* src = x.data.data() + (i * c + ch) * plane;
      T* xh = xhat.data.data() + (i * c + ch) * plane;
      T* dst = y.data.data() + (i * c + ch) * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        T v = (src[p] - mean) * istd;
        xh[p] = v;
        dst[p] = gamma[ch] * v + beta[ch];
      }
    }
  }
  check_finite(y, "batchnorm");
  if (ctx) {
    ctx->train = train;
    ctx->xhat = std::move(xhat);
    ctx->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
void batchnorm_backward(const BatchNormContext<T>& ctx, const TensorT<T>& gamma,
                        const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* ggamma,
                        TensorT<T>* gbeta) {
  require_same_shape(ctx.xhat, gy, "batchnorm_backward");
  const std::int64_t n = gy.dim(0), c = gy.dim(1), plane = gy.dim(2) * gy.dim(3);
  const std::int64_t m = n * plane;
  if (gx) ensure_grad(*gx, gy.shape, "batchnorm_backward(input)");
  if (ggamma) ensure_grad(*ggamma, {c}, "batchnorm_backward(gamma)");
  if (gbeta) ensure_grad(*gbeta, {c}, "batchnorm_backward(beta)");

  for (std::int64_t ch = 0; ch < c; ++ch) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const T* g = gy.data.data() + (i * c + ch) * plane;
      const T* xh = ctx.xhat.data.data() + (i * c + ch) * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        sum_gy += static_cast<double>(g[p]);
        sum_gy_xhat += static_cast<double>(g[p]) * static_cast<double>(xh[p]);
      }
    }
    if (ggamma) (*ggamma)[ch] += static_cast<T>(sum_gy_xhat);
    if (gbeta) (*gbeta)[ch] += static_cast<T>(sum_gy);
    if (gx) {
      T istd = ctx.inv_std[static_cast<std::size_t>(ch)];
      T scale = gamma[ch] * istd;
      T mean_gy = static_cast<T>(sum_gy / static_cast<double>(m));
      T mean_gy_xhat = static_cast<T>(sum_gy_xhat / static_cast<double>(m));
      for (std::int64_t i = 0; i < n; ++i) {
        const T* g = gy.data.data() + (i * c + ch) * plane;
        const T* xh = ctx.xhat.data.data() + (i * c + ch) * plane;
        T* dst = gx->data.data() + (i * c + ch) * plane;
        if (ctx.train) {
          for (std::int64_t p = 0; p < plane; ++p)
            dst[p] += scale * (g[p] - mean_gy - xh[p] * mean_gy_xhat);
        } else {
          for (std::int64_t p = 0; p < plane; ++p) dst[p] += scale * g[p];
        }
      }
    }
  }
  if (gx) check_finite(*gx, "batchnorm_backward(input)");
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> y(x.shape);
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  check_finite(y, "relu");
  return y;
}

template <typename T>
void relu_backward(const TensorT<T>& x, const TensorT<T>& gy, TensorT<T>* gx) {
  if (!gx) return;
  require_same_shape(x, gy, "relu_backward");
  ensure_grad(*gx, x.shape, "relu_backward");
  for (std::int64_t i = 0; i < x.numel(); ++i)
    if (x[i] > T(0)) (*gx)[i] += gy[i];
}

namespace {
template <typename T>
T stable_sigmoid(T v) {
  if (v >= T(0)) {
    T e = std::exp(-v);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(v);
  return e / (T(1) + e);
}
}  // namespace

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  TensorT<T> y(x.shape);
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = stable_sigmoid(x[i]);
  check_finite(y, "sigmoid");
  return y;
}

template <typename T>
void sigmoid_backward(const TensorT<T>& y, const TensorT<T>& gy, TensorT<T>* gx) {
  if (!gx) return;
  require_same_shape(y, gy, "sigmoid_backward");
  ensure_grad(*gx, y.shape, "sigmoid_backward");
  for (std::int64_t i = 0; i < y.numel(); ++i) (*gx)[i] += gy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
TensorT<T> tanh_act(const TensorT<T>& x) {
  TensorT<T> y(x.shape);
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
  check_finite(y, "tanh");
  return y;
}

template <typename T>
void tanh_backward(const TensorT<T>& y, const TensorT<T>& gy, TensorT<T>* gx) {
  if (!gx) return;
  require_same_shape(y, gy, "tanh_backward");
  ensure_grad(*gx, y.shape, "tanh_backward");
  for (std::int64_t i = 0; i < y.numel(); ++i) (*gx)[i] += gy[i] * (T(1) - y[i] * y[i]);
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add");
  TensorT<T> y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
  check_finite(y, "add");
  return y;
}

template <typename T>
TensorT<T> hadamard(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "hadamard");
  TensorT<T> y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * b[i];
  check_finite(y, "hadamard");
  return y;
}

template <typename T>
void hadamard_backward(const TensorT<T>& a, const TensorT<T>& b, const TensorT<T>& gy,
                       TensorT<T>* ga, TensorT<T>* gb) {
  require_same_shape(a, b, "hadamard_backward");
  require_same_shape(a, gy, "hadamard_backward");
  if (ga) {
    ensure_grad(*ga, a.shape, "hadamard_backward");
    for (std::int64_t i = 0; i < a.numel(); ++i) (*ga)[i] += gy[i] * b[i];
  }
  if (gb) {
    ensure_grad(*gb, b.shape, "hadamard_backward");
    for (std::int64_t i = 0; i < b.numel(); ++i) (*gb)[i] += gy[i] * a[i];
  }
}

template <typename T>
T mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  require_same_shape(pred, target, "mse_loss");
  double acc = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  T out = static_cast<T>(acc / static_cast<double>(pred.numel()));
  if (!std::isfinite(static_cast<double>(out)))
    throw std::runtime_error("mse_loss produced a non-finite value");
  return out;
}

template <typename T>
TensorT<T> mse_loss_backward(const TensorT<T>& pred, const TensorT<T>& target, T upstream) {
  require_same_shape(pred, target, "mse_loss_backward");
  TensorT<T> g(pred.shape);
  T scale = upstream * T(2) / static_cast<T>(pred.numel());
  for (std::int64_t i = 0; i < pred.numel(); ++i) g[i] = scale * (pred[i] - target[i]);
  check_finite(g, "mse_loss_backward");
  return g;
}

#define PROMNET_INSTANTIATE_OPS(T)                                                               \
  template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int,    \
                                int);                                                            \
  template void conv2d_backward<T>(const TensorT<T>&, const TensorT<T>&, int, int,               \
                                   const TensorT<T>&, TensorT<T>*, TensorT<T>*, TensorT<T>*);    \
  template TensorT<T> conv2d_transpose<T>(const TensorT<T>&, const TensorT<T>&,                  \
                                          const TensorT<T>&, int, int);                          \
  template void conv2d_transpose_backward<T>(const TensorT<T>&, const TensorT<T>&, int, int,     \
                                             const TensorT<T>&, TensorT<T>*, TensorT<T>*,        \
                                             TensorT<T>*);                                       \
  template MaxPool2dResult<T> maxpool2d<T>(const TensorT<T>&, int, int);                         \
  template void maxpool2d_backward<T>(const std::vector<std::int64_t>&,                          \
                                      const std::vector<std::int64_t>&, const TensorT<T>&,       \
                                      TensorT<T>*);                                              \
  template TensorT<T> batchnorm<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,      \
                                   TensorT<T>&, TensorT<T>&, bool, T, T, BatchNormContext<T>*);  \
  template void batchnorm_backward<T>(const BatchNormContext<T>&, const TensorT<T>&,             \
                                      const TensorT<T>&, TensorT<T>*, TensorT<T>*, TensorT<T>*); \
  template TensorT<T> relu<T>(const TensorT<T>&);                                                \
  template void relu_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>*);             \
  template TensorT<T> sigmoid<T>(const TensorT<T>&);                                             \
  template void sigmoid_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>*);          \
  template TensorT<T> tanh_act<T>(const TensorT<T>&);                                            \
  template void tanh_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>*);             \
  template TensorT<T> add<T>(const TensorT<T>&, const TensorT<T>&);                              \
  template TensorT<T> hadamard<T>(const TensorT<T>&, const TensorT<T>&);                         \
  template void hadamard_backward<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,    \
                                     TensorT<T>*, TensorT<T>*);                                  \
  template T mse_loss<T>(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> mse_loss_backward<T>(const TensorT<T>&, const TensorT<T>&, T);

PROMNET_INSTANTIATE_OPS(float)
PROMNET_INSTANTIATE_OPS(double)

#undef PROMNET_INSTANTIATE_OPS

}  // namespace promnet
