#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "promnet/rng.hpp"

namespace promnet {

inline std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major tensor. data.size() == product(shape) always holds.
template <typename T>
struct TensorT {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  TensorT() = default;

  explicit TensorT(std::vector<std::int64_t> s, T fill_value = T(0)) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(checked_numel(shape)), fill_value);
  }

  static std::int64_t checked_numel(const std::vector<std::int64_t>& s) {
    if (s.empty()) throw std::invalid_argument("tensor shape needs at least one extent");
    std::int64_t n = 1;
    for (std::int64_t e : s) {
      if (e <= 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(s));
      n *= e;
    }
    return n;
  }

  bool empty() const { return data.empty(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  std::int64_t dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

  T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  std::int64_t offset4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return ((n * shape[1] + c) * shape[2] + h) * shape[3] + w;
  }
  T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data[static_cast<std::size_t>(offset4(n, c, h, w))];
  }
  const T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data[static_cast<std::size_t>(offset4(n, c, h, w))];
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  // Reinterprets the buffer under a new shape with identical element count.
  TensorT reshaped(std::vector<std::int64_t> s) const {
    TensorT out;
    out.shape = std::move(s);
    if (checked_numel(out.shape) != numel())
      throw std::invalid_argument("reshape from " + shape_str(shape) + " to " +
                                  shape_str(out.shape) + " changes element count");
    out.data = data;
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
TensorT<T> zeros_like(const TensorT<T>& t) {
  return TensorT<T>(t.shape);
}

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

template <typename T>
void require_rank(const TensorT<T>& t, int rank, const char* op, const char* what) {
  if (t.rank() != rank)
    throw std::invalid_argument(std::string(op) + ": " + what + " must have rank " +
                                std::to_string(rank) + ", got shape " + shape_str(t.shape));
}

// Grad buffers accumulate; an empty buffer is lazily materialized as zeros.
template <typename T>
void ensure_grad(TensorT<T>& g, const std::vector<std::int64_t>& shape, const char* op) {
  if (g.empty()) {
    g = TensorT<T>(shape);
  } else if (g.shape != shape) {
    throw std::invalid_argument(std::string(op) + ": gradient shape " + shape_str(g.shape) +
                                " does not match " + shape_str(shape));
  }
}

template <typename T>
void check_finite(const TensorT<T>& t, const char* what) {
  for (const T& v : t.data) {
    if (!std::isfinite(static_cast<double>(v)))
      throw std::runtime_error(std::string(what) + " produced a non-finite value");
  }
}

template <typename T>
void fill_uniform(TensorT<T>& t, Rng& rng, double lo, double hi) {
  for (T& v : t.data) v = static_cast<T>(rng.next_uniform(lo, hi));
}

// Glorot-style bound used for every kernel in the engine.
template <typename T>
void fill_glorot(TensorT<T>& t, Rng& rng, std::int64_t fan_in, std::int64_t fan_out) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  fill_uniform(t, rng, -bound, bound);
}

template <typename Dst, typename Src>
TensorT<Dst> cast_tensor(const TensorT<Src>& t) {
  TensorT<Dst> out(t.shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) out[i] = static_cast<Dst>(t[i]);
  return out;
}

template <typename T>
void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
  require_same_shape(dst, src, "accumulate");
  for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

// Named view over one parameter tensor and its gradient buffer.
template <typename T>
struct ParamRef {
  std::string name;
  TensorT<T>* value = nullptr;
  TensorT<T>* grad = nullptr;
};

}  // namespace promnet
