#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "promnet/dataset.hpp"
#include "promnet/optimizer.hpp"
#include "promnet/rng.hpp"

namespace promnet {

struct TrainConfig {
  int batch_size = 8;
  int epochs = 1;
  std::uint64_t seed = 0;
  // Probability of feeding ground truth per training step. Negative selects
  // the built-in schedule: 1.0 for the first half of the epochs, then a linear
  // decay to 0.
  double teacher_forcing_prob = -1.0;
  int window_stride = 5;
  double grad_clip = 0.0;   // 0 disables clipping
  int checkpoint_every = 0;  // epochs between mid-run checkpoints; 0 = final only
};

struct EpochMetrics {
  double mean_loss = 0.0;
  std::vector<double> batch_losses;
};

double scheduled_teacher_prob(const TrainConfig& cfg, int epoch_index);

// One (sequence, offset) training window per admissible position.
struct TrainWindow {
  std::size_t seq;
  std::uint32_t t0;
};

std::vector<TrainWindow> training_windows(const SequenceDataset& ds, int t_in, int t_out,
                                          int stride);

// Deterministic shuffled batching from rng; one forward/backward and exactly
// one optimizer update per batch. tf_prob is resolved by the caller (see
// scheduled_teacher_prob).
template <typename Model>
EpochMetrics train_epoch(Model& model, const SequenceDataset& ds, const TrainConfig& cfg,
                         RmsProp<typename Model::Scalar>& opt, Rng& rng, double tf_prob) {
  using T = typename Model::Scalar;
  const int t_in = model.config().t_in, t_out = model.config().t_out;
  std::vector<TrainWindow> windows = training_windows(ds, t_in, t_out, cfg.window_stride);
  if (windows.empty()) throw std::invalid_argument("train_epoch: no training windows in dataset");

  auto params = model.params();
  if (!opt.initialized()) opt.init(params);
  rng.shuffle(windows);

  EpochMetrics metrics;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < windows.size(); begin += batch) {
    const std::size_t end = std::min(windows.size(), begin + batch);
    const std::int64_t n = static_cast<std::int64_t>(end - begin);

    std::vector<TensorT<T>> inputs, targets;
    inputs.reserve(static_cast<std::size_t>(t_in));
    targets.reserve(static_cast<std::size_t>(t_out));
    const std::int64_t hh = ds.h, ww = ds.w;
    for (int t = 0; t < t_in + t_out; ++t) {
      TensorT<T> frame({n, 1, hh, ww});
      for (std::int64_t s = 0; s < n; ++s) {
        const TrainWindow& win = windows[begin + static_cast<std::size_t>(s)];
        const std::uint8_t* src = ds.frame(win.seq, win.t0 + static_cast<std::uint32_t>(t));
        T* dst = frame.data.data() + s * hh * ww;
        for (std::int64_t i = 0; i < hh * ww; ++i)
          dst[i] = static_cast<T>(src[i]) / T(255);
      }
      if (t < t_in) {
        inputs.push_back(std::move(frame));
      } else {
        targets.push_back(std::move(frame));
      }
    }

    bool teacher = rng.next_uniform() < tf_prob;
    model.zero_grad();
    T loss = model.forward_train(inputs, targets, teacher);
    if (cfg.grad_clip > 0.0) clip_grad_norm(params, cfg.grad_clip);
    opt.step(params);
    metrics.batch_losses.push_back(static_cast<double>(loss));
  }

  for (double l : metrics.batch_losses) metrics.mean_loss += l;
  metrics.mean_loss /= static_cast<double>(metrics.batch_losses.size());
  return metrics;
}

}  // namespace promnet
