#pragma once

#include <stdexcept>

#include "promnet/metrics.hpp"
#include "promnet/parallel.hpp"

namespace promnet {

// Runs model.predict_sequence on every admissible t_in+t_out window of the
// selected split and aggregates PSNR/SSIM per horizon step. Per-window results
// are stored by index and reduced in order, so parallel evaluation is
// bit-stable for any worker count.
template <typename Model>
EvalReport evaluate_horizon(Model& model, const SequenceDataset& ds, const EvalOptions& opts) {
  const int t_in = model.config().t_in;
  const int t_out = model.config().t_out;
  const int stride = opts.window_stride < 1 ? 1 : opts.window_stride;

  std::vector<std::size_t> seqs = ds.split_indices(opts.split);
  if (seqs.empty())
    throw std::invalid_argument("evaluate_horizon: split '" + opts.split + "' is empty");

  struct Window {
    std::size_t seq;
    std::uint32_t t0;
  };
  std::vector<Window> windows;
  for (std::size_t s : seqs) {
    if (static_cast<int>(ds.t) < t_in + t_out)
      throw std::invalid_argument("evaluate_horizon: sequences of length " + std::to_string(ds.t) +
                                  " are shorter than " + std::to_string(t_in + t_out));
    for (std::uint32_t t0 = 0; t0 + t_in + t_out <= ds.t; t0 += static_cast<std::uint32_t>(stride))
      windows.push_back({s, t0});
  }

  std::vector<std::vector<double>> psnr_samples(static_cast<std::size_t>(t_out));
  std::vector<std::vector<double>> ssim_samples(static_cast<std::size_t>(t_out));
  for (auto& v : psnr_samples) v.resize(windows.size());
  for (auto& v : ssim_samples) v.resize(windows.size());

  parallel_chunks(static_cast<std::int64_t>(windows.size()), [&](std::int64_t w0, std::int64_t w1) {
    for (std::int64_t wi = w0; wi < w1; ++wi) {
      const Window& win = windows[static_cast<std::size_t>(wi)];
      std::vector<Tensor> inputs;
      inputs.reserve(static_cast<std::size_t>(t_in));
      for (int t = 0; t < t_in; ++t)
        inputs.push_back(ds.frame_tensor(win.seq, win.t0 + static_cast<std::uint32_t>(t)));
      std::vector<Tensor> preds = model.predict_sequence(inputs);
      for (int k = 0; k < t_out; ++k) {
        Tensor truth =
            ds.frame_tensor(win.seq, win.t0 + static_cast<std::uint32_t>(t_in + k));
        psnr_samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(wi)] =
            psnr(preds[static_cast<std::size_t>(k)], truth);
        ssim_samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(wi)] =
            ssim(preds[static_cast<std::size_t>(k)], truth);
      }
    }
  });

  EvalReport report = aggregate_horizon(psnr_samples, ssim_samples);
  report.model_tag = opts.model_tag;
  report.dataset_tag = opts.dataset_tag;
  return report;
}

}  // namespace promnet
