#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promnet/dataset.hpp"
#include "promnet/tensor.hpp"

namespace promnet {

// 10*log10(max_val^2 / MSE); identical frames give +infinity.
double psnr(const Tensor& a, const Tensor& b, double max_val = 1.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Single-scale SSIM with Gaussian-weighted local statistics, averaged over the
// valid (un-padded) region. Frames must be at least window-sized.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

struct HorizonStats {
  double psnr_mean = 0, psnr_std = 0, psnr_min = 0, psnr_max = 0;
  double ssim_mean = 0, ssim_std = 0, ssim_min = 0, ssim_max = 0;
};

struct EvalReport {
  std::string model_tag;
  std::string dataset_tag;
  std::vector<HorizonStats> steps;  // index 0 is horizon step 1
};

struct EvalOptions {
  std::string split = "test";
  int window_stride = 1;  // every admissible window by default
  std::string model_tag = "model";
  std::string dataset_tag = "dataset";
};

std::string report_to_csv(const EvalReport& report);
void emit_csv(const EvalReport& report, const std::string& path);

// Two reports side by side, columns prefixed by each model tag.
std::string comparison_to_csv(const EvalReport& a, const EvalReport& b);

// Internal helper shared with evaluate_horizon; aggregates per-step samples.
EvalReport aggregate_horizon(const std::vector<std::vector<double>>& psnr_samples,
                             const std::vector<std::vector<double>>& ssim_samples);

}  // namespace promnet

#include "promnet/metrics_impl.hpp"
