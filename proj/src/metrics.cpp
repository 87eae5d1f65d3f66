#include "promnet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "promnet/binio.hpp"

namespace promnet {

double psnr(const Tensor& a, const Tensor& b, double max_val) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double dy = y - c, dx = x - c;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(y) * size + x] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

// Frames may be [H,W] or have leading extents of 1 (e.g. [1,1,H,W]).
void plane_dims(const Tensor& t, std::int64_t& h, std::int64_t& w) {
  if (t.rank() < 2)
    throw std::invalid_argument("ssim: frame must have at least 2 dimensions, got " +
                                shape_str(t.shape));
  for (int i = 0; i + 2 < t.rank(); ++i)
    if (t.dim(i) != 1)
      throw std::invalid_argument("ssim: leading extents must be 1, got " + shape_str(t.shape));
  h = t.dim(t.rank() - 2);
  w = t.dim(t.rank() - 1);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimParams& p) {
  require_same_shape(a, b, "ssim");
  std::int64_t h = 0, w = 0;
  plane_dims(a, h, w);
  if (h < p.window || w < p.window)
    throw std::invalid_argument("ssim: frame " + std::to_string(h) + "x" + std::to_string(w) +
                                " is smaller than the " + std::to_string(p.window) + "x" +
                                std::to_string(p.window) + " window");

  const std::vector<double> win = gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t oy = 0; oy + p.window <= h; ++oy) {
    for (std::int64_t ox = 0; ox + p.window <= w; ++ox) {
      double mu_a = 0, mu_b = 0;
      std::size_t wi = 0;
      for (int y = 0; y < p.window; ++y)
        for (int x = 0; x < p.window; ++x, ++wi) {
          std::int64_t idx = (oy + y) * w + (ox + x);
          mu_a += win[wi] * static_cast<double>(a[idx]);
          mu_b += win[wi] * static_cast<double>(b[idx]);
        }
      double var_a = 0, var_b = 0, cov = 0;
      wi = 0;
      for (int y = 0; y < p.window; ++y)
        for (int x = 0; x < p.window; ++x, ++wi) {
          std::int64_t idx = (oy + y) * w + (ox + x);
          double da = static_cast<double>(a[idx]) - mu_a;
          double db = static_cast<double>(b[idx]) - mu_b;
          var_a += win[wi] * da * da;
          var_b += win[wi] * db * db;
          cov += win[wi] * da * db;
        }
      double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

EvalReport aggregate_horizon(const std::vector<std::vector<double>>& psnr_samples,
                             const std::vector<std::vector<double>>& ssim_samples) {
  EvalReport report;
  report.steps.resize(psnr_samples.size());
  for (std::size_t k = 0; k < psnr_samples.size(); ++k) {
    HorizonStats& st = report.steps[k];
    auto stats = [](const std::vector<double>& xs, double& mean, double& stddev, double& mn,
                    double& mx) {
      mean = 0.0;
      mn = xs[0];
      mx = xs[0];
      for (double v : xs) {
        mean += v;
        if (v < mn) mn = v;
        if (v > mx) mx = v;
      }
      mean /= static_cast<double>(xs.size());
      double sq = 0.0;
      for (double v : xs) sq += (v - mean) * (v - mean);
      stddev = std::sqrt(sq / static_cast<double>(xs.size()));
    };
    stats(psnr_samples[k], st.psnr_mean, st.psnr_std, st.psnr_min, st.psnr_max);
    stats(ssim_samples[k], st.ssim_mean, st.ssim_std, st.ssim_min, st.ssim_max);
  }
  return report;
}

namespace {
std::string fmt6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void append_stats_row(std::string& out, const HorizonStats& st) {
  out += fmt6(st.psnr_mean) + "," + fmt6(st.psnr_std) + "," + fmt6(st.psnr_min) + "," +
         fmt6(st.psnr_max) + "," + fmt6(st.ssim_mean) + "," + fmt6(st.ssim_std) + "," +
         fmt6(st.ssim_min) + "," + fmt6(st.ssim_max);
}
}  // namespace

std::string report_to_csv(const EvalReport& report) {
  std::string out =
      "step,psnr_mean,psnr_std,psnr_min,psnr_max,ssim_mean,ssim_std,ssim_min,ssim_max\n";
  for (std::size_t k = 0; k < report.steps.size(); ++k) {
    out += std::to_string(k + 1) + ",";
    append_stats_row(out, report.steps[k]);
    out += "\n";
  }
  return out;
}

void emit_csv(const EvalReport& report, const std::string& path) {
  std::string csv = report_to_csv(report);
  std::vector<std::uint8_t> bytes(csv.begin(), csv.end());
  write_file_bytes(path, bytes);
}

std::string comparison_to_csv(const EvalReport& a, const EvalReport& b) {
  if (a.steps.size() != b.steps.size())
    throw std::invalid_argument("comparison_to_csv: reports cover different horizons");
  auto cols = [](const std::string& tag) {
    std::string out;
    for (const char* c : {"psnr_mean", "psnr_std", "psnr_min", "psnr_max", "ssim_mean", "ssim_std",
                          "ssim_min", "ssim_max"})
      out += "," + tag + "_" + c;
    return out;
  };
  std::string out = "step" + cols(a.model_tag) + cols(b.model_tag) + "\n";
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    out += std::to_string(k + 1) + ",";
    append_stats_row(out, a.steps[k]);
    out += ",";
    append_stats_row(out, b.steps[k]);
    out += "\n";
  }
  return out;
}

}  // namespace promnet
