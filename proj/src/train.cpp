#include "promnet/train.hpp"

namespace promnet {

double scheduled_teacher_prob(const TrainConfig& cfg, int epoch_index) {
  if (cfg.teacher_forcing_prob >= 0.0) return cfg.teacher_forcing_prob;
  const int half = cfg.epochs / 2;
  if (epoch_index < half || cfg.epochs <= 1) return 1.0;
  const double rest = static_cast<double>(cfg.epochs - half);
  double p = 1.0 - static_cast<double>(epoch_index - half + 1) / rest;
  return p < 0.0 ? 0.0 : p;
}

std::vector<TrainWindow> training_windows(const SequenceDataset& ds, int t_in, int t_out,
                                          int stride) {
  if (ds.size() == 0) throw std::invalid_argument("training_windows: dataset is empty");
  const int need = t_in + t_out;
  if (static_cast<int>(ds.t) < need)
    throw std::invalid_argument("training_windows: sequences of length " + std::to_string(ds.t) +
                                " are shorter than t_in+t_out = " + std::to_string(need));
  if (stride < 1) stride = 1;
  std::vector<TrainWindow> out;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    if (ds.meta[s].split != "train") continue;
    for (std::uint32_t t0 = 0; t0 + static_cast<std::uint32_t>(need) <= ds.t;
         t0 += static_cast<std::uint32_t>(stride))
      out.push_back({s, t0});
  }
  return out;
}

}  // namespace promnet
