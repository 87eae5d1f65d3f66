#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promnet/dataset.hpp"

namespace promnet {

enum class TrajectoryFamily { straight, arc, incline_lr, incline_rl };
enum class Depth { near, mid, far };

std::string family_name(TrajectoryFamily f);
TrajectoryFamily family_from_name(const std::string& name);
std::string depth_name(Depth d);
double depth_scale(Depth d);  // sprite scale: near 1.5, mid 1.0, far 0.6

struct Pose {
  double x = 0.0, y = 0.0;  // normalized scene coordinates in [0,1]
  double scale = 1.0;
};

struct TrajectorySpec {
  TrajectoryFamily family = TrajectoryFamily::straight;
  Depth depth = Depth::mid;
  double start_x = 0.1, start_y = 0.5;
  double goal_x = 0.9, goal_y = 0.5;
  double gain_noise = 0.0;     // speed jitter sigma (per step)
  double heading_noise = 0.0;  // heading jitter sigma, radians (per step)
  std::uint64_t seed = 0;
};

// T poses from start to goal. The zero-noise path is the exact analytic curve
// (line for straight/incline families, circular arc for arc); with noise each
// step's velocity toward the next analytic point is perturbed by seeded
// Gaussians, mimicking a controller correcting back onto the path.
std::vector<Pose> generate_trajectory(const TrajectorySpec& spec, int steps);

struct RenderConfig {
  int h = 64, w = 64;
  double sprite_w = 0.24, sprite_h = 0.18;  // body size at scale 1, scene units
  double body_level = 0.85;
  double wheel_level = 0.30;
  double background_level = 0.12;
  double background_amp = 0.08;  // value-noise amplitude; 0 disables texture
  std::uint64_t background_seed = 1;
};

// Anti-aliased sprite (bright body with a darker wheel stripe) over a static
// value-noise background; one H*W byte plane per pose.
std::vector<std::vector<std::uint8_t>> render_sequence(const std::vector<Pose>& poses,
                                                       const RenderConfig& rc);

struct GeneratorConfig {
  std::vector<TrajectoryFamily> families = {TrajectoryFamily::straight, TrajectoryFamily::arc,
                                            TrajectoryFamily::incline_lr,
                                            TrajectoryFamily::incline_rl};
  int per_family = 20;
  int t = 30;
  int h = 64, w = 64;
  std::uint64_t base_seed = 0;
  double train_fraction = 0.75;  // seeded per-family 3:1 split by default
  bool duplicate = false;        // render every trajectory twice (fresh jitter seed)
  double gain_noise = 0.05;
  double heading_noise = 0.08;
};

SequenceDataset generate_dataset(const GeneratorConfig& cfg);

}  // namespace promnet
