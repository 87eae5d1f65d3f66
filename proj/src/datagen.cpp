#include "promnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "promnet/rng.hpp"

namespace promnet {

std::string family_name(TrajectoryFamily f) {
  switch (f) {
    case TrajectoryFamily::straight: return "straight";
    case TrajectoryFamily::arc: return "arc";
    case TrajectoryFamily::incline_lr: return "incline_lr";
    case TrajectoryFamily::incline_rl: return "incline_rl";
  }
  throw std::invalid_argument("unknown trajectory family");
}

TrajectoryFamily family_from_name(const std::string& name) {
  if (name == "straight") return TrajectoryFamily::straight;
  if (name == "arc") return TrajectoryFamily::arc;
  if (name == "incline_lr") return TrajectoryFamily::incline_lr;
  if (name == "incline_rl") return TrajectoryFamily::incline_rl;
  throw std::invalid_argument("unknown trajectory family '" + name +
                              "' (expected straight|arc|incline_lr|incline_rl)");
}

std::string depth_name(Depth d) {
  switch (d) {
    case Depth::near: return "near";
    case Depth::mid: return "mid";
    case Depth::far: return "far";
  }
  throw std::invalid_argument("unknown depth");
}

double depth_scale(Depth d) {
  switch (d) {
    case Depth::near: return 1.5;
    case Depth::mid: return 1.0;
    case Depth::far: return 0.6;
  }
  throw std::invalid_argument("unknown depth");
}

namespace {

struct Vec2 {
  double x, y;
};

struct ArcGeometry {
  Vec2 center;
  double radius;
  double theta_start, sweep;
};

constexpr double kArcBulge = 0.35;  // sagitta as a fraction of the chord

ArcGeometry arc_geometry(Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double chord = std::sqrt(dx * dx + dy * dy);
  if (chord < 1e-12) throw std::invalid_argument("arc trajectory: start equals goal");
  const double sag = kArcBulge * chord;
  const double radius = chord * chord / (8.0 * sag) + sag / 2.0;
  const Vec2 mid{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
  const Vec2 left_n{-dy / chord, dx / chord};
  const Vec2 bulge{mid.x + sag * left_n.x, mid.y + sag * left_n.y};
  const Vec2 center{mid.x - (radius - sag) * left_n.x, mid.y - (radius - sag) * left_n.y};

  const double two_pi = 2.0 * 3.14159265358979323846;
  const double ta = std::atan2(a.y - center.y, a.x - center.x);
  const double tb = std::atan2(b.y - center.y, b.x - center.x);
  const double tp = std::atan2(bulge.y - center.y, bulge.x - center.x);
  double ccw = std::fmod(tb - ta + two_pi, two_pi);
  double ccw_p = std::fmod(tp - ta + two_pi, two_pi);
  double sweep = (ccw_p <= ccw) ? ccw : ccw - two_pi;  // pass through the bulge point
  return {center, radius, ta, sweep};
}

Vec2 analytic_point(const TrajectorySpec& spec, const ArcGeometry* arc, double u) {
  if (spec.family == TrajectoryFamily::arc) {
    double theta = arc->theta_start + u * arc->sweep;
    return {arc->center.x + arc->radius * std::cos(theta),
            arc->center.y + arc->radius * std::sin(theta)};
  }
  return {spec.start_x + u * (spec.goal_x - spec.start_x),
          spec.start_y + u * (spec.goal_y - spec.start_y)};
}

}  // namespace

std::vector<Pose> generate_trajectory(const TrajectorySpec& spec, int steps) {
  if (steps < 2) throw std::invalid_argument("generate_trajectory: needs at least 2 steps");
  if (spec.gain_noise < 0.0 || spec.heading_noise < 0.0)
    throw std::invalid_argument("generate_trajectory: noise sigmas must be non-negative");

  ArcGeometry arc{};
  if (spec.family == TrajectoryFamily::arc)
    arc = arc_geometry({spec.start_x, spec.start_y}, {spec.goal_x, spec.goal_y});

  Rng rng(Rng::derive(spec.seed, 0x7472616aULL));
  const double sprite_scale = depth_scale(spec.depth);
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(steps));

  Vec2 pos = analytic_point(spec, &arc, 0.0);
  poses.push_back({pos.x, pos.y, sprite_scale});
  for (int t = 1; t < steps; ++t) {
    double u = static_cast<double>(t) / static_cast<double>(steps - 1);
    Vec2 target = analytic_point(spec, &arc, u);
    double vx = target.x - pos.x, vy = target.y - pos.y;
    // heading/gain jitter; polynomial rotation keeps the zero-noise path exact
    double theta = spec.heading_noise * rng.next_gaussian();
    double gain = 1.0 + spec.gain_noise * rng.next_gaussian();
    double c = 1.0 - theta * theta / 2.0;
    double s = theta - theta * theta * theta / 6.0;
    pos.x += gain * (c * vx - s * vy);
    pos.y += gain * (s * vx + c * vy);
    poses.push_back({pos.x, pos.y, sprite_scale});
  }
  return poses;
}

namespace {

// Seeded value noise on an 8 px lattice, bilinearly interpolated.
struct BackgroundTexture {
  int gw, gh, cell;
  std::vector<double> grid;

  BackgroundTexture(int w, int h, std::uint64_t seed, int cell_px = 8) : cell(cell_px) {
    gw = w / cell + 2;
    gh = h / cell + 2;
    grid.resize(static_cast<std::size_t>(gw) * gh);
    Rng rng(Rng::derive(seed, 0x626721ULL));
    for (double& v : grid) v = rng.next_uniform(-1.0, 1.0);
  }

  double at(int px, int py) const {
    double fx = (px + 0.5) / cell, fy = (py + 0.5) / cell;
    int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    double ax = fx - x0, ay = fy - y0;
    auto g = [&](int x, int y) { return grid[static_cast<std::size_t>(y) * gw + x]; };
    double top = g(x0, y0) * (1.0 - ax) + g(x0 + 1, y0) * ax;
    double bot = g(x0, y0 + 1) * (1.0 - ax) + g(x0 + 1, y0 + 1) * ax;
    return top * (1.0 - ay) + bot * ay;
  }
};

double overlap(double lo, double hi, double cell_lo, double cell_hi) {
  double v = std::min(hi, cell_hi) - std::max(lo, cell_lo);
  return v > 0.0 ? v : 0.0;
}

std::uint8_t quantize(double v) {
  double q = std::floor(v * 255.0 + 0.5);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<std::uint8_t>(q);
}

}  // namespace

std::vector<std::vector<std::uint8_t>> render_sequence(const std::vector<Pose>& poses,
                                                       const RenderConfig& rc) {
  if (rc.h < 8 || rc.w < 8 || rc.h % 8 != 0 || rc.w % 8 != 0)
    throw std::invalid_argument("render_sequence: frame size must be a positive multiple of 8");

  std::vector<std::uint8_t> background(static_cast<std::size_t>(rc.h) * rc.w);
  {
    BackgroundTexture tex(rc.w, rc.h, rc.background_seed);
    for (int y = 0; y < rc.h; ++y)
      for (int x = 0; x < rc.w; ++x) {
        double v = rc.background_level;
        if (rc.background_amp > 0.0) v += rc.background_amp * tex.at(x, y);
        background[static_cast<std::size_t>(y) * rc.w + x] = quantize(v);
      }
  }

  std::vector<std::vector<std::uint8_t>> frames;
  frames.reserve(poses.size());
  for (const Pose& pose : poses) {
    std::vector<std::uint8_t> frame = background;
    const double cx = pose.x * rc.w, cy = pose.y * rc.h;
    const double hw = rc.sprite_w * pose.scale * rc.w / 2.0;
    const double hh = rc.sprite_h * pose.scale * rc.h / 2.0;
    const double x0 = cx - hw, x1 = cx + hw;
    const double y0 = cy - hh, y1 = cy + hh;
    const double wheel_top = y1 - 0.3 * (y1 - y0);

    int px0 = std::max(0, static_cast<int>(std::floor(x0)));
    int px1 = std::min(rc.w - 1, static_cast<int>(std::floor(x1)));
    int py0 = std::max(0, static_cast<int>(std::floor(y0)));
    int py1 = std::min(rc.h - 1, static_cast<int>(std::floor(y1)));
    for (int py = py0; py <= py1; ++py) {
      double oy = overlap(y0, y1, py, py + 1.0);
      if (oy <= 0.0) continue;
      double oy_wheel = overlap(wheel_top, y1, py, py + 1.0);
      for (int px = px0; px <= px1; ++px) {
        double ox = overlap(x0, x1, px, px + 1.0);
        if (ox <= 0.0) continue;
        double cov = ox * oy;
        double wheel_cov = ox * oy_wheel;
        std::size_t idx = static_cast<std::size_t>(py) * rc.w + px;
        double bg = static_cast<double>(frame[idx]) / 255.0;
        double v = bg * (1.0 - cov) + rc.body_level * (cov - wheel_cov) +
                   rc.wheel_level * wheel_cov;
        frame[idx] = quantize(v);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

namespace {

// The four recorded goal points, normalized into the unit scene.
constexpr double kGoals[4][2] = {{0.40, 0.90}, {0.60, 0.10}, {0.80, 0.10}, {0.20, 0.25}};

double clamp01(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

TrajectorySpec make_spec(const GeneratorConfig& cfg, TrajectoryFamily family, int index,
                         std::uint64_t seed) {
  TrajectorySpec spec;
  spec.family = family;
  spec.depth = static_cast<Depth>(index % 3);
  spec.goal_x = kGoals[index % 4][0];
  spec.goal_y = kGoals[index % 4][1];
  spec.gain_noise = cfg.gain_noise;
  spec.heading_noise = cfg.heading_noise;
  spec.seed = seed;

  Rng rng(Rng::derive(seed, 0x737461ULL));
  double jx = rng.next_uniform(-0.03, 0.03);
  double jy = rng.next_uniform(-0.05, 0.05);
  switch (family) {
    case TrajectoryFamily::straight:
      spec.start_x = 0.08 + jx;
      spec.start_y = clamp01(spec.goal_y + jy, 0.08, 0.92);
      break;
    case TrajectoryFamily::arc:
      spec.start_x = 0.10 + jx;
      spec.start_y = clamp01(spec.goal_y + (spec.goal_y < 0.5 ? 0.30 : -0.30) + jy, 0.08, 0.92);
      break;
    case TrajectoryFamily::incline_lr:
      spec.start_x = 0.08 + jx;
      spec.start_y = clamp01(spec.goal_y + (spec.goal_y < 0.5 ? 0.45 : -0.45) + jy, 0.08, 0.92);
      break;
    case TrajectoryFamily::incline_rl:
      spec.goal_x = 1.0 - spec.goal_x;  // mirrored run, right to left
      spec.start_x = 0.92 + jx;
      spec.start_y = clamp01(spec.goal_y + (spec.goal_y < 0.5 ? 0.45 : -0.45) + jy, 0.08, 0.92);
      break;
  }
  return spec;
}

}  // namespace

SequenceDataset generate_dataset(const GeneratorConfig& cfg) {
  if (cfg.per_family < 1) throw std::invalid_argument("generate_dataset: per_family must be >= 1");
  if (cfg.t < 2) throw std::invalid_argument("generate_dataset: sequence length must be >= 2");
  if (cfg.families.empty()) throw std::invalid_argument("generate_dataset: no families selected");
  if (cfg.train_fraction < 0.0 || cfg.train_fraction > 1.0)
    throw std::invalid_argument("generate_dataset: train_fraction must be in [0,1]");

  SequenceDataset ds;
  ds.t = static_cast<std::uint32_t>(cfg.t);
  ds.h = static_cast<std::uint32_t>(cfg.h);
  ds.w = static_cast<std::uint32_t>(cfg.w);

  for (std::size_t fi = 0; fi < cfg.families.size(); ++fi) {
    const TrajectoryFamily family = cfg.families[fi];
    const int copies = cfg.duplicate ? 2 : 1;
    const std::size_t family_begin = ds.frames.size();
    for (int i = 0; i < cfg.per_family; ++i) {
      for (int copy = 0; copy < copies; ++copy) {
        std::uint64_t seq_seed =
            Rng::derive(cfg.base_seed, static_cast<std::uint64_t>(fi) * 100003 +
                                           static_cast<std::uint64_t>(i) * 2 +
                                           static_cast<std::uint64_t>(copy));
        TrajectorySpec spec = make_spec(cfg, family, i, seq_seed);
        std::vector<Pose> poses = generate_trajectory(spec, cfg.t);
        RenderConfig rc;
        rc.h = cfg.h;
        rc.w = cfg.w;
        rc.background_seed = Rng::derive(seq_seed, 77);
        std::vector<std::vector<std::uint8_t>> frames = render_sequence(poses, rc);
        std::vector<std::uint8_t> packed;
        packed.reserve(static_cast<std::size_t>(cfg.t) * cfg.h * cfg.w);
        for (auto& f : frames) packed.insert(packed.end(), f.begin(), f.end());
        ds.frames.push_back(std::move(packed));
        SequenceMeta meta;
        meta.family = family_name(family);
        meta.depth = depth_name(spec.depth);
        meta.seed = seq_seed;
        meta.goal_x = spec.goal_x;
        meta.goal_y = spec.goal_y;
        meta.split = "train";  // assigned below
        ds.meta.push_back(std::move(meta));
      }
    }
    // seeded 3:1-style split within the family
    const std::size_t family_count = ds.frames.size() - family_begin;
    std::vector<std::size_t> order(family_count);
    for (std::size_t i = 0; i < family_count; ++i) order[i] = family_begin + i;
    Rng split_rng(Rng::derive(cfg.base_seed, 0x53504c49ULL + fi));
    split_rng.shuffle(order);
    auto n_train = static_cast<std::size_t>(
        std::llround(cfg.train_fraction * static_cast<double>(family_count)));
    for (std::size_t i = 0; i < family_count; ++i)
      ds.meta[order[i]].split = i < n_train ? "train" : "test";
  }
  ds.validate();
  return ds;
}

}  // namespace promnet
