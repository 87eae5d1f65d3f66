// Acceptance suite: one pass/fail line per criterion. Each criterion can be
// selected with --criterion N; the default runs all nine. Exit code equals the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "promnet/binio.hpp"
#include "promnet/checkpoint.hpp"
#include "promnet/datagen.hpp"
#include "promnet/dataset.hpp"
#include "promnet/gradcheck.hpp"
#include "promnet/metrics.hpp"
#include "promnet/model.hpp"
#include "promnet/optimizer.hpp"
#include "promnet/pgm.hpp"
#include "promnet/train.hpp"

namespace fs = std::filesystem;
using namespace promnet;

namespace {

fs::path scratch_root() {
  fs::path p = fs::current_path() / "acceptance_tmp";
  fs::create_directories(p);
  return p;
}

fs::path scratch(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string cli_path() {
  if (const char* env = std::getenv("PROMNET_CLI")) return env;
#ifdef PROMNET_CLI_PATH
  return PROMNET_CLI_PATH;
#else
  return "promnet";
#endif
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = cli_path() + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

bool files_equal(const fs::path& a, const fs::path& b) {
  return read_file_bytes(a.string()) == read_file_bytes(b.string());
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int criterion, const char* name, bool passed, const std::string& details) {
  std::printf("[%s] C%d %s: %s\n", passed ? "PASS" : "FAIL", criterion, name, details.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

bool criterion1_gradients() {
  auto start = std::chrono::steady_clock::now();
  auto outcomes = run_gradcheck();
  double secs = elapsed_s(start);
  bool all = true;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& o : outcomes) {
    all = all && o.passed;
    if (o.max_rel_error / o.threshold > worst) {
      worst = o.max_rel_error / o.threshold;
      worst_name = o.name;
    }
  }
  bool in_budget = secs < 120.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%zu checks, tightest margin at %s, runtime %.1fs (budget 120s)",
                outcomes.size(), worst_name.c_str(), secs);
  report(1, "gradient correctness", all && in_budget, buf);
  return all && in_budget;
}

bool criterion2_shapes() {
  PromNetConfig cfg;  // 64x64, scale 1
  PromNet<float> net(cfg, 1);
  Rng rng(1);
  Tensor frame({1, 1, 64, 64});
  fill_uniform(frame, rng, 0.0, 1.0);
  auto states = net.initial_encoder_states(1);
  EncodeCtx<float> ctx;
  auto feats = net.encode_step(frame, states, true, &ctx);
  auto dec = net.initial_decoder_states(states);
  DecodeCtx<float> dctx;
  Tensor out = net.decode_step(dec, feats, true, &dctx);

  struct Expect {
    const char* what;
    std::vector<std::int64_t> got, want;
  };
  std::vector<Expect> chain = {
      {"enc_conv1", ctx.conv1_out.shape, {1, 8, 64, 64}},
      {"pool/s1", feats.s1.shape, {1, 8, 32, 32}},
      {"enc_lstm1/s2", feats.s2.shape, {1, 16, 16, 16}},
      {"latent", feats.latent.shape, {1, 32, 8, 8}},
      {"dec_lstm1_in", dctx.b1.shape, {1, 32, 8, 8}},
      {"deconv1+skip", dctx.f1.shape, {1, 16, 16, 16}},
      {"deconv2+skip", dctx.f2.shape, {1, 8, 32, 32}},
      {"frame", out.shape, {1, 1, 64, 64}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& e : chain) {
    bool match = e.got == e.want;
    ok = ok && match;
    if (!match) detail += std::string(e.what) + " got " + shape_str(e.got) + " ";
  }
  if (ok)
    detail = "1@64x64 -> 8@64x64 -> 8@32x32 -> 16@16x16 -> 32@8x8 -> 16@16x16 -> 8@32x32 -> "
             "1@64x64";
  report(2, "shape fidelity", ok, detail);
  return ok;
}

bool criterion3_capacity() {
  PromNetConfig cfg;  // scale 1
  std::int64_t count = param_count(cfg);
  bool count_ok = count >= 3000000 && count <= 9000000;

  fs::path dir = scratch("c3");
  PromNet<float> net(cfg, 1);
  RmsProp<float> opt;
  opt.init(net.params());
  std::string ckpt = (dir / "scale1.prck").string();
  save_checkpoint(net, opt, {0, 0}, ckpt);
  auto size = fs::file_size(ckpt);
  bool size_ok = size >= 3u * 1024 * 1024 && size <= 40u * 1024 * 1024;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "param_count %lld (band [3e6, 9e6]: %s); checkpoint %.2f MB (band [3, 40] MB: %s)",
                static_cast<long long>(count), count_ok ? "ok" : "OUT OF BAND",
                static_cast<double>(size) / (1024.0 * 1024.0), size_ok ? "ok" : "OUT OF BAND");
  report(3, "capacity consistency", count_ok && size_ok, buf);
  return count_ok && size_ok;
}

bool criterion4_learning() {
  auto start = std::chrono::steady_clock::now();
  GeneratorConfig g;
  g.families = {TrajectoryFamily::straight};
  g.per_family = 2;
  g.t = 8;
  g.h = g.w = 16;
  g.base_seed = 21;
  g.train_fraction = 1.0;
  SequenceDataset ds = generate_dataset(g);

  PromNetConfig cfg;
  cfg.input_h = cfg.input_w = 16;
  cfg.scale = 1.0 / 8.0;
  cfg.t_in = 2;
  cfg.t_out = 2;
  PromNet<float> net(cfg, 2);

  TrainConfig tc;
  tc.batch_size = 2;
  tc.epochs = 200;
  tc.window_stride = 1;
  tc.teacher_forcing_prob = 1.0;
  RmsProp<float> opt({0.001, 0.9, 1e-8});
  Rng rng(3);
  double first = 0.0, last = 0.0;
  for (int e = 0; e < tc.epochs; ++e) {
    EpochMetrics m = train_epoch(net, ds, tc, opt, rng, 1.0);
    if (e == 0) first = m.mean_loss;
    last = m.mean_loss;
  }
  double secs = elapsed_s(start);
  bool ok = last < 0.1 * first && secs < 600.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "epoch-1 MSE %.6f -> final %.6f (ratio %.4f, need < 0.1), %.1fs",
                first, last, last / first, secs);
  report(4, "learning dynamics", ok, buf);
  return ok;
}

// Criterion 5/6 share one training+evaluation pipeline; results are cached so
// a combined --criterion 5 --criterion 6 invocation trains once.
struct GeneralizationRun {
  EvalReport prom, fc;
  double prom_mean = 0, fc_mean = 0;
};

const GeneralizationRun& generalization_run() {
  static std::optional<GeneralizationRun> cache;
  if (cache) return *cache;

  // protocol (fixed): train on straight+incline families, hold out arc
  GeneratorConfig train_cfg;
  train_cfg.families = {TrajectoryFamily::straight, TrajectoryFamily::incline_lr,
                        TrajectoryFamily::incline_rl};
  train_cfg.per_family = 20;
  train_cfg.base_seed = 20250;
  train_cfg.train_fraction = 1.0;  // all 60 sequences train
  SequenceDataset train_ds = generate_dataset(train_cfg);

  GeneratorConfig arc_cfg;
  arc_cfg.families = {TrajectoryFamily::arc};
  arc_cfg.per_family = 20;
  arc_cfg.base_seed = 20251;
  arc_cfg.train_fraction = 0.0;  // all 20 sequences held out
  SequenceDataset arc_ds = generate_dataset(arc_cfg);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 8;
  tc.window_stride = 5;
  tc.teacher_forcing_prob = -1.0;  // scheduled

  GeneralizationRun run;
  {
    PromNetConfig cfg;
    cfg.scale = 0.25;
    PromNet<float> net(cfg, 31);
    RmsProp<float> opt({0.001, 0.9, 1e-8});
    Rng rng(Rng::derive(31, 0x747261696eULL));
    for (int e = 0; e < tc.epochs; ++e) {
      double tf = scheduled_teacher_prob(tc, e);
      EpochMetrics m = train_epoch(net, train_ds, tc, opt, rng, tf);
      std::printf("  [c5] promnet epoch %d/%d loss %.6f\n", e + 1, tc.epochs, m.mean_loss);
      std::fflush(stdout);
    }
    EvalOptions opts;
    opts.split = "test";
    opts.model_tag = "promnet";
    run.prom = evaluate_horizon(net, arc_ds, opts);
  }
  {
    FcLstmConfig cfg;
    cfg.scale = 0.25;  // hidden 1024
    FcLstm<float> net(cfg, 32);
    RmsProp<float> opt({0.001, 0.9, 1e-8});
    Rng rng(Rng::derive(32, 0x747261696eULL));
    for (int e = 0; e < tc.epochs; ++e) {
      double tf = scheduled_teacher_prob(tc, e);
      EpochMetrics m = train_epoch(net, train_ds, tc, opt, rng, tf);
      std::printf("  [c5] fclstm epoch %d/%d loss %.6f\n", e + 1, tc.epochs, m.mean_loss);
      std::fflush(stdout);
    }
    EvalOptions opts;
    opts.split = "test";
    opts.model_tag = "fclstm";
    run.fc = evaluate_horizon(net, arc_ds, opts);
  }
  for (const auto& st : run.prom.steps) run.prom_mean += st.psnr_mean;
  for (const auto& st : run.fc.steps) run.fc_mean += st.psnr_mean;
  run.prom_mean /= static_cast<double>(run.prom.steps.size());
  run.fc_mean /= static_cast<double>(run.fc.steps.size());

  fs::path dir = scratch("c5");
  emit_csv(run.prom, (dir / "promnet_arc.csv").string());
  emit_csv(run.fc, (dir / "fclstm_arc.csv").string());
  cache = std::move(run);
  return *cache;
}

bool criterion5_generalization() {
  auto start = std::chrono::steady_clock::now();
  const GeneralizationRun& run = generalization_run();
  bool ok = run.prom_mean >= run.fc_mean;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "held-out arc family: PROM-Net mean PSNR %.3f dB vs FC-LSTM %.3f dB "
                "(seeds 20250/20251/31/32), %.0fs",
                run.prom_mean, run.fc_mean, elapsed_s(start));
  report(5, "generalization ordering", ok, buf);
  return ok;
}

bool criterion6_horizon() {
  const GeneralizationRun& run = generalization_run();
  const auto& s = run.prom.steps;
  bool ok = s.front().psnr_mean >= s.back().psnr_mean &&
            s.front().ssim_mean >= s.back().ssim_mean;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "PSNR step1 %.3f >= step10 %.3f; SSIM step1 %.4f >= step10 %.4f",
                s.front().psnr_mean, s.back().psnr_mean, s.front().ssim_mean,
                s.back().ssim_mean);
  report(6, "horizon degradation", ok, buf);
  return ok;
}

// brute-force metric references (independent of src/metrics.cpp)
double psnr_reference(const Tensor& a, const Tensor& b) {
  double mse = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    double d = double(a[i]) - double(b[i]);
    mse += d * d;
  }
  mse /= double(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim_reference(const Tensor& a, const Tensor& b, std::int64_t h, std::int64_t w) {
  const int win = 11;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  double kernel[11][11];
  double ksum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      double dy = y - 5.0, dx = x - 5.0;
      kernel[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      ksum += kernel[y][x];
    }
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) kernel[y][x] /= ksum;
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t oy = 0; oy + win <= h; ++oy)
    for (std::int64_t ox = 0; ox + win <= w; ++ox) {
      double ma = 0, mb = 0, va = 0, vb = 0, cab = 0;
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          ma += kernel[y][x] * a[(oy + y) * w + ox + x];
          mb += kernel[y][x] * b[(oy + y) * w + ox + x];
        }
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          double da = a[(oy + y) * w + ox + x] - ma;
          double db = b[(oy + y) * w + ox + x] - mb;
          va += kernel[y][x] * da * da;
          vb += kernel[y][x] * db * db;
          cab += kernel[y][x] * da * db;
        }
      total += ((2 * ma * mb + c1) * (2 * cab + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / double(count);
}

bool criterion7_metric_oracles() {
  Rng rng(77);
  double worst_psnr = 0, worst_ssim = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor a({1, 1, 16, 16}), b({1, 1, 16, 16});
    fill_uniform(a, rng, 0.0, 1.0);
    fill_uniform(b, rng, 0.0, 1.0);
    worst_psnr = std::max(worst_psnr, std::fabs(psnr(a, b) - psnr_reference(a, b)));
    worst_ssim = std::max(worst_ssim, std::fabs(ssim(a, b) - ssim_reference(a, b, 16, 16)));
  }
  bool pairs_ok = worst_psnr < 1e-6 && worst_ssim < 1e-6;

  Tensor zeros({1, 1, 16, 16}, 0.0f), halves({1, 1, 16, 16}, 0.5f), ones({1, 1, 16, 16}, 1.0f);
  double psnr_const = psnr(zeros, halves);
  double ssim_const = ssim(zeros, ones);
  const double ssim_expect = 1e-4 / 1.0001;  // C1/(1+C1)
  bool const_ok = std::fabs(psnr_const - 6.0206) <= 1e-4 &&
                  std::fabs(ssim_const - ssim_expect) <= 1e-4 * ssim_expect;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "100 random pairs: |dPSNR| %.2e, |dSSIM| %.2e (< 1e-6); const cases %.6f dB / "
                "%.6e",
                worst_psnr, worst_ssim, psnr_const, ssim_const);
  report(7, "metric oracles", pairs_ok && const_ok, buf);
  return pairs_ok && const_ok;
}

bool criterion8_determinism() {
  fs::path dir = scratch("c8");
  fs::path log = dir / "cli.log";
  std::string common = "--out " + (dir / "a.prds").string() +
                       " --seed 33 --families straight --count 4 --t 24 --size 32";
  bool ok = true;
  std::string detail;

  // dataset generation byte-reproducible
  ok &= run_cli("generate " + common, log) == 0;
  ok &= run_cli("generate --out " + (dir / "b.prds").string() +
                    " --seed 33 --families straight --count 4 --t 24 --size 32",
                log) == 0;
  bool gen_ok = ok && files_equal(dir / "a.prds", dir / "b.prds");
  if (!gen_ok) detail += "generate not byte-stable; ";

  // training at --threads 1 byte-reproducible (checkpoint and loss log)
  std::string train_flags = " --data " + (dir / "a.prds").string() +
                            " --epochs 2 --scale 0.125 --seed 9 --batch 4";
  ok &= run_cli("--threads 1 train" + train_flags + " --out-dir " + (dir / "t1").string(), log) == 0;
  ok &= run_cli("--threads 1 train" + train_flags + " --out-dir " + (dir / "t2").string(), log) == 0;
  bool train_ok = ok && files_equal(dir / "t1" / "promnet.prck", dir / "t2" / "promnet.prck") &&
                  files_equal(dir / "t1" / "loss_log.csv", dir / "t2" / "loss_log.csv");
  if (!train_ok) detail += "train not byte-stable; ";

  // prediction byte-reproducible
  std::string ckpt = (dir / "t1" / "promnet.prck").string();
  std::string pred_flags = "predict --ckpt " + ckpt + " --data " + (dir / "a.prds").string() +
                           " --index 0";
  ok &= run_cli(pred_flags + " --out-dir " + (dir / "p1").string(), log) == 0;
  ok &= run_cli(pred_flags + " --out-dir " + (dir / "p2").string(), log) == 0;
  bool pred_ok = ok;
  for (int k = 1; k <= 10 && pred_ok; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "pred_%02d.pgm", k);
    pred_ok = files_equal(dir / "p1" / name, dir / "p2" / name);
  }
  if (!pred_ok) detail += "predict not byte-stable; ";

  // evaluation byte-reproducible
  std::string eval_flags = "evaluate --ckpt " + ckpt + " --data " + (dir / "a.prds").string();
  ok &= run_cli(eval_flags + " --out " + (dir / "e1.csv").string(), log) == 0;
  ok &= run_cli(eval_flags + " --out " + (dir / "e2.csv").string(), log) == 0;
  bool eval_ok = ok && files_equal(dir / "e1.csv", dir / "e2.csv");
  if (!eval_ok) detail += "evaluate not byte-stable; ";

  // container roundtrips bit-exactly
  LoadedCheckpoint loaded = load_checkpoint(ckpt);
  std::string resaved = (dir / "resaved.prck").string();
  save_checkpoint(*loaded.promnet, loaded.opt, loaded.trainer, resaved);
  bool roundtrip_ok = files_equal(dir / "t1" / "promnet.prck", resaved);
  if (!roundtrip_ok) detail += "checkpoint roundtrip differs; ";

  // corrupted CRCs rejected (library throw plus CLI exit 1)
  bool corrupt_ok = true;
  {
    auto bytes = read_file_bytes((dir / "a.prds").string());
    bytes[bytes.size() / 2] ^= 0x40;
    write_file_bytes((dir / "corrupt.prds").string(), bytes);
    try {
      read_dataset((dir / "corrupt.prds").string());
      corrupt_ok = false;
    } catch (const std::exception&) {
    }
    auto ck = read_file_bytes(ckpt);
    ck[ck.size() / 2] ^= 0x40;
    write_file_bytes((dir / "corrupt.prck").string(), ck);
    try {
      load_checkpoint((dir / "corrupt.prck").string());
      corrupt_ok = false;
    } catch (const std::exception&) {
    }
    int rc = run_cli("predict --ckpt " + (dir / "corrupt.prck").string() + " --data " +
                         (dir / "a.prds").string() + " --index 0 --out-dir " +
                         (dir / "pc").string(),
                     log);
    corrupt_ok = corrupt_ok && rc == 1;
  }
  if (!corrupt_ok) detail += "corruption not rejected; ";

  bool all = gen_ok && train_ok && pred_ok && eval_ok && roundtrip_ok && corrupt_ok;
  if (all) detail = "generate/train/predict/evaluate byte-stable; roundtrip exact; CRCs enforced";
  report(8, "determinism & formats", all, detail);
  return all;
}

bool criterion9_protocol() {
  fs::path dir = scratch("c9");
  fs::path log = dir / "cli.log";
  bool ok = true;
  std::string detail;

  // a checkpoint with the production 10-in/10-out protocol at tiny scale
  ok &= run_cli("generate --out " + (dir / "d.prds").string() +
                    " --seed 44 --families straight --count 2 --t 24 --size 32",
                log) == 0;
  ok &= run_cli("train --data " + (dir / "d.prds").string() + " --epochs 1 --scale 0.125" +
                    " --seed 4 --batch 2 --out-dir " + dir.string(),
                log) == 0;
  std::string ckpt = (dir / "promnet.prck").string();

  // 12 source frames on disk
  SequenceDataset ds = read_dataset((dir / "d.prds").string());
  fs::path frames12 = dir / "frames12";
  fs::create_directories(frames12);
  for (int t = 0; t < 12; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "f_%02d.pgm", t);
    write_pgm((frames12 / name).string(), 32, 32, ds.frame(0, static_cast<std::uint32_t>(t)));
  }
  fs::path frames9 = dir / "frames9";
  fs::create_directories(frames9);
  for (int t = 0; t < 9; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "f_%02d.pgm", t);
    write_pgm((frames9 / name).string(), 32, 32, ds.frame(0, static_cast<std::uint32_t>(t)));
  }
  fs::path frames10 = dir / "frames10";
  fs::create_directories(frames10);
  for (int t = 0; t < 10; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "f_%02d.pgm", t);
    write_pgm((frames10 / name).string(), 32, 32, ds.frame(0, static_cast<std::uint32_t>(t)));
  }

  auto count_preds = [](const fs::path& p) {
    int n = 0;
    if (fs::exists(p))
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().filename().string().rfind("pred_", 0) == 0) ++n;
    return n;
  };

  int rc10 = run_cli("predict --ckpt " + ckpt + " --frames " + frames10.string() +
                         " --out-dir " + (dir / "out10").string(),
                     log);
  bool ten_ok = rc10 == 0 && count_preds(dir / "out10") == 10;
  if (!ten_ok) detail += "10-in/10-out violated; ";

  int rc9 = run_cli("predict --ckpt " + ckpt + " --frames " + frames9.string() + " --out-dir " +
                        (dir / "out9").string(),
                    log);
  bool nine_ok = rc9 == 1;
  if (!nine_ok) detail += "9 frames not rejected; ";

  int rc12 = run_cli("predict --ckpt " + ckpt + " --frames " + frames12.string() +
                         " --out-dir " + (dir / "out12").string(),
                     log);
  bool twelve_ok = rc12 == 0 && count_preds(dir / "out12") == 10;
  if (!twelve_ok) detail += "12-frame run did not consume exactly 10; ";

  bool all = ok && ten_ok && nine_ok && twelve_ok;
  if (all) detail = "10 in -> 10 out; 9 in rejected (exit 1); 12 in consumes the last 10";
  report(9, "protocol fidelity", all, detail);
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  int failures = 0;
  for (int c : selected) {
    bool ok = false;
    try {
      switch (c) {
      case 1: ok = criterion1_gradients(); break;
      case 2: ok = criterion2_shapes(); break;
      case 3: ok = criterion3_capacity(); break;
      case 4: ok = criterion4_learning(); break;
      case 5: ok = criterion5_generalization(); break;
      case 6: ok = criterion6_horizon(); break;
      case 7: ok = criterion7_metric_oracles(); break;
      case 8: ok = criterion8_determinism(); break;
      case 9: ok = criterion9_protocol(); break;
        default:
          std::fprintf(stderr, "unknown criterion %d\n", c);
          return 2;
      }
    } catch (const std::exception& e) {
      report(c, "criterion", false, std::string("unhandled error: ") + e.what());
      ok = false;
    }
    if (!ok) ++failures;
  }
  return failures;
}
