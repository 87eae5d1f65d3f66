// Command line front end: synthetic data generation, training, prediction,
// evaluation and the gradient verification gate.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promnet/binio.hpp"
#include "promnet/checkpoint.hpp"
#include "promnet/datagen.hpp"
#include "promnet/dataset.hpp"
#include "promnet/gradcheck.hpp"
#include "promnet/metrics.hpp"
#include "promnet/model.hpp"
#include "promnet/parallel.hpp"
#include "promnet/pgm.hpp"
#include "promnet/train.hpp"
#include "promnet/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerification = 3;

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct ManifestWriter {
  json doc;
  std::string path;

  ManifestWriter(const std::string& command, const std::string& manifest_path) : path(manifest_path) {
    doc["command"] = command;
    doc["engine_version"] = promnet::kEngineVersion;
    doc["started_utc"] = utc_now();
    doc["artifacts"] = json::array();
  }
  void add_artifact(const std::string& p) { doc["artifacts"].push_back(p); }
  void finish() {
    doc["finished_utc"] = utc_now();
    std::string text = doc.dump(2) + "\n";
    promnet::write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
};

std::string loss_csv(const std::vector<double>& epoch_losses) {
  std::string out = "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.8f\n", i + 1, epoch_losses[i]);
    out += buf;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  promnet::write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out;
  std::uint64_t seed = 0;
  int count = 20;
  std::string families = "straight,arc,incline_lr,incline_rl";
  int t = 30;
  int size = 64;
  bool duplicate = false;
  double train_fraction = 0.75;
  double gain_noise = 0.05;
  double heading_noise = 0.08;
};

int cmd_generate(const GenerateArgs& a) {
  promnet::GeneratorConfig cfg;
  cfg.families.clear();
  std::string rest = a.families;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string tok = rest.substr(0, comma);
    if (!tok.empty()) cfg.families.push_back(promnet::family_from_name(tok));
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
  }
  cfg.per_family = a.count;
  cfg.t = a.t;
  cfg.h = cfg.w = a.size;
  cfg.base_seed = a.seed;
  cfg.duplicate = a.duplicate;
  cfg.train_fraction = a.train_fraction;
  cfg.gain_noise = a.gain_noise;
  cfg.heading_noise = a.heading_noise;

  ManifestWriter manifest("generate", a.out + ".manifest.json");
  manifest.doc["seed"] = a.seed;
  manifest.doc["flags"] = {{"out", a.out},
                           {"count", a.count},
                           {"families", a.families},
                           {"t", a.t},
                           {"size", a.size},
                           {"duplicate", a.duplicate},
                           {"train_fraction", a.train_fraction},
                           {"gain_noise", a.gain_noise},
                           {"heading_noise", a.heading_noise}};

  promnet::SequenceDataset ds = promnet::generate_dataset(cfg);
  promnet::write_dataset(ds, a.out);
  std::size_t train = ds.split_indices("train").size();
  std::cout << "wrote " << ds.size() << " sequences (" << train << " train, "
            << ds.size() - train << " test) to " << a.out << "\n";
  manifest.add_artifact(a.out);
  manifest.finish();
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string model = "promnet";
  std::string out_dir = ".";
  int epochs = 1;
  int batch = 8;
  bool paper_batch = false;
  double lr = 0.001;
  double scale = 0.25;
  std::uint64_t seed = 0;
  double teacher_forcing = -1.0;
  int window_stride = 5;
  double grad_clip = 0.0;
  std::int64_t hidden = 0;
  int checkpoint_every = 0;
};

template <typename Model>
int run_training(Model& model, const promnet::SequenceDataset& ds, const TrainArgs& a,
                 ManifestWriter& manifest) {
  promnet::TrainConfig cfg;
  cfg.batch_size = a.paper_batch ? 64 : a.batch;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.teacher_forcing_prob = a.teacher_forcing;
  cfg.window_stride = a.window_stride;
  cfg.grad_clip = a.grad_clip;
  cfg.checkpoint_every = a.checkpoint_every;

  promnet::RmsProp<float> opt({a.lr, 0.9, 1e-8});
  promnet::Rng rng(promnet::Rng::derive(a.seed, 0x747261696eULL));

  const std::string ckpt_path = a.out_dir + "/" + a.model + ".prck";
  const std::string log_path = a.out_dir + "/loss_log.csv";
  std::vector<double> epoch_losses;
  for (int e = 0; e < cfg.epochs; ++e) {
    double tf = promnet::scheduled_teacher_prob(cfg, e);
    promnet::EpochMetrics m = promnet::train_epoch(model, ds, cfg, opt, rng, tf);
    epoch_losses.push_back(m.mean_loss);
    std::cout << "epoch " << e + 1 << "/" << cfg.epochs << "  mean loss " << m.mean_loss
              << "  (teacher forcing " << tf << ")\n";
    if (cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0 && e + 1 < cfg.epochs) {
      std::string p = a.out_dir + "/" + a.model + "_epoch" + std::to_string(e + 1) + ".prck";
      promnet::save_checkpoint(model, opt, {rng.state(), static_cast<std::uint64_t>(e + 1)}, p);
      manifest.add_artifact(p);
    }
  }
  promnet::save_checkpoint(model, opt,
                           {rng.state(), static_cast<std::uint64_t>(cfg.epochs)}, ckpt_path);
  write_text(log_path, loss_csv(epoch_losses));
  manifest.add_artifact(ckpt_path);
  manifest.add_artifact(log_path);
  manifest.doc["param_count"] = model.param_count();
  manifest.doc["final_loss"] = epoch_losses.empty() ? 0.0 : epoch_losses.back();
  std::cout << "saved checkpoint " << ckpt_path << " (" << model.param_count()
            << " parameters)\n";
  return 0;
}

int cmd_train(const TrainArgs& a) {
  promnet::SequenceDataset ds = promnet::read_dataset(a.data);
  fs::create_directories(a.out_dir);
  ManifestWriter manifest("train", a.out_dir + "/manifest.json");
  manifest.doc["seed"] = a.seed;
  manifest.doc["flags"] = {{"data", a.data},
                           {"model", a.model},
                           {"epochs", a.epochs},
                           {"batch", a.paper_batch ? 64 : a.batch},
                           {"lr", a.lr},
                           {"scale", a.scale},
                           {"teacher_forcing", a.teacher_forcing},
                           {"window_stride", a.window_stride},
                           {"grad_clip", a.grad_clip},
                           {"threads", promnet::num_threads()}};

  int rc = 0;
  if (a.model == "promnet") {
    promnet::PromNetConfig cfg;
    cfg.input_h = ds.h;
    cfg.input_w = ds.w;
    cfg.scale = a.scale;
    promnet::PromNet<float> net(cfg, a.seed);
    rc = run_training(net, ds, a, manifest);
  } else if (a.model == "fclstm") {
    promnet::FcLstmConfig cfg;
    cfg.input_h = ds.h;
    cfg.input_w = ds.w;
    cfg.scale = a.scale;
    cfg.hidden = a.hidden;
    promnet::FcLstm<float> net(cfg, a.seed);
    rc = run_training(net, ds, a, manifest);
  } else {
    throw std::runtime_error("unknown model '" + a.model + "' (expected promnet|fclstm)");
  }
  manifest.finish();
  return rc;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string ckpt;
  std::string frames_dir;
  std::string data;
  int index = 0;
  int offset = 0;
  int frame_stride = 1;  // subsampling for high-fps source material
  std::string out_dir = ".";
};

int cmd_predict(const PredictArgs& a) {
  promnet::LoadedCheckpoint model = promnet::load_checkpoint(a.ckpt);
  const int t_in = model.t_in();

  if (a.frame_stride < 1) throw std::runtime_error("--frame-stride must be at least 1");
  std::vector<promnet::Tensor> frames;
  if (!a.frames_dir.empty()) {
    frames = promnet::import_frames(a.frames_dir, static_cast<int>(model.frame_h()),
                                    static_cast<int>(model.frame_w()));
    if (a.frame_stride > 1) {
      std::vector<promnet::Tensor> strided;
      for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(a.frame_stride))
        strided.push_back(std::move(frames[i]));
      frames = std::move(strided);
    }
  } else if (!a.data.empty()) {
    promnet::SequenceDataset ds = promnet::read_dataset(a.data);
    if (a.index < 0 || static_cast<std::size_t>(a.index) >= ds.size())
      throw std::runtime_error("sequence index " + std::to_string(a.index) + " out of range");
    for (std::uint32_t t = static_cast<std::uint32_t>(a.offset);
         t < ds.t && frames.size() < static_cast<std::size_t>(t_in); ++t)
      frames.push_back(ds.frame_tensor(static_cast<std::size_t>(a.index), t));
  } else {
    throw std::runtime_error("predict needs --frames or --data");
  }

  if (static_cast<int>(frames.size()) < t_in)
    throw std::runtime_error("predict needs at least " + std::to_string(t_in) +
                             " input frames, got " + std::to_string(frames.size()));
  // exactly t_in frames feed the network; keep the most recent ones
  if (static_cast<int>(frames.size()) > t_in)
    frames.erase(frames.begin(), frames.end() - t_in);

  fs::create_directories(a.out_dir);
  ManifestWriter manifest("predict", a.out_dir + "/manifest.json");
  manifest.doc["flags"] = {{"ckpt", a.ckpt},
                           {"frames", a.frames_dir},
                           {"data", a.data},
                           {"index", a.index},
                           {"offset", a.offset},
                           {"frame_stride", a.frame_stride},
                           {"consumed_frames", t_in}};

  std::vector<promnet::Tensor> preds = model.predict(frames);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "pred_%02zu.pgm", k + 1);
    std::string path = a.out_dir + "/" + name;
    promnet::write_pgm_frame(path, preds[k]);
    manifest.add_artifact(path);
  }
  std::cout << "wrote " << preds.size() << " predicted frames to " << a.out_dir << "\n";
  manifest.finish();
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string ckpt;
  std::string compare;
  std::string data;
  std::string out;
  std::string split = "test";
  int window_stride = 1;
};

promnet::EvalReport evaluate_checkpoint(const std::string& ckpt_path,
                                        const promnet::SequenceDataset& ds,
                                        const EvaluateArgs& a, const std::string& tag) {
  promnet::LoadedCheckpoint model = promnet::load_checkpoint(ckpt_path);
  promnet::EvalOptions opts;
  opts.split = a.split;
  opts.window_stride = a.window_stride;
  opts.model_tag = tag.empty() ? model.model_kind : tag;
  opts.dataset_tag = a.data;
  if (model.promnet) return promnet::evaluate_horizon(*model.promnet, ds, opts);
  return promnet::evaluate_horizon(*model.fclstm, ds, opts);
}

int cmd_evaluate(const EvaluateArgs& a) {
  promnet::SequenceDataset ds = promnet::read_dataset(a.data);
  std::string out_path = a.out.empty() ? "eval.csv" : a.out;
  ManifestWriter manifest("evaluate", out_path + ".manifest.json");
  manifest.doc["flags"] = {{"ckpt", a.ckpt},   {"compare", a.compare},
                           {"data", a.data},   {"split", a.split},
                           {"window_stride", a.window_stride}};

  promnet::EvalReport report = evaluate_checkpoint(a.ckpt, ds, a, "a");
  if (a.compare.empty()) {
    write_text(out_path, promnet::report_to_csv(report));
  } else {
    promnet::EvalReport other = evaluate_checkpoint(a.compare, ds, a, "b");
    write_text(out_path, promnet::comparison_to_csv(report, other));
  }
  manifest.add_artifact(out_path);
  manifest.finish();
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const std::string& only, bool perturb) {
  auto outcomes = promnet::run_gradcheck(only, perturb);
  bool all_ok = true;
  std::printf("%-22s %14s %12s  %s\n", "check", "max_rel_err", "threshold", "status");
  for (const auto& o : outcomes) {
    std::printf("%-22s %14.3e %12.0e  %s\n", o.name.c_str(), o.max_rel_error, o.threshold,
                o.passed ? "pass" : "FAIL");
    all_ok = all_ok && o.passed;
  }
  return all_ok ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promnet: CPU video-frame-prediction engine (encoder-decoder ConvLSTM)"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (1 = fully serial); default PROMNET_THREADS");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "render a synthetic moving-agent dataset");
  generate->fallthrough();
  generate->add_option("--out", gen.out, "output .prds path")->required();
  generate->add_option("--seed", gen.seed, "base seed");
  generate->add_option("--count", gen.count, "sequences per family");
  generate->add_option("--families", gen.families, "comma list of trajectory families");
  generate->add_option("--t", gen.t, "frames per sequence");
  generate->add_option("--size", gen.size, "frame height/width (multiple of 8)");
  generate->add_flag("--duplicate", gen.duplicate, "render every trajectory twice");
  generate->add_option("--train-fraction", gen.train_fraction, "train share of the split");
  generate->add_option("--gain-noise", gen.gain_noise, "speed jitter sigma");
  generate->add_option("--heading-noise", gen.heading_noise, "heading jitter sigma");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train a model on a .prds dataset");
  train->fallthrough();
  train->add_option("--data", tr.data, "dataset path")->required();
  train->add_option("--model", tr.model, "promnet | fclstm");
  train->add_option("--out-dir", tr.out_dir, "output directory");
  train->add_option("--epochs", tr.epochs, "training epochs");
  train->add_option("--batch", tr.batch, "batch size");
  train->add_flag("--paper-batch", tr.paper_batch, "use batch size 64");
  train->add_option("--lr", tr.lr, "learning rate");
  train->add_option("--scale", tr.scale, "channel multiplier");
  train->add_option("--seed", tr.seed, "seed");
  train->add_option("--teacher-forcing", tr.teacher_forcing,
                    "constant teacher-forcing probability; negative = schedule");
  train->add_option("--window-stride", tr.window_stride, "training window stride");
  train->add_option("--grad-clip", tr.grad_clip, "global gradient-norm cap (0 = off)");
  train->add_option("--hidden", tr.hidden, "fclstm hidden size override");
  train->add_option("--checkpoint-every", tr.checkpoint_every, "epochs between checkpoints");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "predict future frames from a checkpoint");
  predict->fallthrough();
  predict->add_option("--ckpt", pr.ckpt, "checkpoint path")->required();
  predict->add_option("--frames", pr.frames_dir, "directory of input PGM frames");
  predict->add_option("--data", pr.data, "dataset path (alternative input)");
  predict->add_option("--index", pr.index, "sequence index within --data");
  predict->add_option("--offset", pr.offset, "first frame offset within the sequence");
  predict->add_option("--frame-stride", pr.frame_stride,
                      "keep every Nth imported frame (for high-fps sources)");
  predict->add_option("--out-dir", pr.out_dir, "output directory");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM per horizon step on the test split");
  evaluate->fallthrough();
  evaluate->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  evaluate->add_option("--compare", ev.compare, "second checkpoint for a side-by-side report");
  evaluate->add_option("--data", ev.data, "dataset path")->required();
  evaluate->add_option("--out", ev.out, "output CSV path");
  evaluate->add_option("--split", ev.split, "dataset split to evaluate");
  evaluate->add_option("--window-stride", ev.window_stride, "evaluation window stride");

  std::string only;
  bool perturb = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "run the 64-bit gradient verification suite");
  gradcheck->fallthrough();
  gradcheck->add_option("--only", only, "run a single named check");
  gradcheck->add_flag("--perturb", perturb, "skew adjoints to prove the checker trips (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (threads > 0) promnet::set_num_threads(threads);

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (train->parsed()) return cmd_train(tr);
    if (predict->parsed()) return cmd_predict(pr);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (gradcheck->parsed()) return cmd_gradcheck(only, perturb);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
