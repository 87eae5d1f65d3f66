// Python bindings for the main operations: dataset generation and I/O, both
// models, training, prediction, metrics and the gradient verification suite.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "promnet/checkpoint.hpp"
#include "promnet/datagen.hpp"
#include "promnet/dataset.hpp"
#include "promnet/gradcheck.hpp"
#include "promnet/metrics.hpp"
#include "promnet/model.hpp"
#include "promnet/parallel.hpp"
#include "promnet/train.hpp"
#include "promnet/version.hpp"

namespace py = pybind11;
using namespace promnet;

namespace {

Tensor frame_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("frame must be a 2-D float array");
  Tensor t({1, 1, arr.shape(0), arr.shape(1)});
  std::memcpy(t.data.data(), arr.data(), sizeof(float) * t.data.size());
  return t;
}

std::vector<Tensor> frames_from_array(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3) throw std::invalid_argument("frames must be a [T,H,W] float array");
  std::vector<Tensor> frames;
  const auto t_count = arr.shape(0);
  for (py::ssize_t t = 0; t < t_count; ++t) {
    Tensor f({1, 1, arr.shape(1), arr.shape(2)});
    std::memcpy(f.data.data(), arr.data() + t * arr.shape(1) * arr.shape(2),
                sizeof(float) * f.data.size());
    frames.push_back(std::move(f));
  }
  return frames;
}

py::array_t<float> frames_to_array(const std::vector<Tensor>& frames) {
  const auto h = frames[0].dim(2), w = frames[0].dim(3);
  py::array_t<float> out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(h),
                          static_cast<py::ssize_t>(w)});
  for (std::size_t t = 0; t < frames.size(); ++t)
    std::memcpy(out.mutable_data() + t * static_cast<std::size_t>(h * w), frames[t].data.data(),
                sizeof(float) * static_cast<std::size_t>(h * w));
  return out;
}

py::dict report_to_dict(const EvalReport& r) {
  const auto n = static_cast<py::ssize_t>(r.steps.size());
  py::array_t<double> psnr_mean(n), psnr_std(n), ssim_mean(n), ssim_std(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    psnr_mean.mutable_at(i) = r.steps[static_cast<std::size_t>(i)].psnr_mean;
    psnr_std.mutable_at(i) = r.steps[static_cast<std::size_t>(i)].psnr_std;
    ssim_mean.mutable_at(i) = r.steps[static_cast<std::size_t>(i)].ssim_mean;
    ssim_std.mutable_at(i) = r.steps[static_cast<std::size_t>(i)].ssim_std;
  }
  py::dict d;
  d["model_tag"] = r.model_tag;
  d["psnr_mean"] = psnr_mean;
  d["psnr_std"] = psnr_std;
  d["ssim_mean"] = ssim_mean;
  d["ssim_std"] = ssim_std;
  d["csv"] = report_to_csv(r);
  return d;
}

template <typename Model>
std::vector<double> train_model(Model& model, const SequenceDataset& ds, int epochs, int batch,
                                double lr, std::uint64_t seed, double teacher_forcing,
                                int window_stride, double grad_clip) {
  TrainConfig cfg;
  cfg.batch_size = batch;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.teacher_forcing_prob = teacher_forcing;
  cfg.window_stride = window_stride;
  cfg.grad_clip = grad_clip;
  RmsProp<float> opt({lr, 0.9, 1e-8});
  Rng rng(Rng::derive(seed, 0x747261696eULL));
  std::vector<double> losses;
  for (int e = 0; e < epochs; ++e) {
    double tf = scheduled_teacher_prob(cfg, e);
    losses.push_back(train_epoch(model, ds, cfg, opt, rng, tf).mean_loss);
  }
  return losses;
}

template <typename Model>
py::dict evaluate_model(Model& model, const SequenceDataset& ds, const std::string& split,
                        int window_stride) {
  EvalOptions opts;
  opts.split = split;
  opts.window_stride = window_stride;
  return report_to_dict(evaluate_horizon(model, ds, opts));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CPU video-frame-prediction engine (encoder-decoder ConvLSTM)";
  m.attr("__version__") = kEngineVersion;

  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  py::class_<SequenceDataset>(m, "Dataset")
      .def_property_readonly("t", [](const SequenceDataset& d) { return d.t; })
      .def_property_readonly("h", [](const SequenceDataset& d) { return d.h; })
      .def_property_readonly("w", [](const SequenceDataset& d) { return d.w; })
      .def("__len__", &SequenceDataset::size)
      .def("save", &write_dataset, py::arg("path"))
      .def_static("load", &read_dataset, py::arg("path"))
      .def("split_indices", &SequenceDataset::split_indices, py::arg("split"))
      .def("meta",
           [](const SequenceDataset& d, std::size_t s) {
             const SequenceMeta& meta = d.meta.at(s);
             py::dict out;
             out["family"] = meta.family;
             out["depth"] = meta.depth;
             out["seed"] = meta.seed;
             out["goal"] = py::make_tuple(meta.goal_x, meta.goal_y);
             out["split"] = meta.split;
             return out;
           },
           py::arg("index"))
      .def("frames", [](const SequenceDataset& d, std::size_t s) {
        std::vector<Tensor> fs;
        for (std::uint32_t t = 0; t < d.t; ++t) fs.push_back(d.frame_tensor(s, t));
        return frames_to_array(fs);
      });

  m.def(
      "generate_dataset",
      [](std::vector<std::string> families, int per_family, int t, int size,
         std::uint64_t seed, double train_fraction, bool duplicate) {
        GeneratorConfig cfg;
        cfg.families.clear();
        for (const auto& f : families) cfg.families.push_back(family_from_name(f));
        cfg.per_family = per_family;
        cfg.t = t;
        cfg.h = cfg.w = size;
        cfg.base_seed = seed;
        cfg.train_fraction = train_fraction;
        cfg.duplicate = duplicate;
        return generate_dataset(cfg);
      },
      py::arg("families") =
          std::vector<std::string>{"straight", "arc", "incline_lr", "incline_rl"},
      py::arg("per_family") = 20, py::arg("t") = 30, py::arg("size") = 64, py::arg("seed") = 0,
      py::arg("train_fraction") = 0.75, py::arg("duplicate") = false);

  py::class_<PromNet<float>>(m, "PromNet")
      .def(py::init([](double scale, std::int64_t size, int t_in, int t_out, std::uint64_t seed) {
             PromNetConfig cfg;
             cfg.scale = scale;
             cfg.input_h = cfg.input_w = size;
             cfg.t_in = t_in;
             cfg.t_out = t_out;
             return PromNet<float>(cfg, seed);
           }),
           py::arg("scale") = 0.25, py::arg("size") = 64, py::arg("t_in") = 10,
           py::arg("t_out") = 10, py::arg("seed") = 0)
      .def_property_readonly("param_count", &PromNet<float>::param_count)
      .def("predict",
           [](PromNet<float>& net, const py::array_t<float, py::array::c_style |
                                                                 py::array::forcecast>& frames) {
             return frames_to_array(net.predict_sequence(frames_from_array(frames)));
           },
           py::arg("frames"))
      .def("train",
           [](PromNet<float>& net, const SequenceDataset& ds, int epochs, int batch, double lr,
              std::uint64_t seed, double teacher_forcing, int window_stride, double grad_clip) {
             return train_model(net, ds, epochs, batch, lr, seed, teacher_forcing, window_stride,
                                grad_clip);
           },
           py::arg("dataset"), py::arg("epochs") = 1, py::arg("batch") = 8,
           py::arg("lr") = 0.001, py::arg("seed") = 0, py::arg("teacher_forcing") = -1.0,
           py::arg("window_stride") = 5, py::arg("grad_clip") = 0.0)
      .def("evaluate",
           [](PromNet<float>& net, const SequenceDataset& ds, const std::string& split,
              int window_stride) { return evaluate_model(net, ds, split, window_stride); },
           py::arg("dataset"), py::arg("split") = "test", py::arg("window_stride") = 1)
      .def("save", [](PromNet<float>& net, const std::string& path) {
        RmsProp<float> opt;
        save_checkpoint(net, opt, {0, 0}, path);
      });

  py::class_<FcLstm<float>>(m, "FcLstm")
      .def(py::init([](double scale, std::int64_t size, std::int64_t hidden, int t_in, int t_out,
                       std::uint64_t seed) {
             FcLstmConfig cfg;
             cfg.scale = scale;
             cfg.input_h = cfg.input_w = size;
             cfg.hidden = hidden;
             cfg.t_in = t_in;
             cfg.t_out = t_out;
             return FcLstm<float>(cfg, seed);
           }),
           py::arg("scale") = 0.25, py::arg("size") = 64, py::arg("hidden") = 0,
           py::arg("t_in") = 10, py::arg("t_out") = 10, py::arg("seed") = 0)
      .def_property_readonly("param_count", &FcLstm<float>::param_count)
      .def("predict",
           [](FcLstm<float>& net, const py::array_t<float, py::array::c_style |
                                                               py::array::forcecast>& frames) {
             return frames_to_array(net.predict_sequence(frames_from_array(frames)));
           },
           py::arg("frames"))
      .def("train",
           [](FcLstm<float>& net, const SequenceDataset& ds, int epochs, int batch, double lr,
              std::uint64_t seed, double teacher_forcing, int window_stride, double grad_clip) {
             return train_model(net, ds, epochs, batch, lr, seed, teacher_forcing, window_stride,
                                grad_clip);
           },
           py::arg("dataset"), py::arg("epochs") = 1, py::arg("batch") = 8,
           py::arg("lr") = 0.001, py::arg("seed") = 0, py::arg("teacher_forcing") = -1.0,
           py::arg("window_stride") = 5, py::arg("grad_clip") = 0.0)
      .def("evaluate",
           [](FcLstm<float>& net, const SequenceDataset& ds, const std::string& split,
              int window_stride) { return evaluate_model(net, ds, split, window_stride); },
           py::arg("dataset"), py::arg("split") = "test", py::arg("window_stride") = 1)
      .def("save", [](FcLstm<float>& net, const std::string& path) {
        RmsProp<float> opt;
        save_checkpoint(net, opt, {0, 0}, path);
      });

  m.def("load_model", [](const std::string& path) -> py::object {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.promnet) return py::cast(std::move(*ck.promnet));
    return py::cast(std::move(*ck.fclstm));
  });

  m.def(
      "psnr",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& b, double max_val) {
        return psnr(frame_from_array(a), frame_from_array(b), max_val);
      },
      py::arg("a"), py::arg("b"), py::arg("max_val") = 1.0);

  m.def("ssim",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
          return ssim(frame_from_array(a), frame_from_array(b));
        },
        py::arg("a"), py::arg("b"));

  m.def("gradcheck",
        [](const std::string& only) {
          py::list out;
          for (const auto& o : run_gradcheck(only)) {
            py::dict d;
            d["name"] = o.name;
            d["max_rel_error"] = o.max_rel_error;
            d["threshold"] = o.threshold;
            d["passed"] = o.passed;
            out.append(d);
          }
          return out;
        },
        py::arg("only") = std::string());
}
