#include "promnet/checkpoint.hpp"

#include <cstring>

#include "json.hpp"
#include "promnet/binio.hpp"
#include "promnet/crc32.hpp"
#include "promnet/version.hpp"

namespace promnet {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kF32 = 0, kRaw = 2, kU64 = 3;

std::vector<std::uint8_t> f32_bytes(const Tensor& t) {
  ByteWriter w;
  for (float v : t.data) w.put_f32(v);
  return w.bytes();
}

std::vector<std::uint8_t> u64_bytes(std::uint64_t v) {
  ByteWriter w;
  w.put_u64(v);
  return w.bytes();
}

CheckpointEntry tensor_entry(const std::string& name, const Tensor& t) {
  CheckpointEntry e;
  e.name = name;
  e.dtype = kF32;
  for (std::int64_t d : t.shape) e.extents.push_back(static_cast<std::uint64_t>(d));
  e.bytes = f32_bytes(t);
  return e;
}

CheckpointEntry scalar_entry(const std::string& name, std::uint64_t v) {
  CheckpointEntry e;
  e.name = name;
  e.dtype = kU64;
  e.extents = {1};
  e.bytes = u64_bytes(v);
  return e;
}

void load_tensor(const CheckpointFile& ck, const std::string& name, Tensor& dst) {
  const CheckpointEntry* e = ck.find(name);
  if (!e) throw std::runtime_error("checkpoint is missing entry '" + name + "'");
  if (e->dtype != kF32)
    throw std::runtime_error("checkpoint entry '" + name + "' has dtype " +
                             std::to_string(e->dtype) + ", expected f32");
  std::vector<std::int64_t> shape;
  for (std::uint64_t d : e->extents) shape.push_back(static_cast<std::int64_t>(d));
  if (shape != dst.shape)
    throw std::runtime_error("checkpoint entry '" + name + "' has shape " + shape_str(shape) +
                             ", model expects " + shape_str(dst.shape));
  if (e->bytes.size() != static_cast<std::size_t>(dst.numel()) * 4)
    throw std::runtime_error("checkpoint entry '" + name + "' payload size mismatch");
  ByteReader r(e->bytes.data(), e->bytes.size(), "checkpoint entry " + name);
  for (float& v : dst.data) v = r.get_f32();
}

std::uint64_t load_scalar(const CheckpointFile& ck, const std::string& name) {
  const CheckpointEntry* e = ck.find(name);
  if (!e) throw std::runtime_error("checkpoint is missing entry '" + name + "'");
  if (e->dtype != kU64 || e->bytes.size() != 8)
    throw std::runtime_error("checkpoint entry '" + name + "' is not a u64 scalar");
  ByteReader r(e->bytes.data(), e->bytes.size(), "checkpoint entry " + name);
  return r.get_u64();
}

template <typename Net>
CheckpointFile build_checkpoint(Net& net, const RmsProp<float>& opt, const TrainerState& trainer,
                                const nlohmann::json& config) {
  CheckpointFile ck;
  CheckpointEntry cfg_entry;
  cfg_entry.name = "config";
  cfg_entry.dtype = kRaw;
  std::string dumped = config.dump();
  cfg_entry.extents = {static_cast<std::uint64_t>(dumped.size())};
  cfg_entry.bytes.assign(dumped.begin(), dumped.end());
  ck.entries.push_back(std::move(cfg_entry));
  ck.entries.push_back(scalar_entry("trainer.rng_state", trainer.rng_state));
  ck.entries.push_back(scalar_entry("trainer.epoch", trainer.epoch));

  auto params = net.params();
  for (const auto& p : params) ck.entries.push_back(tensor_entry("param." + p.name, *p.value));
  for (const auto& s : net.state_buffers())
    ck.entries.push_back(tensor_entry("stats." + s.name, *s.value));
  if (opt.initialized()) {
    const auto& ms = opt.accumulators();
    if (ms.size() != params.size())
      throw std::runtime_error("checkpoint: optimizer tracks a different parameter set");
    for (std::size_t i = 0; i < params.size(); ++i)
      ck.entries.push_back(tensor_entry("ms." + params[i].name, ms[i]));
  }
  return ck;
}

template <typename Net>
void restore_net(const CheckpointFile& ck, Net& net, RmsProp<float>& opt) {
  auto params = net.params();
  for (auto& p : params) load_tensor(ck, "param." + p.name, *p.value);
  for (auto& s : net.state_buffers()) load_tensor(ck, "stats." + s.name, *s.value);
  if (ck.find("ms." + params.front().name)) {
    opt.init(params);
    auto& ms = opt.accumulators();
    for (std::size_t i = 0; i < params.size(); ++i) load_tensor(ck, "ms." + params[i].name, ms[i]);
  }
}

}  // namespace

const CheckpointEntry* CheckpointFile::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void write_checkpoint_file(const CheckpointFile& ck, const std::string& path) {
  // table size first so payload offsets are known up front
  std::uint64_t table_size = 4;  // entry count
  for (const auto& e : ck.entries)
    table_size += 4 + e.name.size() + 1 + 1 + 8 * e.extents.size() + 8 + 8;
  const std::uint64_t header_size = 4 + 4 + 8;
  std::uint64_t payload_offset = header_size + table_size;

  ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put_u32(kVersion);
  w.put_u64(header_size);  // table offset
  w.put_u32(static_cast<std::uint32_t>(ck.entries.size()));
  std::uint64_t offset = payload_offset;
  for (const auto& e : ck.entries) {
    w.put_string(e.name);
    w.put_u8(e.dtype);
    w.put_u8(static_cast<std::uint8_t>(e.extents.size()));
    for (std::uint64_t d : e.extents) w.put_u64(d);
    w.put_u64(offset);
    w.put_u64(static_cast<std::uint64_t>(e.bytes.size()));
    offset += e.bytes.size();
  }
  for (const auto& e : ck.entries) w.put_bytes(e.bytes.data(), e.bytes.size());
  std::uint32_t crc = crc32(w.bytes().data(), w.size());
  w.put_u32(crc);
  write_file_bytes(path, w.bytes());
}

CheckpointFile read_checkpoint_file(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 20)
    throw std::runtime_error("checkpoint " + path + ": truncated file (no room for header)");

  // structural walk first, so a cut file reports truncation rather than a
  // meaningless CRC failure; bit corruption is caught by the CRC afterwards
  ByteReader r(bytes.data(), bytes.size() - 4, "checkpoint " + path);
  char magic[4];
  std::memcpy(magic, r.get_raw(4), 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic (not a PRCK file)");
  std::uint32_t version = r.get_u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " +
                             std::to_string(version));
  std::uint64_t table_offset = r.get_u64();
  r.seek(static_cast<std::size_t>(table_offset));

  CheckpointFile ck;
  std::uint32_t count = r.get_u32();
  struct Loc {
    std::uint64_t offset, length;
  };
  std::vector<Loc> locs(count);
  ck.entries.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry& e = ck.entries[i];
    e.name = r.get_string();
    e.dtype = r.get_u8();
    std::uint8_t rank = r.get_u8();
    for (int d = 0; d < rank; ++d) e.extents.push_back(r.get_u64());
    locs[i].offset = r.get_u64();
    locs[i].length = r.get_u64();
    if (locs[i].offset + locs[i].length > bytes.size() - 4)
      throw std::runtime_error("checkpoint " + path + ": truncated file (entry '" + e.name +
                               "' payload extends past end of file)");
  }

  std::uint32_t stored_crc;
  {
    ByteReader tail(bytes.data() + bytes.size() - 4, 4, "checkpoint " + path);
    stored_crc = tail.get_u32();
  }
  if (stored_crc != crc32(bytes.data(), bytes.size() - 4))
    throw std::runtime_error("checkpoint " + path + ": CRC mismatch (file corrupt)");

  for (std::uint32_t i = 0; i < count; ++i) {
    r.seek(static_cast<std::size_t>(locs[i].offset));
    const std::uint8_t* p = r.get_raw(static_cast<std::size_t>(locs[i].length));
    ck.entries[i].bytes.assign(p, p + locs[i].length);
  }
  return ck;
}

void save_checkpoint(PromNet<float>& net, const RmsProp<float>& opt, const TrainerState& trainer,
                     const std::string& path) {
  const PromNetConfig& c = net.config();
  nlohmann::json config{
      {"model", "promnet"},
      {"engine_version", kEngineVersion},
      {"input_h", c.input_h},
      {"input_w", c.input_w},
      {"scale", c.scale},
      {"t_in", c.t_in},
      {"t_out", c.t_out},
      {"lstm_kernel", c.lstm_kernel},
      {"output_activation",
       c.output_activation == PromNetConfig::OutputActivation::sigmoid ? "sigmoid" : "relu_clamp"},
      {"lr", opt.hyper.lr},
      {"decay", opt.hyper.decay},
      {"eps", opt.hyper.eps},
  };
  write_checkpoint_file(build_checkpoint(net, opt, trainer, config), path);
}

void save_checkpoint(FcLstm<float>& net, const RmsProp<float>& opt, const TrainerState& trainer,
                     const std::string& path) {
  const FcLstmConfig& c = net.config();
  nlohmann::json config{
      {"model", "fclstm"},   {"engine_version", kEngineVersion},
      {"input_h", c.input_h}, {"input_w", c.input_w},
      {"hidden", c.hidden_size()}, {"t_in", c.t_in},
      {"t_out", c.t_out},    {"scale", c.scale},
      {"lr", opt.hyper.lr},  {"decay", opt.hyper.decay},
      {"eps", opt.hyper.eps},
  };
  write_checkpoint_file(build_checkpoint(net, opt, trainer, config), path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  CheckpointFile ck = read_checkpoint_file(path);
  const CheckpointEntry* cfg = ck.find("config");
  if (!cfg) throw std::runtime_error("checkpoint " + path + ": missing config entry");
  nlohmann::json j = nlohmann::json::parse(cfg->bytes.begin(), cfg->bytes.end());

  LoadedCheckpoint out;
  out.config_json = j.dump();
  out.model_kind = j.at("model").get<std::string>();
  out.opt.hyper.lr = j.value("lr", 0.001);
  out.opt.hyper.decay = j.value("decay", 0.9);
  out.opt.hyper.eps = j.value("eps", 1e-8);
  out.trainer.rng_state = load_scalar(ck, "trainer.rng_state");
  out.trainer.epoch = load_scalar(ck, "trainer.epoch");

  if (out.model_kind == "promnet") {
    PromNetConfig c;
    c.input_h = j.at("input_h").get<std::int64_t>();
    c.input_w = j.at("input_w").get<std::int64_t>();
    c.scale = j.at("scale").get<double>();
    c.t_in = j.at("t_in").get<int>();
    c.t_out = j.at("t_out").get<int>();
    c.lstm_kernel = j.value("lstm_kernel", 5);
    c.output_activation = j.value("output_activation", "sigmoid") == std::string("relu_clamp")
                              ? PromNetConfig::OutputActivation::relu_clamp
                              : PromNetConfig::OutputActivation::sigmoid;
    out.promnet.emplace(c, 0);
    restore_net(ck, *out.promnet, out.opt);
  } else if (out.model_kind == "fclstm") {
    FcLstmConfig c;
    c.input_h = j.at("input_h").get<std::int64_t>();
    c.input_w = j.at("input_w").get<std::int64_t>();
    c.hidden = j.at("hidden").get<std::int64_t>();
    c.t_in = j.at("t_in").get<int>();
    c.t_out = j.at("t_out").get<int>();
    c.scale = j.value("scale", 1.0);
    out.fclstm.emplace(c, 0);
    restore_net(ck, *out.fclstm, out.opt);
  } else {
    throw std::runtime_error("checkpoint " + path + ": unknown model kind '" + out.model_kind +
                             "'");
  }
  return out;
}

std::vector<ParamRef<float>> LoadedCheckpoint::params() {
  return promnet ? promnet->params() : fclstm->params();
}

std::vector<Tensor> LoadedCheckpoint::predict(const std::vector<Tensor>& frames) {
  return promnet ? promnet->predict_sequence(frames) : fclstm->predict_sequence(frames);
}

int LoadedCheckpoint::t_in() const { return promnet ? promnet->config().t_in : fclstm->config().t_in; }
int LoadedCheckpoint::t_out() const {
  return promnet ? promnet->config().t_out : fclstm->config().t_out;
}
std::int64_t LoadedCheckpoint::frame_h() const {
  return promnet ? promnet->config().input_h : fclstm->config().input_h;
}
std::int64_t LoadedCheckpoint::frame_w() const {
  return promnet ? promnet->config().input_w : fclstm->config().input_w;
}

}  // namespace promnet
