#include "promnet/dataset.hpp"

#include <cstring>

#include "json.hpp"
#include "promnet/binio.hpp"
#include "promnet/crc32.hpp"

namespace promnet {

namespace {
constexpr char kMagic[4] = {'P', 'R', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kU8Gray = 0;
}  // namespace

Tensor SequenceDataset::frame_tensor(std::size_t s, std::uint32_t step) const {
  Tensor out({1, 1, static_cast<std::int64_t>(h), static_cast<std::int64_t>(w)});
  const std::uint8_t* src = frame(s, step);
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = static_cast<float>(src[i]) / 255.0f;
  return out;
}

std::vector<std::size_t> SequenceDataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < meta.size(); ++i)
    if (meta[i].split == split) out.push_back(i);
  return out;
}

void SequenceDataset::validate() const {
  if (frames.empty()) throw std::invalid_argument("dataset: needs at least one sequence");
  if (meta.size() != frames.size())
    throw std::invalid_argument("dataset: " + std::to_string(meta.size()) + " metadata records vs " +
                                std::to_string(frames.size()) + " sequences");
  const std::size_t expect = static_cast<std::size_t>(t) * h * w;
  for (const auto& f : frames)
    if (f.size() != expect)
      throw std::invalid_argument("dataset: sequence byte size " + std::to_string(f.size()) +
                                  " does not match " + std::to_string(t) + "x" +
                                  std::to_string(h) + "x" + std::to_string(w));
}

void write_dataset(const SequenceDataset& ds, const std::string& path) {
  ds.validate();
  ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put_u32(kVersion);
  w.put_u32(static_cast<std::uint32_t>(ds.size()));
  w.put_u32(ds.t);
  w.put_u32(ds.h);
  w.put_u32(ds.w);
  w.put_u8(kU8Gray);
  for (const auto& m : ds.meta) {
    nlohmann::json rec{{"family", m.family}, {"depth", m.depth},       {"seed", m.seed},
                       {"goal", {m.goal_x, m.goal_y}}, {"split", m.split}};
    w.put_string(rec.dump());
  }
  for (const auto& f : ds.frames) w.put_bytes(f.data(), f.size());
  std::uint32_t crc = crc32(w.bytes().data(), w.size());
  w.put_u32(crc);
  write_file_bytes(path, w.bytes());
}

namespace {
DatasetHeader parse_header(ByteReader& r, const std::string& path) {
  char magic[4];
  std::memcpy(magic, r.get_raw(4), 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("dataset " + path + ": bad magic (not a PRDS file)");
  std::uint32_t version = r.get_u32();
  if (version != kVersion)
    throw std::runtime_error("dataset " + path + ": unsupported version " +
                             std::to_string(version));
  DatasetHeader h;
  h.s = r.get_u32();
  h.t = r.get_u32();
  h.h = r.get_u32();
  h.w = r.get_u32();
  h.dtype = r.get_u8();
  if (h.dtype != kU8Gray)
    throw std::runtime_error("dataset " + path + ": unsupported dtype code " +
                             std::to_string(h.dtype));
  return h;
}
}  // namespace

DatasetHeader read_dataset_header(const std::string& path) {
  std::vector<std::uint8_t> head = read_file_bytes(path);
  ByteReader r(head.data(), head.size(), "dataset " + path);
  return parse_header(r, path);
}

SequenceDataset read_dataset(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 25)
    throw std::runtime_error("dataset " + path + ": truncated file (no room for header)");

  // structural walk first (a cut file reports truncation), CRC before any
  // semantic parsing, payload copy last
  ByteReader r(bytes.data(), bytes.size() - 4, "dataset " + path);
  DatasetHeader h = parse_header(r, path);
  std::vector<std::string> records;
  records.reserve(h.s);
  for (std::uint32_t i = 0; i < h.s; ++i) records.push_back(r.get_string());
  const std::size_t frame_bytes = static_cast<std::size_t>(h.t) * h.h * h.w;
  if (r.pos() + static_cast<std::size_t>(h.s) * frame_bytes > bytes.size() - 4)
    throw std::runtime_error("dataset " + path + ": truncated file (frame payload cut short)");

  std::uint32_t stored_crc;
  {
    ByteReader tail(bytes.data() + bytes.size() - 4, 4, "dataset " + path);
    stored_crc = tail.get_u32();
  }
  if (stored_crc != crc32(bytes.data(), bytes.size() - 4))
    throw std::runtime_error("dataset " + path + ": CRC mismatch over header+metadata+frames");

  SequenceDataset ds;
  ds.t = h.t;
  ds.h = h.h;
  ds.w = h.w;
  ds.meta.reserve(h.s);
  for (std::uint32_t i = 0; i < h.s; ++i) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(records[i]);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("dataset " + path + ": metadata record " + std::to_string(i) +
                               " is not valid JSON: " + e.what());
    }
    SequenceMeta m;
    m.family = j.at("family").get<std::string>();
    m.depth = j.at("depth").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.goal_x = j.at("goal")[0].get<double>();
    m.goal_y = j.at("goal")[1].get<double>();
    m.split = j.at("split").get<std::string>();
    ds.meta.push_back(std::move(m));
  }
  ds.frames.reserve(h.s);
  for (std::uint32_t i = 0; i < h.s; ++i) {
    const std::uint8_t* p = r.get_raw(frame_bytes);
    ds.frames.emplace_back(p, p + frame_bytes);
  }
  ds.validate();
  return ds;
}

}  // namespace promnet
