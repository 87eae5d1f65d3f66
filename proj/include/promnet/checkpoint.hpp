#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promnet/model.hpp"
#include "promnet/optimizer.hpp"

namespace promnet {

// PRCK container: "PRCK" magic, u32 version, u64 table offset, entry table
// (name, dtype, rank, extents, payload offset/length), payload blobs, and a
// trailing CRC32 over everything before it. dtype codes: 0 f32, 1 f64,
// 2 raw bytes, 3 u64.
struct CheckpointEntry {
  std::string name;
  std::uint8_t dtype = 0;
  std::vector<std::uint64_t> extents;
  std::vector<std::uint8_t> bytes;
};

struct CheckpointFile {
  std::vector<CheckpointEntry> entries;  // order is preserved on disk

  const CheckpointEntry* find(const std::string& name) const;
};

void write_checkpoint_file(const CheckpointFile& ck, const std::string& path);
CheckpointFile read_checkpoint_file(const std::string& path);

struct TrainerState {
  std::uint64_t rng_state = 0;
  std::uint64_t epoch = 0;
};

void save_checkpoint(PromNet<float>& net, const RmsProp<float>& opt, const TrainerState& trainer,
                     const std::string& path);
void save_checkpoint(FcLstm<float>& net, const RmsProp<float>& opt, const TrainerState& trainer,
                     const std::string& path);

struct LoadedCheckpoint {
  std::string model_kind;  // "promnet" | "fclstm"
  std::optional<PromNet<float>> promnet;
  std::optional<FcLstm<float>> fclstm;
  RmsProp<float> opt;
  TrainerState trainer;
  std::string config_json;

  std::vector<ParamRef<float>> params();
  std::vector<TensorT<float>> predict(const std::vector<TensorT<float>>& frames);
  int t_in() const;
  int t_out() const;
  std::int64_t frame_h() const;
  std::int64_t frame_w() const;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace promnet
