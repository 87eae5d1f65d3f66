#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promnet/tensor.hpp"

namespace promnet {

struct SequenceMeta {
  std::string family;
  std::string depth;
  std::uint64_t seed = 0;
  double goal_x = 0.0, goal_y = 0.0;
  std::string split;  // "train" | "test"
};

// Fixed-length grayscale sequences, 8-bit pixels, with per-sequence metadata.
struct SequenceDataset {
  std::uint32_t t = 0, h = 0, w = 0;
  std::vector<std::vector<std::uint8_t>> frames;  // [S], each t*h*w bytes
  std::vector<SequenceMeta> meta;

  std::size_t size() const { return frames.size(); }
  const std::uint8_t* frame(std::size_t s, std::uint32_t step) const {
    return frames[s].data() + static_cast<std::size_t>(step) * h * w;
  }
  // Frame as a [1,1,h,w] tensor with pixels scaled to [0,1].
  Tensor frame_tensor(std::size_t s, std::uint32_t step) const;
  std::vector<std::size_t> split_indices(const std::string& split) const;
  void validate() const;
};

struct DatasetHeader {
  std::uint32_t s = 0, t = 0, h = 0, w = 0;
  std::uint8_t dtype = 0;
};

// PRDS container: "PRDS" magic, u32 version, u32 S/T/H/W, u8 dtype (0 = u8
// grayscale), length-prefixed UTF-8 metadata records (one per sequence),
// frame payload in [s][t][h][w] order, trailing CRC32.
void write_dataset(const SequenceDataset& ds, const std::string& path);
SequenceDataset read_dataset(const std::string& path);
// Reads S/T/H/W/dtype without touching metadata or payload.
DatasetHeader read_dataset_header(const std::string& path);

}  // namespace promnet
