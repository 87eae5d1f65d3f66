#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promnet/tensor.hpp"

namespace promnet {

struct PgmImage {
  int w = 0, h = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Binary PGM (P5) with maxval <= 255 only.
PgmImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, int w, int h, const std::uint8_t* pixels);

// [0,1] float plane -> 8-bit PGM.
void write_pgm_frame(const std::string& path, const Tensor& frame);

// Area-average resample of an 8-bit plane; result stays in [0,1] floats.
Tensor downsample_area(const PgmImage& img, int target_h, int target_w);

// Reads every *.pgm in the directory in lexicographic order, requires
// consistent source dimensions, and resamples each frame to target size.
// Returns [1,1,target_h,target_w] tensors scaled to [0,1].
std::vector<Tensor> import_frames(const std::string& directory, int target_h, int target_w);

}  // namespace promnet
