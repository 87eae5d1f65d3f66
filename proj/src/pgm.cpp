#include "promnet/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "promnet/binio.hpp"

namespace promnet {

namespace {

// Header tokens separated by whitespace; '#' starts a comment to end of line.
int next_header_int(ByteReader& r, const std::string& path) {
  for (;;) {
    std::uint8_t c = r.get_u8();
    if (c == '#') {
      while (r.get_u8() != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    int value = 0;
    bool any = false;
    while (std::isdigit(c)) {
      value = value * 10 + (c - '0');
      any = true;
      if (r.remaining() == 0) break;
      c = r.get_u8();
    }
    if (!any) throw std::runtime_error(path + ": malformed PGM header");
    return value;
  }
}

}  // namespace

PgmImage read_pgm(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes.data(), bytes.size(), path);
  if (r.remaining() < 2) throw std::runtime_error(path + ": not a PGM file");
  char m0 = static_cast<char>(r.get_u8());
  char m1 = static_cast<char>(r.get_u8());
  if (m0 != 'P' || m1 != '5')
    throw std::runtime_error(path + ": unsupported PGM format (expected binary P5)");
  PgmImage img;
  img.w = next_header_int(r, path);
  img.h = next_header_int(r, path);
  int maxval = next_header_int(r, path);
  if (img.w < 1 || img.h < 1) throw std::runtime_error(path + ": invalid PGM dimensions");
  if (maxval < 1 || maxval > 255)
    throw std::runtime_error(path + ": unsupported PGM maxval " + std::to_string(maxval) +
                             " (expected <= 255)");
  // exactly one whitespace byte separates the header from the payload; it was
  // already consumed by the integer scanner above
  const std::size_t need = static_cast<std::size_t>(img.w) * img.h;
  const std::uint8_t* p = r.get_raw(need);
  img.pixels.assign(p, p + need);
  return img;
}

void write_pgm(const std::string& path, int w, int h, const std::uint8_t* pixels) {
  ByteWriter out;
  std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.put_bytes(header.data(), header.size());
  out.put_bytes(pixels, static_cast<std::size_t>(w) * h);
  write_file_bytes(path, out.bytes());
}

void write_pgm_frame(const std::string& path, const Tensor& frame) {
  require_rank(frame, 4, "write_pgm_frame", "frame");
  const int h = static_cast<int>(frame.dim(2)), w = static_cast<int>(frame.dim(3));
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    double q = std::floor(static_cast<double>(frame[static_cast<std::int64_t>(i)]) * 255.0 + 0.5);
    pixels[i] = static_cast<std::uint8_t>(q < 0.0 ? 0.0 : (q > 255.0 ? 255.0 : q));
  }
  write_pgm(path, w, h, pixels.data());
}

Tensor downsample_area(const PgmImage& img, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1)
    throw std::invalid_argument("downsample_area: target size must be positive");
  Tensor out({1, 1, target_h, target_w});
  const double sy = static_cast<double>(img.h) / target_h;
  const double sx = static_cast<double>(img.w) / target_w;
  for (int ty = 0; ty < target_h; ++ty) {
    const double y0 = ty * sy, y1 = (ty + 1) * sy;
    for (int tx = 0; tx < target_w; ++tx) {
      const double x0 = tx * sx, x1 = (tx + 1) * sx;
      double acc = 0.0;
      for (int yy = static_cast<int>(std::floor(y0)); yy < static_cast<int>(std::ceil(y1)); ++yy) {
        double wy = std::min<double>(yy + 1.0, y1) - std::max<double>(yy, y0);
        if (wy <= 0.0) continue;
        const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(yy) * img.w;
        for (int xx = static_cast<int>(std::floor(x0)); xx < static_cast<int>(std::ceil(x1));
             ++xx) {
          double wx = std::min<double>(xx + 1.0, x1) - std::max<double>(xx, x0);
          if (wx <= 0.0) continue;
          acc += wy * wx * static_cast<double>(row[xx]);
        }
      }
      out.at4(0, 0, ty, tx) = static_cast<float>(acc / (sy * sx) / 255.0);
    }
  }
  return out;
}

std::vector<Tensor> import_frames(const std::string& directory, int target_h, int target_w) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw std::runtime_error("import_frames: " + directory + " is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext == ".pgm") paths.push_back(entry.path().string());
  }
  if (paths.empty()) throw std::runtime_error("import_frames: no .pgm files in " + directory);
  std::sort(paths.begin(), paths.end());

  std::vector<Tensor> frames;
  frames.reserve(paths.size());
  int ref_w = 0, ref_h = 0;
  for (const std::string& p : paths) {
    PgmImage img = read_pgm(p);
    if (frames.empty()) {
      ref_w = img.w;
      ref_h = img.h;
    } else if (img.w != ref_w || img.h != ref_h) {
      throw std::runtime_error("import_frames: " + p + " is " + std::to_string(img.w) + "x" +
                               std::to_string(img.h) + " but earlier frames are " +
                               std::to_string(ref_w) + "x" + std::to_string(ref_h));
    }
    frames.push_back(downsample_area(img, target_h, target_w));
  }
  return frames;
}

}  // namespace promnet
