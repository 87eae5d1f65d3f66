#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace promnet {

// Little-endian byte packing shared by the checkpoint and dataset containers.

class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(v); }
  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void put_f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  }
  void put_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(bits);
  }
  void put_bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + len);
  }
  void put_string(const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  void patch_u64(std::size_t offset, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_[offset + static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(v >> (8 * i));
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t len, std::string what)
      : data_(data), len_(len), what_(std::move(what)) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return len_ - pos_; }
  void seek(std::size_t p) {
    if (p > len_) throw truncated(p - len_);
    pos_ = p;
  }

  std::uint8_t get_u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  float get_f32() {
    std::uint32_t bits = get_u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double get_f64() {
    std::uint64_t bits = get_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string get_string() {
    std::uint32_t n = get_u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  const std::uint8_t* get_raw(std::size_t n) {
    need(n);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::runtime_error truncated(std::size_t missing) const {
    return std::runtime_error(what_ + ": truncated file, " + std::to_string(missing) +
                              " bytes missing at offset " + std::to_string(pos_));
  }
  void need(std::size_t n) {
    if (pos_ + n > len_) throw truncated(pos_ + n - len_);
  }

  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
  std::string what_;
};

// Whole-file helpers; both throw std::runtime_error with the path on failure.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace promnet
