#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "paqe/common.hpp"

namespace paqe {

constexpr int kBitDepth = 10;
constexpr std::uint16_t kMaxSample = 1023;

// One 10-bit component raster. Samples live in [0, 1023].
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;

  Plane() = default;
  Plane(int w, int h, std::uint16_t fill = 0)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

  std::uint16_t at(int x, int y) const {
    return samples[static_cast<std::size_t>(y) * width + x];
  }
  std::uint16_t& at(int x, int y) {
    return samples[static_cast<std::size_t>(y) * width + x];
  }
  // Edge-clamped access, used by motion compensation near borders.
  std::uint16_t at_clamped(int x, int y) const {
    if (x < 0) x = 0;
    if (y < 0) y = 0;
    if (x >= width) x = width - 1;
    if (y >= height) y = height - 1;
    return at(x, y);
  }

  bool operator==(const Plane&) const = default;
};

// 10-bit 4:2:0 planar frame.
struct Frame420 {
  Plane y;
  Plane u;
  Plane v;
  int poc = 0;

  Frame420() = default;
  Frame420(int width, int height, int poc_ = 0, std::uint16_t fill = 0)
      : y(width, height, fill),
        u(width / 2, height / 2, fill),
        v(width / 2, height / 2, fill),
        poc(poc_) {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
      throw contract_error("Frame420: dimensions must be positive and even");
  }

  int width() const { return y.width; }
  int height() const { return y.height; }

  bool same_content(const Frame420& o) const {
    return y == o.y && u == o.u && v == o.v;
  }
};

namespace detail {
inline void check_plane_range(const Plane& p, const std::string& what) {
  for (std::uint16_t s : p.samples)
    if (s > kMaxSample)
      throw contract_error(what + ": sample " + std::to_string(s) +
                           " exceeds 10-bit range");
}
}  // namespace detail

inline std::size_t frame_byte_size(int width, int height) {
  // Y + U + V, two bytes per sample.
  return static_cast<std::size_t>(width) * height * 3;
}

// Raw planar reader: little-endian 16-bit words, low 10 bits significant,
// plane order Y, U, V per frame.
inline std::vector<Frame420> read_raw_video(const std::string& path, int width,
                                            int height) {
  if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
    throw contract_error("read_raw_video: dimensions must be positive and even");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("read_raw_video: cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::uint64_t size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  const std::size_t fsize = frame_byte_size(width, height);
  if (size % fsize != 0)
    throw format_error("read_raw_video: " + path + " size " +
                       std::to_string(size) +
                       " is not a multiple of the frame size " +
                       std::to_string(fsize));
  const std::size_t count = size / fsize;
  std::vector<Frame420> frames;
  frames.reserve(count);
  std::vector<unsigned char> buf(fsize);
  for (std::size_t f = 0; f < count; ++f) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(fsize));
    if (!in) throw io_error("read_raw_video: short read on " + path);
    Frame420 frame(width, height, static_cast<int>(f));
    std::size_t pos = 0;
    for (Plane* p : {&frame.y, &frame.u, &frame.v}) {
      for (auto& s : p->samples) {
        s = static_cast<std::uint16_t>(buf[pos] | (buf[pos + 1] << 8));
        pos += 2;
        if (s > kMaxSample)
          throw format_error("read_raw_video: sample " + std::to_string(s) +
                             " exceeds 10-bit range in " + path);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline std::uint64_t write_raw_video(const std::vector<Frame420>& frames,
                                     const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("write_raw_video: cannot open " + path);
  if (frames.empty()) return 0;
  const int w = frames.front().width();
  const int h = frames.front().height();
  std::uint64_t written = 0;
  std::vector<unsigned char> buf;
  for (const auto& frame : frames) {
    if (frame.width() != w || frame.height() != h)
      throw contract_error("write_raw_video: mixed frame dimensions");
    detail::check_plane_range(frame.y, "write_raw_video");
    detail::check_plane_range(frame.u, "write_raw_video");
    detail::check_plane_range(frame.v, "write_raw_video");
    buf.clear();
    for (const Plane* p : {&frame.y, &frame.u, &frame.v}) {
      for (std::uint16_t s : p->samples) {
        buf.push_back(static_cast<unsigned char>(s & 0xff));
        buf.push_back(static_cast<unsigned char>(s >> 8));
      }
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    written += buf.size();
  }
  if (!out) throw io_error("write_raw_video: write failed on " + path);
  return written;
}

}  // namespace paqe
