#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "paqe/common.hpp"
#include "paqe/frame.hpp"

namespace paqe {

struct SynthParams {
  int width = 64;
  int height = 64;
  int frames = 17;
  std::uint64_t seed = 1;
  int num_boxes = 3;       // moving rectangles on top of the gradient
  double noise_amp = 6.0;  // peak-to-peak texture noise in sample units
  double motion = 1.5;     // box speed in pixels per frame
};

// Deterministic test clip: smooth drifting gradients, a few moving boxes,
// and mild per-pixel texture. Gives the encoder intra structure, trackable
// motion, and static areas that code as skip.
inline std::vector<Frame420> synthesize_clip(const SynthParams& p) {
  if (p.width < 2 || p.height < 2 || p.width % 2 != 0 || p.height % 2 != 0)
    throw contract_error("synthesize_clip: dimensions must be even and >= 2");
  if (p.frames < 1) throw contract_error("synthesize_clip: need >= 1 frame");
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Box {
    double x, y, vx, vy;
    int w, h;
    int value;
  };
  std::vector<Box> boxes;
  for (int i = 0; i < p.num_boxes; ++i) {
    Box b;
    b.w = 6 + static_cast<int>(unit(rng) * p.width / 4);
    b.h = 6 + static_cast<int>(unit(rng) * p.height / 4);
    b.x = unit(rng) * (p.width - b.w);
    b.y = unit(rng) * (p.height - b.h);
    const double ang = unit(rng) * 2.0 * M_PI;
    b.vx = p.motion * std::cos(ang);
    b.vy = p.motion * std::sin(ang);
    b.value = 150 + static_cast<int>(unit(rng) * 700);
    boxes.push_back(b);
  }
  const double phase_x = unit(rng) * 2.0 * M_PI;
  const double phase_y = unit(rng) * 2.0 * M_PI;

  // Static texture field, shared across frames so still areas really are
  // still (and can code as skip).
  std::vector<double> texture(static_cast<std::size_t>(p.width) * p.height);
  for (auto& t : texture) t = (unit(rng) - 0.5) * p.noise_amp;

  std::vector<Frame420> clip;
  clip.reserve(static_cast<std::size_t>(p.frames));
  for (int t = 0; t < p.frames; ++t) {
    Frame420 frame(p.width, p.height, t);
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) {
        double v = 420.0 +
                   260.0 * std::sin(2.0 * M_PI * x / p.width + phase_x) +
                   200.0 * std::cos(2.0 * M_PI * y / p.height + phase_y) +
                   texture[static_cast<std::size_t>(y) * p.width + x];
        for (const auto& b : boxes) {
          const double bx = b.x + b.vx * t, by = b.y + b.vy * t;
          if (x >= bx && x < bx + b.w && y >= by && y < by + b.h) v = b.value;
        }
        frame.y.at(x, y) = static_cast<std::uint16_t>(
            std::clamp<long>(std::lround(v), 0, kMaxSample));
      }
    for (int y = 0; y < p.height / 2; ++y)
      for (int x = 0; x < p.width / 2; ++x) {
        frame.u.at(x, y) = static_cast<std::uint16_t>(std::clamp<long>(
            std::lround(512.0 + 120.0 * std::sin(2.0 * M_PI * x * 2 / p.width +
                                                 phase_y)),
            0, kMaxSample));
        frame.v.at(x, y) = static_cast<std::uint16_t>(std::clamp<long>(
            std::lround(512.0 - 100.0 * std::cos(2.0 * M_PI * y * 2 / p.height +
                                                 phase_x)),
            0, kMaxSample));
      }
    clip.push_back(std::move(frame));
  }
  return clip;
}

// Two identical frames: the setup for the multiple-enhancement chain.
inline std::vector<Frame420> synthesize_static_pair(int width, int height,
                                                    std::uint64_t seed) {
  SynthParams p;
  p.width = width;
  p.height = height;
  p.frames = 1;
  p.seed = seed;
  auto clip = synthesize_clip(p);
  Frame420 second = clip.front();
  second.poc = 1;
  clip.push_back(std::move(second));
  return clip;
}

}  // namespace paqe
