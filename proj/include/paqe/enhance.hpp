#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "paqe/common.hpp"
#include "paqe/frame.hpp"
#include "paqe/meta.hpp"
#include "paqe/nn.hpp"
#include "paqe/tensor.hpp"

namespace paqe {

// The three deployed networks: prediction-aware models for intra and inter
// blocks (inputs [P, C, Q]) and a prediction-unaware one for skip blocks
// (inputs [C, Q]).
struct ModelTriple {
  QENetwork intra;
  QENetwork inter;
  QENetwork unaware;

  void validate() const {
    if (intra.in_channels != 3 || inter.in_channels != 3)
      throw contract_error("ModelTriple: intra/inter models need 3 input channels");
    if (unaware.in_channels != 2)
      throw contract_error("ModelTriple: unaware model needs 2 input channels");
  }
};

constexpr float kSampleScale = 1023.0f;

inline float normalize_sample(std::uint16_t s) {
  return static_cast<float>(s) / kSampleScale;
}

// Clamp to [0,1], scale back to 10 bits, round half-up.
inline std::uint16_t denormalize_sample(float v) {
  float c = v;
  if (c < 0.0f) c = 0.0f;
  if (c > 1.0f) c = 1.0f;
  return static_cast<std::uint16_t>(
      std::floor(static_cast<double>(c) * 1023.0 + 0.5));
}

// Stacks the network input: channel order [P, C, Q] when a prediction plane
// is given, [C, Q] otherwise. Pixel channels are divided by 1023; the QP map
// is already normalized.
inline Tensor assemble_input(const Plane& recon, const Plane* pred,
                             const QPMap& qp_map) {
  if (qp_map.width != recon.width || qp_map.height != recon.height)
    throw contract_error("assemble_input: qp map dimensions differ from recon");
  if (pred && (pred->width != recon.width || pred->height != recon.height))
    throw contract_error("assemble_input: pred dimensions differ from recon");
  const int ch = pred ? 3 : 2;
  Tensor t(1, ch, recon.height, recon.width);
  std::size_t pos = 0;
  if (pred)
    for (std::uint16_t s : pred->samples) t.data[pos++] = normalize_sample(s);
  for (std::uint16_t s : recon.samples) t.data[pos++] = normalize_sample(s);
  for (float q : qp_map.values) t.data[pos++] = q;
  return t;
}

inline Plane tensor_to_plane(const Tensor& t) {
  if (t.n != 1 || t.c != 1)
    throw contract_error("tensor_to_plane: expected shape (1,1,H,W), got " +
                         t.shape_str());
  Plane p(t.w, t.h);
  for (std::size_t i = 0; i < p.samples.size(); ++i)
    p.samples[i] = denormalize_sample(t.data[i]);
  return p;
}

// Full-frame inference with one model.
inline Plane enhance_full_plane(QENetwork& net, const Plane& recon,
                                const Plane* pred, const QPMap& qp_map) {
  if ((net.in_channels == 3) != (pred != nullptr))
    throw contract_error("enhance: model arity does not match inputs (" +
                         std::to_string(net.in_channels) + " channels, pred " +
                         std::string(pred ? "present" : "absent") + ")");
  Tensor in = assemble_input(recon, pred, qp_map);
  return tensor_to_plane(net.forward(in, NetMode::INFER));
}

// Whole-frame enhancement for intra frames: one pass of the intra model.
inline Plane enhance_intra_frame(ModelTriple& models, const Plane& recon,
                                 const Plane& pred, const QPMap& qp_map) {
  models.validate();
  return enhance_full_plane(models.intra, recon, &pred, qp_map);
}

namespace detail {

// Normalized patch covering [x0, x0+pw) x [y0, y0+ph). The rectangle must lie
// inside the frame: the halo is clipped at frame edges by the caller so that a
// patch edge coincides with the frame edge exactly where the full-frame pass
// would apply convolution zero padding. (Zero-filling out-of-frame pixels
// instead would not match: every layer of a full-frame pass re-pads at the
// frame edge, while zero-filled input pixels are treated as interior by later
// layers and accumulate bias/activation values that leak back into the block.)
inline Tensor assemble_patch(const Plane& recon, const Plane* pred,
                             const QPMap& qp_map, int x0, int y0, int pw,
                             int ph) {
  if (x0 < 0 || y0 < 0 || x0 + pw > recon.width || y0 + ph > recon.height)
    throw contract_error("assemble_patch: rectangle exits the frame");
  const int ch = pred ? 3 : 2;
  Tensor t(1, ch, ph, pw);
  auto fill = [&](int channel, auto&& value_at) {
    float* dst = t.data.data() + t.index(0, channel, 0, 0);
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        dst[static_cast<std::size_t>(y) * pw + x] = value_at(x0 + x, y0 + y);
  };
  int c = 0;
  if (pred)
    fill(c++, [&](int x, int y) { return normalize_sample(pred->at(x, y)); });
  fill(c++, [&](int x, int y) { return normalize_sample(recon.at(x, y)); });
  fill(c++, [&](int x, int y) { return qp_map.at(x, y); });
  return t;
}

inline QENetwork& model_for(ModelTriple& models, BlockType t) {
  switch (t) {
    case BlockType::INTRA: return models.intra;
    case BlockType::INTER: return models.inter;
    case BlockType::SKIP: return models.unaware;
  }
  throw contract_error("unknown block type in dispatch");
}

}  // namespace detail

// Block-level enhancement for inter frames: each block is enhanced with the
// model matching its coding type, extracting a halo of the network's
// receptive-field radius so the composition is pixel-identical to full-frame
// passes plus mask composition. `scale_shift` is 0 for luma, 1 for chroma
// (block geometry halves).
inline Plane enhance_inter_frame(ModelTriple& models, const Plane& recon,
                                 const Plane& pred, const QPMap& qp_map,
                                 const FrameMeta& meta, int scale_shift = 0) {
  models.validate();
  if (meta.frame_type != FrameType::B)
    throw contract_error("enhance_inter_frame: frame is not inter-coded");
  Plane out(recon.width, recon.height);
  for (const auto& b : meta.blocks) {
    const int bx = b.x >> scale_shift, by = b.y >> scale_shift;
    const int bw = b.w >> scale_shift, bh = b.h >> scale_shift;
    if (bw <= 0 || bh <= 0)
      throw contract_error("enhance_inter_frame: degenerate block after scaling");
    QENetwork& net = detail::model_for(models, b.block_type);
    const Plane* p = net.in_channels == 3 ? &pred : nullptr;
    const int r = net.receptive_field_radius();
    // Clip the halo at frame edges so the patch edge lines up with where the
    // full-frame pass zero-pads; elsewhere the full halo keeps the block
    // outside the reach of the patch-edge padding.
    const int x0 = std::max(0, bx - r), y0 = std::max(0, by - r);
    const int x1 = std::min(recon.width, bx + bw + r);
    const int y1 = std::min(recon.height, by + bh + r);
    Tensor patch =
        detail::assemble_patch(recon, p, qp_map, x0, y0, x1 - x0, y1 - y0);
    const Tensor o = net.forward(patch, NetMode::INFER);
    for (int y = 0; y < bh; ++y)
      for (int x = 0; x < bw; ++x)
        out.at(bx + x, by + y) = denormalize_sample(
            o.data[o.index(0, 0, by + y - y0, bx + x - x0)]);
  }
  return out;
}

// Frame-level alternative (the equivalence oracle): one full-frame pass per
// model, composed per pixel by the block-type mask.
inline Plane enhance_inter_frame_framewise(ModelTriple& models,
                                           const Plane& recon, const Plane& pred,
                                           const QPMap& qp_map,
                                           const FrameMeta& meta,
                                           int scale_shift = 0) {
  models.validate();
  const Plane by_intra = enhance_full_plane(models.intra, recon, &pred, qp_map);
  const Plane by_inter = enhance_full_plane(models.inter, recon, &pred, qp_map);
  const Plane by_skip = enhance_full_plane(models.unaware, recon, nullptr, qp_map);
  Plane out(recon.width, recon.height);
  for (const auto& b : meta.blocks) {
    const int bx = b.x >> scale_shift, by = b.y >> scale_shift;
    const int bw = b.w >> scale_shift, bh = b.h >> scale_shift;
    const Plane& src = b.block_type == BlockType::INTRA   ? by_intra
                       : b.block_type == BlockType::INTER ? by_inter
                                                          : by_skip;
    for (int y = by; y < by + bh; ++y)
      for (int x = bx; x < bx + bw; ++x) out.at(x, y) = src.at(x, y);
  }
  return out;
}

// Chroma QP map: per-pixel copy of the co-located luma value (QP is constant
// per block, so this equals building the map from halved block geometry).
inline QPMap chroma_qp_map(const QPMap& luma) {
  QPMap map(luma.width / 2, luma.height / 2);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      map.values[static_cast<std::size_t>(y) * map.width + x] =
          luma.at(2 * x, 2 * y);
  return map;
}

// Routes one plane (luma or chroma) through the intra or inter path.
inline Plane enhance_plane(ModelTriple& models, const Plane& recon,
                           const Plane& pred, const QPMap& qp_map,
                           const FrameMeta& meta, int scale_shift) {
  if (meta.frame_type == FrameType::I)
    return enhance_intra_frame(models, recon, pred, qp_map);
  return enhance_inter_frame(models, recon, pred, qp_map, meta, scale_shift);
}

// Enhances all three planes with the same models; chroma runs at native half
// resolution with the chroma prediction plane and chroma QP map.
inline Frame420 enhance_frame420(ModelTriple& models, const Frame420& recon,
                                 const Frame420& pred, const FrameMeta& meta) {
  if (recon.width() != pred.width() || recon.height() != pred.height())
    throw contract_error("enhance_frame420: recon/pred dimensions differ");
  const QPMap qy = build_qp_map(meta, recon.width(), recon.height());
  const QPMap qc = chroma_qp_map(qy);
  Frame420 out(recon.width(), recon.height(), recon.poc);
  out.y = enhance_plane(models, recon.y, pred.y, qy, meta, 0);
  out.u = enhance_plane(models, recon.u, pred.u, qc, meta, 1);
  out.v = enhance_plane(models, recon.v, pred.v, qc, meta, 1);
  return out;
}

// ---- Model file set ----

inline void save_model_triple(ModelTriple& models, const std::string& dir) {
  save_weights(models.intra, dir + "/intra.paqe");
  save_weights(models.inter, dir + "/inter.paqe");
  save_weights(models.unaware, dir + "/unaware.paqe");
}

inline ModelTriple load_model_triple(const std::string& dir) {
  ModelTriple m;
  m.intra = load_weights(dir + "/intra.paqe");
  m.inter = load_weights(dir + "/inter.paqe");
  m.unaware = load_weights(dir + "/unaware.paqe");
  m.validate();
  return m;
}

}  // namespace paqe
