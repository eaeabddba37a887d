#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paqe/common.hpp"
#include "paqe/frame.hpp"
#include "paqe/meta.hpp"

namespace paqe {

struct EncoderConfig {
  int block_size = 16;
  int gop_size = 16;
  int intra_period = 0;  // 0: only the first frame is intra
  int base_qp = 32;
  std::vector<int> layer_qp_offsets = {-4, -2, 0, 1, 2};
  int search_range = 8;
  double lambda_scale = 0.4668;  // lambda(40) lands on ~301

  void validate() const {
    if (block_size < 2 || block_size % 2 != 0)
      throw contract_error("block_size must be even and >= 2");
    if (gop_size < 2 || (gop_size & (gop_size - 1)) != 0)
      throw contract_error("gop_size must be a power of two >= 2");
    if (base_qp < kQpMin || base_qp > kQpMax)
      throw contract_error("base_qp out of [1,63]");
    if (search_range < 0) throw contract_error("search_range must be >= 0");
    if (layer_qp_offsets.empty())
      throw contract_error("layer_qp_offsets must not be empty");
  }
};

inline double lambda_of_qp(int qp, double scale = 1.0) {
  if (qp < kQpMin || qp > kQpMax)
    throw contract_error("lambda_of_qp: qp out of [1,63]");
  return scale * std::exp2((qp - 12) / 3.0);
}

inline double quant_step(int qp) { return std::exp2((qp - 4) / 6.0); }

struct RDDecision {
  int mode = 0;
  double distortion = 0.0;
  double rate = 0.0;
  double cost = 0.0;  // distortion + lambda * rate
};

enum IntraMode { INTRA_DC = 0, INTRA_PLANAR, INTRA_HOR, INTRA_VER, INTRA_DIAG };
constexpr int kIntraModeCount = 5;
constexpr int kIntraModeBits = 3;

struct IntraNeighbors {
  std::vector<std::uint16_t> top;   // reconstructed row above the block
  std::vector<std::uint16_t> left;  // reconstructed column left of the block
  std::uint16_t top_left = 512;
  bool has_top = false;
  bool has_left = false;
  bool has_top_left = false;
};

constexpr int kMissingNeighborFill = 512;

inline IntraNeighbors gather_intra_neighbors(const Plane& recon, int x, int y,
                                             int w, int h) {
  IntraNeighbors nb;
  if (y > 0) {
    nb.has_top = true;
    nb.top.resize(static_cast<std::size_t>(w));
    for (int j = 0; j < w; ++j) nb.top[static_cast<std::size_t>(j)] = recon.at(x + j, y - 1);
  }
  if (x > 0) {
    nb.has_left = true;
    nb.left.resize(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) nb.left[static_cast<std::size_t>(i)] = recon.at(x - 1, y + i);
  }
  if (x > 0 && y > 0) {
    nb.has_top_left = true;
    nb.top_left = recon.at(x - 1, y - 1);
  }
  return nb;
}

// Prediction samples for one block, row-major w*h.
inline std::vector<int> intra_predict_block(const IntraNeighbors& nb, int mode,
                                            int w, int h) {
  std::vector<int> pred(static_cast<std::size_t>(w) * h, kMissingNeighborFill);
  auto top = [&nb](int j) -> int {
    return nb.has_top ? nb.top[static_cast<std::size_t>(j)] : kMissingNeighborFill;
  };
  auto left = [&nb](int i) -> int {
    return nb.has_left ? nb.left[static_cast<std::size_t>(i)] : kMissingNeighborFill;
  };
  switch (mode) {
    case INTRA_DC: {
      long long sum = 0;
      int count = 0;
      if (nb.has_top)
        for (int j = 0; j < w; ++j) { sum += top(j); ++count; }
      if (nb.has_left)
        for (int i = 0; i < h; ++i) { sum += left(i); ++count; }
      const int dc = count > 0
                         ? static_cast<int>((sum + count / 2) / count)
                         : kMissingNeighborFill;
      std::fill(pred.begin(), pred.end(), dc);
      break;
    }
    case INTRA_PLANAR: {
      if (!nb.has_top && !nb.has_left) break;
      if (!nb.has_left) {
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) pred[static_cast<std::size_t>(i) * w + j] = top(j);
        break;
      }
      if (!nb.has_top) {
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) pred[static_cast<std::size_t>(i) * w + j] = left(i);
        break;
      }
      const int tr = top(w - 1), bl = left(h - 1);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const long long hor =
              static_cast<long long>(w - 1 - j) * left(i) +
              static_cast<long long>(j + 1) * tr;
          const long long ver =
              static_cast<long long>(h - 1 - i) * top(j) +
              static_cast<long long>(i + 1) * bl;
          pred[static_cast<std::size_t>(i) * w + j] = static_cast<int>(
              (hor * h + ver * w + static_cast<long long>(w) * h) /
              (2LL * w * h));
        }
      break;
    }
    case INTRA_HOR:
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) pred[static_cast<std::size_t>(i) * w + j] = left(i);
      break;
    case INTRA_VER:
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) pred[static_cast<std::size_t>(i) * w + j] = top(j);
      break;
    case INTRA_DIAG:
      // 45-degree propagation from the top-left: pixel (i,j) copies the border
      // sample hit by stepping back along the diagonal.
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const int d = j - i;
          int v;
          if (d > 0)
            v = top(d - 1);
          else if (d < 0)
            v = left(-d - 1);
          else
            v = nb.has_top_left ? nb.top_left : kMissingNeighborFill;
          pred[static_cast<std::size_t>(i) * w + j] = v;
        }
      break;
    default:
      throw contract_error("intra_predict_block: unknown mode " + std::to_string(mode));
  }
  return pred;
}

// Spatial-domain uniform quantizer. Step 2^((qp-4)/6); levels round-to-nearest.
inline std::vector<std::int16_t> quantize_residual(const std::vector<int>& residual,
                                                   int qp) {
  const double step = quant_step(qp);
  std::vector<std::int16_t> levels(residual.size());
  for (std::size_t i = 0; i < residual.size(); ++i)
    levels[i] = static_cast<std::int16_t>(std::lround(residual[i] / step));
  return levels;
}

inline std::vector<double> dequantize(const std::vector<std::int16_t>& levels,
                                      int qp) {
  const double step = quant_step(qp);
  std::vector<double> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) out[i] = levels[i] * step;
  return out;
}

struct MotionResult {
  int dx = 0;
  int dy = 0;
  long long sad = 0;
};

// Integer-pel full search over [-range, range]^2 on edge-clamped reference
// samples. Ties fall to smaller |mv|_1, then to raster candidate order.
inline MotionResult motion_search(const Plane& cur, int x, int y, int w, int h,
                                  const Plane& ref, int range) {
  MotionResult best;
  best.sad = -1;
  for (int dy = -range; dy <= range; ++dy)
    for (int dx = -range; dx <= range; ++dx) {
      long long sad = 0;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          sad += std::abs(static_cast<int>(cur.at(x + j, y + i)) -
                          static_cast<int>(ref.at_clamped(x + j + dx, y + i + dy)));
      const int l1 = std::abs(dx) + std::abs(dy);
      if (best.sad < 0 || sad < best.sad ||
          (sad == best.sad && l1 < std::abs(best.dx) + std::abs(best.dy))) {
        best = {dx, dy, sad};
      }
    }
  return best;
}

// ---- GOP scheduling ----

struct GopEntry {
  int poc = 0;
  FrameType type = FrameType::B;
  int tid = 0;
  std::vector<int> ref_pocs;  // nearest lower-layer past (and future) frames
};

namespace detail {
inline void plan_interval(int lo, int hi, int depth, std::vector<GopEntry>& out) {
  if (hi - lo < 2) return;
  const int mid = (lo + hi) / 2;
  out.push_back({mid, FrameType::B, depth, {lo, hi}});
  plan_interval(lo, mid, depth + 1, out);
  plan_interval(mid, hi, depth + 1, out);
}
}  // namespace detail

// Encode-order plan: dyadic hierarchy anchored on key pictures every gop_size
// frames; intra frames at poc 0 and every intra_period when one is set.
inline std::vector<GopEntry> build_gop_plan(int frame_count,
                                            const EncoderConfig& cfg) {
  if (frame_count < 1) throw contract_error("build_gop_plan: need >= 1 frame");
  auto is_intra = [&cfg](int poc) {
    return poc == 0 || (cfg.intra_period > 0 && poc % cfg.intra_period == 0);
  };
  std::vector<GopEntry> plan;
  plan.push_back({0, FrameType::I, 0, {}});
  int prev_key = 0;
  while (prev_key < frame_count - 1) {
    const int key = std::min(prev_key + cfg.gop_size, frame_count - 1);
    if (is_intra(key))
      plan.push_back({key, FrameType::I, 0, {}});
    else
      plan.push_back({key, FrameType::B, 0, {prev_key}});
    detail::plan_interval(prev_key, key, 1, plan);
    prev_key = key;
  }
  return plan;
}

inline int qp_for_frame(const EncoderConfig& cfg, int tid) {
  const std::size_t idx =
      std::min<std::size_t>(static_cast<std::size_t>(tid),
                            cfg.layer_qp_offsets.size() - 1);
  return std::clamp(cfg.base_qp + cfg.layer_qp_offsets[idx], kQpMin, kQpMax);
}

// ---- Encoder ----

struct EncodeResult {
  std::vector<Frame420> recon;            // poc order, post-ILF when active
  std::vector<Frame420> pred;             // poc order
  std::vector<FrameMeta> meta;            // poc order
  std::vector<long long> rate_bits;       // per poc
  std::vector<std::int16_t> residuals;    // per non-skip block (Y,U,V), poc order
};

// Hook applied to the reconstructed frame before it enters the reference
// buffer: may replace `recon` with an enhanced version; returns the kept flag.
using IlfHook = std::function<bool(const FrameMeta&, const Frame420& pred, Frame420& recon)>;

namespace detail {

struct BlockCandidate {
  BlockType type = BlockType::INTRA;
  int intra_mode = -1;
  MotionInfo motion;
  double distortion = 0.0;
  double rate = 0.0;
  double cost = 0.0;
  std::vector<int> pred;                // luma prediction
  std::vector<std::int16_t> levels;     // luma levels (empty for skip)
};

inline std::vector<int> extract_block(const Plane& p, int x, int y, int w, int h) {
  std::vector<int> out(static_cast<std::size_t>(w) * h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      out[static_cast<std::size_t>(i) * w + j] = p.at(x + j, y + i);
  return out;
}

inline std::vector<int> mc_block(const Plane& ref, int x, int y, int w, int h,
                                 int dx, int dy) {
  std::vector<int> out(static_cast<std::size_t>(w) * h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      out[static_cast<std::size_t>(i) * w + j] = ref.at_clamped(x + j + dx, y + i + dy);
  return out;
}

inline std::vector<int> reconstruct_block(const std::vector<int>& pred,
                                          const std::vector<std::int16_t>& levels,
                                          int qp) {
  const double step = quant_step(qp);
  std::vector<int> recon(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const long v = std::lround(pred[i] + levels[i] * step);
    recon[i] = static_cast<int>(std::clamp<long>(v, 0, kMaxSample));
  }
  return recon;
}

inline double sse(const std::vector<int>& a, const std::vector<int>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline int nonzero_count(const std::vector<std::int16_t>& levels) {
  int n = 0;
  for (auto l : levels)
    if (l != 0) ++n;
  return n;
}

inline void store_block(Plane& p, int x, int y, int w, int h,
                        const std::vector<int>& values) {
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      p.at(x + j, y + i) =
          static_cast<std::uint16_t>(values[static_cast<std::size_t>(i) * w + j]);
}

}  // namespace detail

inline RDDecision rd_select_intra_mode(const std::vector<int>& orig,
                                       const IntraNeighbors& nb, int w, int h,
                                       int qp, double lambda) {
  RDDecision best;
  bool first = true;
  for (int mode = 0; mode < kIntraModeCount; ++mode) {
    const auto pred = intra_predict_block(nb, mode, w, h);
    std::vector<int> residual(orig.size());
    for (std::size_t i = 0; i < orig.size(); ++i) residual[i] = orig[i] - pred[i];
    const auto levels = quantize_residual(residual, qp);
    const auto recon = detail::reconstruct_block(pred, levels, qp);
    const double d = detail::sse(orig, recon);
    const double r = kIntraModeBits + detail::nonzero_count(levels) * 6 + 1;
    const double j = d + lambda * r;
    if (first || j < best.cost) {
      best = {mode, d, r, j};
      first = false;
    }
  }
  return best;
}

class ToyEncoder {
 public:
  ToyEncoder(EncoderConfig cfg, int width, int height)
      : cfg_(cfg), width_(width), height_(height) {
    cfg_.validate();
    if (width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0)
      throw contract_error("encoder: frame dimensions must be even");
  }

  EncodeResult encode(const std::vector<Frame420>& frames,
                      const IlfHook& hook = nullptr) const {
    if (frames.empty()) throw contract_error("encode: empty input");
    for (const auto& f : frames)
      if (f.width() != width_ || f.height() != height_)
        throw contract_error("encode: frame dimensions do not match config");
    const auto plan = build_gop_plan(static_cast<int>(frames.size()), cfg_);

    EncodeResult out;
    out.recon.assign(frames.size(), Frame420(width_, height_));
    out.pred.assign(frames.size(), Frame420(width_, height_));
    out.meta.resize(frames.size());
    out.rate_bits.assign(frames.size(), 0);
    std::vector<std::vector<std::int16_t>> residual_by_poc(frames.size());
    std::vector<bool> in_dpb(frames.size(), false);

    for (const auto& entry : plan) {
      for (int ref : entry.ref_pocs)
        if (!in_dpb[static_cast<std::size_t>(ref)])
          throw contract_error("encode: reference scheduled after dependent frame");
      encode_frame(frames[static_cast<std::size_t>(entry.poc)], entry, out,
                   residual_by_poc[static_cast<std::size_t>(entry.poc)]);
      Frame420& recon = out.recon[static_cast<std::size_t>(entry.poc)];
      FrameMeta& meta = out.meta[static_cast<std::size_t>(entry.poc)];
      if (hook)
        meta.ilf_flag = hook(meta, out.pred[static_cast<std::size_t>(entry.poc)], recon);
      in_dpb[static_cast<std::size_t>(entry.poc)] = true;
    }
    for (const auto& r : residual_by_poc)
      out.residuals.insert(out.residuals.end(), r.begin(), r.end());
    return out;
  }

  const EncoderConfig& config() const { return cfg_; }

 private:
  void encode_frame(const Frame420& orig, const GopEntry& entry,
                    EncodeResult& out, std::vector<std::int16_t>& residual) const {
    const int poc = entry.poc;
    const int qp = qp_for_frame(cfg_, entry.tid);
    const double lambda = lambda_of_qp(qp, cfg_.lambda_scale);
    Frame420& recon = out.recon[static_cast<std::size_t>(poc)];
    Frame420& pred = out.pred[static_cast<std::size_t>(poc)];
    FrameMeta& meta = out.meta[static_cast<std::size_t>(poc)];
    meta = FrameMeta{poc, entry.type, entry.tid, qp, false, {}};

    const int bs = cfg_.block_size;
    long long rate = 0;
    for (int by = 0; by < height_; by += bs)
      for (int bx = 0; bx < width_; bx += bs) {
        const int bw = std::min(bs, width_ - bx);
        const int bh = std::min(bs, height_ - by);
        const auto cand =
            choose_block(orig, out, entry, bx, by, bw, bh, qp, lambda, recon.y);
        apply_block(orig, out, entry, cand, bx, by, bw, bh, qp, recon, pred,
                    residual);
        BlockRecord rec;
        rec.x = bx;
        rec.y = by;
        rec.w = bw;
        rec.h = bh;
        rec.block_type = cand.type;
        rec.qp = qp;
        if (cand.type == BlockType::INTRA)
          rec.intra_mode = cand.intra_mode;
        else
          rec.motion = cand.motion;
        meta.blocks.push_back(rec);
        rate += static_cast<long long>(cand.rate);
      }
    out.rate_bits[static_cast<std::size_t>(poc)] = rate;
  }

  detail::BlockCandidate choose_block(const Frame420& orig, const EncodeResult& out,
                                      const GopEntry& entry, int bx, int by, int bw,
                                      int bh, int qp, double lambda,
                                      const Plane& recon_luma) const {
    const auto orig_blk = detail::extract_block(orig.y, bx, by, bw, bh);
    std::vector<detail::BlockCandidate> cands;

    {
      const auto nb = gather_intra_neighbors(recon_luma, bx, by, bw, bh);
      const RDDecision d = rd_select_intra_mode(orig_blk, nb, bw, bh, qp, lambda);
      detail::BlockCandidate c;
      c.type = BlockType::INTRA;
      c.intra_mode = d.mode;
      c.pred = intra_predict_block(nb, d.mode, bw, bh);
      std::vector<int> residual(orig_blk.size());
      for (std::size_t i = 0; i < orig_blk.size(); ++i)
        residual[i] = orig_blk[i] - c.pred[i];
      c.levels = quantize_residual(residual, qp);
      c.distortion = d.distortion;
      c.rate = d.rate;
      c.cost = d.cost;
      cands.push_back(std::move(c));
    }

    if (entry.type == FrameType::B) {
      for (int ref_poc : entry.ref_pocs) {
        const Plane& ref = out.recon[static_cast<std::size_t>(ref_poc)].y;
        const MotionResult mv =
            motion_search(orig.y, bx, by, bw, bh, ref, cfg_.search_range);
        auto mc = detail::mc_block(ref, bx, by, bw, bh, mv.dx, mv.dy);

        detail::BlockCandidate inter;
        inter.type = BlockType::INTER;
        inter.motion = {mv.dx, mv.dy, ref_poc};
        inter.pred = mc;
        std::vector<int> residual(orig_blk.size());
        for (std::size_t i = 0; i < orig_blk.size(); ++i)
          residual[i] = orig_blk[i] - mc[i];
        inter.levels = quantize_residual(residual, qp);
        const auto recon_blk = detail::reconstruct_block(mc, inter.levels, qp);
        inter.distortion = detail::sse(orig_blk, recon_blk);
        inter.rate = 3 + 2 * (std::abs(mv.dx) + std::abs(mv.dy)) + 1 +
                     detail::nonzero_count(inter.levels) * 6 + 1;
        inter.cost = inter.distortion + lambda * inter.rate;
        cands.push_back(std::move(inter));

        detail::BlockCandidate skip;
        skip.type = BlockType::SKIP;
        skip.motion = {mv.dx, mv.dy, ref_poc};
        skip.pred = std::move(mc);
        skip.distortion = detail::sse(orig_blk, skip.pred);
        skip.rate = 1;
        skip.cost = skip.distortion + lambda * skip.rate;
        cands.push_back(std::move(skip));
      }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
      if (cands[i].cost < cands[best].cost) best = i;
    return std::move(cands[best]);
  }

  void apply_block(const Frame420& orig, const EncodeResult& out,
                   const GopEntry& entry, const detail::BlockCandidate& cand,
                   int bx, int by, int bw, int bh, int qp, Frame420& recon,
                   Frame420& pred, std::vector<std::int16_t>& residual) const {
    // Luma
    const bool skip = cand.type == BlockType::SKIP;
    detail::store_block(pred.y, bx, by, bw, bh, cand.pred);
    if (skip) {
      detail::store_block(recon.y, bx, by, bw, bh, cand.pred);
    } else {
      const auto recon_blk = detail::reconstruct_block(cand.pred, cand.levels, qp);
      detail::store_block(recon.y, bx, by, bw, bh, recon_blk);
      residual.insert(residual.end(), cand.levels.begin(), cand.levels.end());
    }

    // Chroma follows the luma decision at half geometry.
    const int cx = bx / 2, cy = by / 2, cw = bw / 2, ch = bh / 2;
    for (int plane = 0; plane < 2; ++plane) {
      const Plane& orig_p = plane == 0 ? orig.u : orig.v;
      Plane& recon_p = plane == 0 ? recon.u : recon.v;
      Plane& pred_p = plane == 0 ? pred.u : pred.v;
      std::vector<int> cpred;
      if (cand.type == BlockType::INTRA) {
        const auto nb = gather_intra_neighbors(recon_p, cx, cy, cw, ch);
        cpred = intra_predict_block(nb, cand.intra_mode, cw, ch);
      } else {
        const Frame420& ref =
            out.recon[static_cast<std::size_t>(cand.motion.ref_poc)];
        const Plane& ref_p = plane == 0 ? ref.u : ref.v;
        cpred = detail::mc_block(ref_p, cx, cy, cw, ch, cand.motion.dx >> 1,
                                 cand.motion.dy >> 1);
      }
      detail::store_block(pred_p, cx, cy, cw, ch, cpred);
      if (skip) {
        detail::store_block(recon_p, cx, cy, cw, ch, cpred);
      } else {
        const auto orig_blk = detail::extract_block(orig_p, cx, cy, cw, ch);
        std::vector<int> res(orig_blk.size());
        for (std::size_t i = 0; i < orig_blk.size(); ++i)
          res[i] = orig_blk[i] - cpred[i];
        const auto levels = quantize_residual(res, qp);
        detail::store_block(recon_p, cx, cy, cw, ch,
                            detail::reconstruct_block(cpred, levels, qp));
        residual.insert(residual.end(), levels.begin(), levels.end());
      }
    }
    (void)entry;
  }

  EncoderConfig cfg_;
  int width_;
  int height_;
};

inline EncodeResult encode_sequence(const std::vector<Frame420>& frames,
                                    const EncoderConfig& cfg,
                                    const IlfHook& hook = nullptr) {
  if (frames.empty()) throw contract_error("encode_sequence: empty input");
  ToyEncoder enc(cfg, frames.front().width(), frames.front().height());
  return enc.encode(frames, hook);
}

// ---- Decoder: replays reconstruction from metadata + residual levels ----

namespace detail {
inline std::size_t block_level_count(const BlockRecord& b) {
  if (b.block_type == BlockType::SKIP) return 0;
  const std::size_t luma = static_cast<std::size_t>(b.w) * b.h;
  return luma + luma / 2;  // Y + U + V at quarter size each
}
}  // namespace detail

// `enhance` must reproduce the encoder-side ILF for frames carrying the flag.
using IlfReplay = std::function<void(const FrameMeta&, Frame420&)>;

inline std::vector<Frame420> decode_sequence(
    const std::vector<FrameMeta>& metas, const std::vector<std::int16_t>& residuals,
    int width, int height, const IlfReplay& enhance = nullptr) {
  // Residual slices are laid out per frame in poc order.
  std::vector<std::size_t> offset(metas.size() + 1, 0);
  for (std::size_t f = 0; f < metas.size(); ++f) {
    std::size_t n = 0;
    for (const auto& b : metas[f].blocks) n += detail::block_level_count(b);
    offset[f + 1] = offset[f] + n;
  }
  if (offset.back() != residuals.size())
    throw format_error("decode: residual stream has " +
                       std::to_string(residuals.size()) + " levels, metadata implies " +
                       std::to_string(offset.back()));

  std::vector<Frame420> recon(metas.size(), Frame420(width, height));
  std::vector<bool> decoded(metas.size(), false);
  std::map<int, std::size_t> poc_index;
  for (std::size_t f = 0; f < metas.size(); ++f) poc_index[metas[f].poc] = f;

  auto refs_ready = [&](const FrameMeta& m) {
    for (const auto& b : m.blocks)
      if (b.motion) {
        auto it = poc_index.find(b.motion->ref_poc);
        if (it == poc_index.end())
          throw format_error("decode: block references unknown poc " +
                             std::to_string(b.motion->ref_poc));
        if (!decoded[it->second]) return false;
      }
    return true;
  };

  std::size_t remaining = metas.size();
  while (remaining > 0) {
    bool progressed = false;
    for (std::size_t f = 0; f < metas.size(); ++f) {
      if (decoded[f] || !refs_ready(metas[f])) continue;
      const FrameMeta& meta = metas[f];
      Frame420& frame = recon[f];
      frame.poc = meta.poc;
      std::size_t pos = offset[f];
      for (const auto& b : meta.blocks) {
        const int cx = b.x / 2, cy = b.y / 2, cw = b.w / 2, ch = b.h / 2;
        std::vector<int> pred_y, pred_u, pred_v;
        if (b.block_type == BlockType::INTRA) {
          if (!b.intra_mode) throw format_error("decode: intra block without mode");
          pred_y = intra_predict_block(
              gather_intra_neighbors(frame.y, b.x, b.y, b.w, b.h), *b.intra_mode,
              b.w, b.h);
          pred_u = intra_predict_block(
              gather_intra_neighbors(frame.u, cx, cy, cw, ch), *b.intra_mode, cw, ch);
          pred_v = intra_predict_block(
              gather_intra_neighbors(frame.v, cx, cy, cw, ch), *b.intra_mode, cw, ch);
        } else {
          if (!b.motion) throw format_error("decode: inter block without motion");
          const Frame420& ref = recon[poc_index.at(b.motion->ref_poc)];
          pred_y = detail::mc_block(ref.y, b.x, b.y, b.w, b.h, b.motion->dx,
                                    b.motion->dy);
          pred_u = detail::mc_block(ref.u, cx, cy, cw, ch, b.motion->dx >> 1,
                                    b.motion->dy >> 1);
          pred_v = detail::mc_block(ref.v, cx, cy, cw, ch, b.motion->dx >> 1,
                                    b.motion->dy >> 1);
        }
        if (b.block_type == BlockType::SKIP) {
          detail::store_block(frame.y, b.x, b.y, b.w, b.h, pred_y);
          detail::store_block(frame.u, cx, cy, cw, ch, pred_u);
          detail::store_block(frame.v, cx, cy, cw, ch, pred_v);
        } else {
          auto take = [&residuals, &pos](std::size_t n) {
            std::vector<std::int16_t> lv(residuals.begin() + static_cast<long>(pos),
                                         residuals.begin() + static_cast<long>(pos + n));
            pos += n;
            return lv;
          };
          const auto ly = take(static_cast<std::size_t>(b.w) * b.h);
          detail::store_block(frame.y, b.x, b.y, b.w, b.h,
                              detail::reconstruct_block(pred_y, ly, b.qp));
          const auto lu = take(static_cast<std::size_t>(cw) * ch);
          detail::store_block(frame.u, cx, cy, cw, ch,
                              detail::reconstruct_block(pred_u, lu, b.qp));
          const auto lv2 = take(static_cast<std::size_t>(cw) * ch);
          detail::store_block(frame.v, cx, cy, cw, ch,
                              detail::reconstruct_block(pred_v, lv2, b.qp));
        }
      }
      if (meta.ilf_flag) {
        if (!enhance)
          throw contract_error("decode: ilf_flag set but no enhancement hook given");
        enhance(meta, frame);
      }
      decoded[f] = true;
      --remaining;
      progressed = true;
    }
    if (!progressed)
      throw format_error("decode: circular or unsatisfiable reference structure");
  }
  return recon;
}

// ---- Artifact files ----

inline void write_residual_file(const std::vector<std::int16_t>& levels,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  for (std::int16_t l : levels) {
    const auto u = static_cast<std::uint16_t>(l);
    const unsigned char b[2] = {static_cast<unsigned char>(u & 0xff),
                                static_cast<unsigned char>(u >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  }
  if (!out) throw io_error("write failed on " + path);
}

inline std::vector<std::int16_t> read_residual_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (size % 2 != 0) throw format_error("residual file has odd size: " + path);
  std::vector<std::int16_t> levels(size / 2);
  for (auto& l : levels) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    l = static_cast<std::int16_t>(static_cast<std::uint16_t>(b[0] | (b[1] << 8)));
  }
  return levels;
}

inline void write_rates_csv(const std::vector<long long>& rate_bits,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << "poc,bits\n";
  for (std::size_t poc = 0; poc < rate_bits.size(); ++poc)
    out << poc << "," << rate_bits[poc] << "\n";
}

// Writes <prefix>.recon.yuv/.pred.yuv/.meta.jsonl/.residual.bin/.rates.csv.
inline void write_encode_artifacts(const EncodeResult& result,
                                   const std::string& prefix) {
  write_raw_video(result.recon, prefix + ".recon.yuv");
  write_raw_video(result.pred, prefix + ".pred.yuv");
  write_meta_file(result.meta, prefix + ".meta.jsonl");
  write_residual_file(result.residuals, prefix + ".residual.bin");
  write_rates_csv(result.rate_bits, prefix + ".rates.csv");
}

}  // namespace paqe
