#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "paqe/codec.hpp"
#include "paqe/common.hpp"
#include "paqe/enhance.hpp"
#include "paqe/metrics.hpp"

namespace paqe {

// Frame-selection policies for in-loop enhancement. C_J enhances intra frames
// plus every frame whose temporal layer is <= J; ADAPTIVE considers every
// frame and keeps the enhancement only when it strictly reduces luma MSE.
enum class IlfMode { REF, C_I, C_0, C_1, C_2, C_3, C_4, ADAPTIVE };

inline const char* ilf_mode_name(IlfMode m) {
  switch (m) {
    case IlfMode::REF: return "ref";
    case IlfMode::C_I: return "ci";
    case IlfMode::C_0: return "c0";
    case IlfMode::C_1: return "c1";
    case IlfMode::C_2: return "c2";
    case IlfMode::C_3: return "c3";
    case IlfMode::C_4: return "c4";
    case IlfMode::ADAPTIVE: return "adaptive";
  }
  return "?";
}

inline IlfMode ilf_mode_from_name(const std::string& s) {
  if (s == "ref") return IlfMode::REF;
  if (s == "ci") return IlfMode::C_I;
  if (s == "c0") return IlfMode::C_0;
  if (s == "c1") return IlfMode::C_1;
  if (s == "c2") return IlfMode::C_2;
  if (s == "c3") return IlfMode::C_3;
  if (s == "c4") return IlfMode::C_4;
  if (s == "adaptive") return IlfMode::ADAPTIVE;
  throw format_error("unknown ilf mode \"" + s + "\"");
}

inline bool ilf_mode_selects(IlfMode mode, const FrameMeta& meta) {
  switch (mode) {
    case IlfMode::REF: return false;
    case IlfMode::C_I: return meta.frame_type == FrameType::I;
    case IlfMode::ADAPTIVE: return true;
    default: {
      const int j = static_cast<int>(mode) - static_cast<int>(IlfMode::C_0);
      return meta.frame_type == FrameType::I || meta.temporal_layer <= j;
    }
  }
}

struct IlfConfig {
  IlfMode mode = IlfMode::REF;
  ModelTriple* models = nullptr;  // required for every mode except REF

  void validate() const {
    if (mode != IlfMode::REF) {
      if (!models) throw contract_error("ilf: models required for mode " +
                                        std::string(ilf_mode_name(mode)));
      models->validate();
    }
  }
};

// Per-frame record of the adaptive switch.
struct IlfDecision {
  int poc = 0;
  double mse_before = 0.0;
  double mse_after = 0.0;
  bool flag = false;  // kept iff mse_after < mse_before (ties drop it)
};

struct IlfResult {
  EncodeResult enc;
  std::vector<IlfDecision> decisions;  // ADAPTIVE only, encode order
};

// Encode with the enhancement placed after reconstruction and before the
// frame enters the reference buffer. The kept version is both the reference
// copy and the output reconstruction; the per-frame flag costs one bit in
// the rate proxy.
inline IlfResult encode_with_ilf(const std::vector<Frame420>& frames,
                                 const EncoderConfig& enc_cfg,
                                 const IlfConfig& ilf_cfg) {
  ilf_cfg.validate();
  IlfResult result;
  if (ilf_cfg.mode == IlfMode::REF) {
    result.enc = encode_sequence(frames, enc_cfg);
    return result;
  }
  IlfHook hook = [&](const FrameMeta& meta, const Frame420& pred,
                     Frame420& recon) -> bool {
    if (!ilf_mode_selects(ilf_cfg.mode, meta)) return false;
    Frame420 enhanced = enhance_frame420(*ilf_cfg.models, recon, pred, meta);
    if (ilf_cfg.mode != IlfMode::ADAPTIVE) {
      recon = std::move(enhanced);
      return true;
    }
    const Frame420& orig = frames[static_cast<std::size_t>(meta.poc)];
    IlfDecision d;
    d.poc = meta.poc;
    d.mse_before = mse_plane(recon.y, orig.y);
    d.mse_after = mse_plane(enhanced.y, orig.y);
    d.flag = d.mse_after < d.mse_before;
    result.decisions.push_back(d);
    if (d.flag) recon = std::move(enhanced);
    return d.flag;
  };
  result.enc = encode_sequence(frames, enc_cfg, hook);
  for (auto& bits : result.enc.rate_bits) bits += 1;  // the per-frame flag
  return result;
}

inline void write_ilf_decisions_csv(const std::vector<IlfDecision>& decisions,
                                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << "poc,mse_before,mse_after,flag\n";
  out.precision(10);
  for (const auto& d : decisions)
    out << d.poc << "," << d.mse_before << "," << d.mse_after << ","
        << (d.flag ? 1 : 0) << "\n";
  if (!out) throw io_error("write failed on " + path);
}

// Applies a prediction-unaware model ([C,Q] inputs) to all three planes of a
// frame, with the QP map derived from the frame's own metadata.
inline Frame420 apply_unaware_full_frame(QENetwork& f, const Frame420& in,
                                         const FrameMeta& meta) {
  const QPMap qy = build_qp_map(meta, in.width(), in.height());
  const QPMap qc = chroma_qp_map(qy);
  Frame420 out(in.width(), in.height(), in.poc);
  out.y = enhance_full_plane(f, in.y, nullptr, qy);
  out.u = enhance_full_plane(f, in.u, nullptr, qc);
  out.v = enhance_full_plane(f, in.v, nullptr, qc);
  return out;
}

// ---- Multiple-enhancement chain on a two-frame static GOP ----
//
// With static content the second frame codes as all-SKIP with zero motion, so
// its reconstruction equals the (already enhanced) first frame; enhancing it
// in-loop applies the model a second time. The trace captures every link of
// that chain so tests can assert it bit-exactly.
struct EnhancementTrace {
  Frame420 c1;          // first-frame reconstruction before enhancement
  Frame420 c1_hat;      // first-frame reconstruction after enhancement
  Frame420 p2;          // second-frame prediction signal
  Frame420 c2;          // second-frame reconstruction before enhancement
  Frame420 c2_hat;      // second-frame reconstruction after enhancement
  std::vector<BlockRecord> non_skip_blocks;  // audit: should be empty
  bool all_skip_zero_mv = false;
  bool c2_equals_p2 = false;
  bool p2_equals_c1_hat = false;
};

// `f` is applied full-frame (prediction-unaware inputs) to every frame of the
// two-frame encode; the caller checks trace.c2_hat against f(f(trace.c1)).
inline EnhancementTrace multiple_enhancement_trace(
    const std::vector<Frame420>& frames, EncoderConfig cfg, QENetwork& f) {
  if (frames.size() != 2)
    throw contract_error("multiple_enhancement_trace: exactly two frames");
  if (f.in_channels != 2)
    throw contract_error("multiple_enhancement_trace: model must take [C,Q]");
  cfg.layer_qp_offsets = {0};  // uniform qp so both frames see the same Q map

  EnhancementTrace trace;
  auto apply = [&f](const Frame420& in, const FrameMeta& meta) {
    return apply_unaware_full_frame(f, in, meta);
  };
  IlfHook hook = [&](const FrameMeta& meta, const Frame420& pred,
                     Frame420& recon) -> bool {
    if (meta.poc == 0) {
      trace.c1 = recon;
      recon = apply(recon, meta);
      trace.c1_hat = recon;
    } else {
      trace.p2 = pred;
      trace.c2 = recon;
      for (const auto& b : meta.blocks)
        if (b.block_type != BlockType::SKIP ||
            (b.motion && (b.motion->dx != 0 || b.motion->dy != 0)))
          trace.non_skip_blocks.push_back(b);
      recon = apply(recon, meta);
      trace.c2_hat = recon;
    }
    return true;
  };
  (void)encode_sequence(frames, cfg, hook);
  trace.all_skip_zero_mv = trace.non_skip_blocks.empty();
  trace.c2_equals_p2 = trace.c2.same_content(trace.p2);
  trace.p2_equals_c1_hat = trace.p2.same_content(trace.c1_hat);
  return trace;
}

// ---- ILF sweep: per-frame quality/rate rows for RD comparison ----

struct SweepRow {
  IlfMode mode = IlfMode::REF;
  int qp = 0;
  int poc = 0;
  long long rate_bits = 0;
  double psnr_y = 0.0;
};

inline std::vector<SweepRow> run_ilf_sweep(const std::vector<Frame420>& frames,
                                           EncoderConfig enc_cfg,
                                           ModelTriple& models,
                                           const std::vector<int>& qps,
                                           const std::vector<IlfMode>& modes) {
  std::vector<SweepRow> rows;
  for (IlfMode mode : modes)
    for (int qp : qps) {
      enc_cfg.base_qp = qp;
      IlfConfig ilf;
      ilf.mode = mode;
      ilf.models = mode == IlfMode::REF ? nullptr : &models;
      const IlfResult r = encode_with_ilf(frames, enc_cfg, ilf);
      for (std::size_t poc = 0; poc < frames.size(); ++poc)
        rows.push_back({mode, qp, static_cast<int>(poc),
                        r.enc.rate_bits[poc],
                        psnr_plane(r.enc.recon[poc].y, frames[poc].y)});
    }
  return rows;
}

// Aggregates sweep rows into one RD point per (mode, qp): total bits and
// pooled-MSE luma PSNR are not recoverable from per-frame PSNR, so this uses
// mean frame PSNR, the usual sequence summary.
inline std::vector<RDPoint> sweep_rd_curve(const std::vector<SweepRow>& rows,
                                           IlfMode mode,
                                           const std::vector<int>& qps) {
  std::vector<RDPoint> curve;
  for (int qp : qps) {
    double bits = 0.0, psnr_sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.mode == mode && r.qp == qp) {
        bits += static_cast<double>(r.rate_bits);
        psnr_sum += r.psnr_y;
        ++n;
      }
    if (n == 0) throw contract_error("sweep_rd_curve: missing (mode, qp) cell");
    curve.push_back({bits, psnr_sum / n});
  }
  return curve;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << "mode,qp,poc,rate_bits,psnr_y\n";
  out.precision(10);
  for (const auto& r : rows)
    out << ilf_mode_name(r.mode) << "," << r.qp << "," << r.poc << ","
        << r.rate_bits << "," << r.psnr_y << "\n";
  if (!out) throw io_error("write failed on " + path);
}

}  // namespace paqe
