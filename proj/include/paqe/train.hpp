#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "paqe/codec.hpp"
#include "paqe/common.hpp"
#include "paqe/enhance.hpp"
#include "paqe/frame.hpp"
#include "paqe/meta.hpp"
#include "paqe/nn.hpp"

namespace paqe {

// One luma frame of training material: the codec's reconstruction and
// prediction, the source, and per-pixel qp / skip rasters from the metadata.
struct FrameEntry {
  std::string video;
  int qp = 0;
  int poc = 0;
  FrameType frame_type = FrameType::I;
  Plane recon;
  Plane pred;
  Plane orig;
  std::vector<std::uint8_t> qp_raster;  // per-pixel qp in [1,63]
  std::vector<std::uint8_t> skip_mask;  // 1 where the covering block is skip
};

struct DatasetStore {
  std::vector<FrameEntry> intra;  // from I-frames
  std::vector<FrameEntry> inter;  // from B-frames
};

inline const std::vector<int>& default_dataset_qps() {
  static const std::vector<int> qps = {22, 27, 32, 37, 42};
  return qps;
}

// Encodes each video at each base qp, randomly picks `frames_per_video`
// frames per (video, qp), and routes them to the intra or inter store by
// frame type. Videos shorter than the quota contribute all frames (with a
// warning). Luma only.
inline DatasetStore generate_dataset(
    const std::vector<std::pair<std::string, std::vector<Frame420>>>& videos,
    const EncoderConfig& base_cfg,
    const std::vector<int>& qps = default_dataset_qps(),
    int frames_per_video = 4, std::uint64_t seed = 1) {
  if (videos.empty()) throw contract_error("generate_dataset: no videos");
  std::mt19937_64 rng(seed);
  DatasetStore store;
  for (const auto& [name, frames] : videos) {
    for (int qp : qps) {
      EncoderConfig cfg = base_cfg;
      cfg.base_qp = qp;
      const EncodeResult enc = encode_sequence(frames, cfg);

      std::vector<int> pocs(frames.size());
      for (std::size_t i = 0; i < pocs.size(); ++i) pocs[i] = static_cast<int>(i);
      if (static_cast<int>(pocs.size()) > frames_per_video) {
        std::shuffle(pocs.begin(), pocs.end(), rng);
        pocs.resize(static_cast<std::size_t>(frames_per_video));
        std::sort(pocs.begin(), pocs.end());
      } else if (static_cast<int>(pocs.size()) < frames_per_video) {
        std::cerr << "generate_dataset: video \"" << name << "\" has only "
                  << pocs.size() << " frames, taking all\n";
      }

      for (int poc : pocs) {
        const auto& meta = enc.meta[static_cast<std::size_t>(poc)];
        FrameEntry e;
        e.video = name;
        e.qp = qp;
        e.poc = poc;
        e.frame_type = meta.frame_type;
        e.recon = enc.recon[static_cast<std::size_t>(poc)].y;
        e.pred = enc.pred[static_cast<std::size_t>(poc)].y;
        e.orig = frames[static_cast<std::size_t>(poc)].y;
        const int w = e.orig.width, h = e.orig.height;
        const auto owner = detail::block_owner_raster(meta, w, h);
        e.qp_raster.resize(owner.size());
        e.skip_mask.resize(owner.size());
        for (std::size_t i = 0; i < owner.size(); ++i) {
          const auto& blk = meta.blocks[static_cast<std::size_t>(owner[i])];
          e.qp_raster[i] = static_cast<std::uint8_t>(blk.qp);
          e.skip_mask[i] = blk.block_type == BlockType::SKIP ? 1 : 0;
        }
        (meta.frame_type == FrameType::I ? store.intra : store.inter)
            .push_back(std::move(e));
      }
    }
  }
  return store;
}

// ---- Patch sampling with augmentation ----

// Aligned normalized patches; `variant` records the applied augmentation
// (bit 0: horizontal flip, bits 1-2: number of 90-degree rotations).
struct TrainingSample {
  int size = 0;
  int variant = 0;
  std::vector<float> recon;
  std::vector<float> pred;
  std::vector<float> qp;
  std::vector<float> orig;
};

namespace detail {
// Horizontal flip first (if bit 0), then k = variant>>1 rotations by 90
// degrees counterclockwise; square patches only.
inline std::vector<float> apply_variant(const std::vector<float>& src, int n,
                                        int variant) {
  std::vector<float> a = src;
  if (variant & 1) {
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n / 2; ++x)
        std::swap(a[static_cast<std::size_t>(y) * n + x],
                  a[static_cast<std::size_t>(y) * n + (n - 1 - x)]);
  }
  std::vector<float> b(a.size());
  const int k = (variant >> 1) & 3;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      int sx = x, sy = y;
      switch (k) {
        case 0: break;
        case 1: sx = n - 1 - y; sy = x; break;       // 90 ccw
        case 2: sx = n - 1 - x; sy = n - 1 - y; break;
        case 3: sx = y; sy = n - 1 - x; break;       // 270 ccw
      }
      b[static_cast<std::size_t>(y) * n + x] =
          a[static_cast<std::size_t>(sy) * n + sx];
    }
  return b;
}
}  // namespace detail

// Draws one patch. When `exclude_skip_majority` is set, positions whose patch
// is more than half skip pixels are rejected and redrawn.
inline TrainingSample sample_patch(const std::vector<FrameEntry>& store,
                                   int patch, bool augment, std::mt19937_64& rng,
                                   bool exclude_skip_majority) {
  if (store.empty()) throw contract_error("sample_patch: empty store");
  std::uniform_int_distribution<std::size_t> pick_entry(0, store.size() - 1);
  std::uniform_int_distribution<int> pick_variant(0, 7);
  const int max_attempts = 10000;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const FrameEntry& e = store[pick_entry(rng)];
    const int w = e.orig.width, h = e.orig.height;
    if (w < patch || h < patch)
      throw contract_error("sample_patch: patch larger than frame");
    std::uniform_int_distribution<int> px(0, w - patch), py(0, h - patch);
    const int x0 = px(rng), y0 = py(rng);
    if (exclude_skip_majority) {
      int skip = 0;
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
          skip += e.skip_mask[static_cast<std::size_t>(y0 + y) * w + (x0 + x)];
      if (2 * skip > patch * patch) continue;
    }
    TrainingSample s;
    s.size = patch;
    s.variant = augment ? pick_variant(rng) : 0;
    const std::size_t area = static_cast<std::size_t>(patch) * patch;
    s.recon.resize(area);
    s.pred.resize(area);
    s.qp.resize(area);
    s.orig.resize(area);
    for (int y = 0; y < patch; ++y)
      for (int x = 0; x < patch; ++x) {
        const std::size_t src = static_cast<std::size_t>(y0 + y) * w + (x0 + x);
        const std::size_t dst = static_cast<std::size_t>(y) * patch + x;
        s.recon[dst] = normalize_sample(e.recon.samples[src]);
        s.pred[dst] = normalize_sample(e.pred.samples[src]);
        s.qp[dst] = static_cast<float>(e.qp_raster[src]) /
                    static_cast<float>(kQpMax);
        s.orig[dst] = normalize_sample(e.orig.samples[src]);
      }
    if (s.variant != 0) {
      s.recon = detail::apply_variant(s.recon, patch, s.variant);
      s.pred = detail::apply_variant(s.pred, patch, s.variant);
      s.qp = detail::apply_variant(s.qp, patch, s.variant);
      s.orig = detail::apply_variant(s.orig, patch, s.variant);
    }
    return s;
  }
  throw contract_error("sample_patch: no acceptable patch position found");
}

inline std::vector<TrainingSample> sample_batch(
    const std::vector<FrameEntry>& store, int batch, int patch, bool augment,
    std::mt19937_64& rng, bool exclude_skip_majority = false) {
  std::vector<TrainingSample> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i)
    out.push_back(sample_patch(store, patch, augment, rng, exclude_skip_majority));
  return out;
}

// Stacks samples into network input (channels [P,C,Q] or [C,Q]) and target.
inline std::pair<Tensor, Tensor> make_batch_tensors(
    const std::vector<TrainingSample>& samples, bool with_pred) {
  if (samples.empty()) throw contract_error("make_batch_tensors: empty batch");
  const int n = static_cast<int>(samples.size());
  const int p = samples.front().size;
  const int ch = with_pred ? 3 : 2;
  Tensor in(n, ch, p, p);
  Tensor target(n, 1, p, p);
  for (int b = 0; b < n; ++b) {
    const TrainingSample& s = samples[static_cast<std::size_t>(b)];
    if (s.size != p) throw contract_error("make_batch_tensors: mixed patch sizes");
    int c = 0;
    if (with_pred)
      std::copy(s.pred.begin(), s.pred.end(), in.data.begin() + in.index(b, c++, 0, 0));
    std::copy(s.recon.begin(), s.recon.end(), in.data.begin() + in.index(b, c++, 0, 0));
    std::copy(s.qp.begin(), s.qp.end(), in.data.begin() + in.index(b, c, 0, 0));
    std::copy(s.orig.begin(), s.orig.end(),
              target.data.begin() + target.index(b, 0, 0, 0));
  }
  return {std::move(in), std::move(target)};
}

// ---- Schedule ----

struct TrainSchedule {
  int epochs = 500;
  int decay_every = 100;   // lr halves every this many epochs
  float initial_lr = 1e-5f;
  int batch = 16;
  int patch = 64;
  int steps_per_epoch = 100;
  bool augment = true;
  std::uint64_t seed = 1;

  float lr_at(int epoch) const {
    return initial_lr * std::pow(0.5f, static_cast<float>(epoch / decay_every));
  }

  static TrainSchedule paper_profile() { return TrainSchedule{}; }

  // Small enough to run end-to-end in CI minutes.
  static TrainSchedule desk_profile() {
    TrainSchedule s;
    s.epochs = 50;
    s.decay_every = 10;
    s.initial_lr = 4e-4f;
    s.batch = 16;
    s.patch = 32;
    s.steps_per_epoch = 8;
    return s;
  }
};

struct LossRow {
  int epoch = 0;
  double train_l1 = 0.0;
  double val_l1 = 0.0;
  float lr = 0.0f;
};

struct TrainResult {
  QENetwork net;                 // parameters of the best-validation epoch
  std::vector<LossRow> curve;
  int best_epoch = -1;
  double best_val_l1 = 0.0;
};

inline void write_loss_csv(const std::vector<LossRow>& curve,
                           const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << "epoch,train_l1,val_l1,lr\n";
  out.precision(10);
  for (const auto& r : curve)
    out << r.epoch << "," << r.train_l1 << "," << r.val_l1 << "," << r.lr << "\n";
  if (!out) throw io_error("write failed on " + path);
}

// Held-out evaluation material: up to `max_count` centered square crops
// (side min(128, frame side)).
inline std::vector<TrainingSample> make_validation_set(
    const std::vector<FrameEntry>& entries, int max_count = 50) {
  std::vector<TrainingSample> out;
  for (const auto& e : entries) {
    if (static_cast<int>(out.size()) >= max_count) break;
    const int w = e.orig.width, h = e.orig.height;
    const int c = std::min({128, w, h});
    const int x0 = (w - c) / 2, y0 = (h - c) / 2;
    TrainingSample s;
    s.size = c;
    const std::size_t area = static_cast<std::size_t>(c) * c;
    s.recon.resize(area);
    s.pred.resize(area);
    s.qp.resize(area);
    s.orig.resize(area);
    for (int y = 0; y < c; ++y)
      for (int x = 0; x < c; ++x) {
        const std::size_t src = static_cast<std::size_t>(y0 + y) * w + (x0 + x);
        const std::size_t dst = static_cast<std::size_t>(y) * c + x;
        s.recon[dst] = normalize_sample(e.recon.samples[src]);
        s.pred[dst] = normalize_sample(e.pred.samples[src]);
        s.qp[dst] = static_cast<float>(e.qp_raster[src]) /
                    static_cast<float>(kQpMax);
        s.orig[dst] = normalize_sample(e.orig.samples[src]);
      }
    out.push_back(std::move(s));
  }
  return out;
}

inline double validation_l1(QENetwork& net, const std::vector<TrainingSample>& val) {
  if (val.empty()) throw contract_error("validation_l1: empty validation set");
  const bool with_pred = net.in_channels == 3;
  double sum = 0.0;
  for (const auto& s : val) {
    const auto [in, target] = make_batch_tensors({s}, with_pred);
    Tensor out = net.forward(in, NetMode::INFER);
    double l = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      l += std::abs(static_cast<double>(out.data[i]) - target.data[i]);
    sum += l / static_cast<double>(out.data.size());
  }
  return sum / static_cast<double>(val.size());
}

// Adam training over random patches with per-epoch validation; returns the
// parameters of the epoch with the lowest validation L1 (not the last).
inline TrainResult train_model(const std::vector<FrameEntry>& train_store,
                               const std::vector<TrainingSample>& validation,
                               int in_channels, int channels, int num_blocks,
                               const TrainSchedule& schedule,
                               bool exclude_skip_majority = false) {
  if (train_store.empty()) throw contract_error("train_model: empty store");
  if (schedule.batch < 2)
    throw contract_error("train_model: batch must be >= 2 (batch-norm statistics)");
  const bool with_pred = in_channels == 3;

  TrainResult result;
  QENetwork net(in_channels, channels, num_blocks);
  net.init_weights_near_identity(schedule.seed);
  AdamState adam;
  std::mt19937_64 rng(schedule.seed ^ 0x9e3779b97f4a7c15ull);

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const float lr = schedule.lr_at(epoch);
    double train_sum = 0.0;
    for (int step = 0; step < schedule.steps_per_epoch; ++step) {
      const auto samples =
          sample_batch(train_store, schedule.batch, schedule.patch,
                       schedule.augment, rng, exclude_skip_majority);
      const auto [in, target] = make_batch_tensors(samples, with_pred);
      Tensor out = net.forward(in, NetMode::TRAIN, /*cache=*/true);
      const L1Result loss = l1_loss(out, target);
      net.backward(loss.grad);
      adam_step(net, adam, lr);
      train_sum += loss.loss;
    }
    const double val = validation_l1(net, validation);
    result.curve.push_back(
        {epoch, train_sum / schedule.steps_per_epoch, val, lr});
    if (result.best_epoch < 0 || val < result.best_val_l1) {
      result.best_epoch = epoch;
      result.best_val_l1 = val;
      result.net = net;
    }
  }
  return result;
}

// ---- Dataset persistence: dataset.jsonl manifest + one binary blob ----
//
// Blob layout per entry: recon, pred, orig as little-endian u16 rasters,
// then qp and skip rasters as u8. Manifest lines carry geometry and offsets.

inline void save_dataset(const DatasetStore& store, const std::string& dir) {
  std::ofstream blob(dir + "/dataset.bin", std::ios::binary | std::ios::trunc);
  std::ofstream manifest(dir + "/dataset.jsonl", std::ios::trunc);
  if (!blob || !manifest) throw io_error("save_dataset: cannot open outputs in " + dir);
  std::uint64_t offset = 0;
  auto dump = [&](const std::vector<FrameEntry>& entries, const char* kind) {
    for (const auto& e : entries) {
      nlohmann::json j;
      j["video"] = e.video;
      j["qp"] = e.qp;
      j["poc"] = e.poc;
      j["kind"] = kind;
      j["w"] = e.orig.width;
      j["h"] = e.orig.height;
      j["offset"] = offset;
      manifest << j.dump() << "\n";
      for (const Plane* p : {&e.recon, &e.pred, &e.orig})
        for (std::uint16_t s : p->samples) {
          const unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                                      static_cast<unsigned char>(s >> 8)};
          blob.write(reinterpret_cast<const char*>(b), 2);
          offset += 2;
        }
      blob.write(reinterpret_cast<const char*>(e.qp_raster.data()),
                 static_cast<std::streamsize>(e.qp_raster.size()));
      blob.write(reinterpret_cast<const char*>(e.skip_mask.data()),
                 static_cast<std::streamsize>(e.skip_mask.size()));
      offset += e.qp_raster.size() + e.skip_mask.size();
    }
  };
  dump(store.intra, "intra");
  dump(store.inter, "inter");
  if (!blob || !manifest) throw io_error("save_dataset: write failed in " + dir);
}

inline DatasetStore load_dataset(const std::string& dir) {
  std::ifstream manifest(dir + "/dataset.jsonl");
  std::ifstream blob(dir + "/dataset.bin", std::ios::binary);
  if (!manifest || !blob) throw io_error("load_dataset: missing files in " + dir);
  DatasetStore store;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw format_error("dataset manifest line " + std::to_string(line_no) +
                         ": " + ex.what());
    }
    FrameEntry e;
    e.video = j.at("video").get<std::string>();
    e.qp = j.at("qp").get<int>();
    e.poc = j.at("poc").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    e.frame_type = kind == "intra" ? FrameType::I : FrameType::B;
    const int w = j.at("w").get<int>(), h = j.at("h").get<int>();
    blob.seekg(static_cast<std::streamoff>(j.at("offset").get<std::uint64_t>()));
    const std::size_t area = static_cast<std::size_t>(w) * h;
    for (Plane* p : {&e.recon, &e.pred, &e.orig}) {
      *p = Plane(w, h);
      for (auto& s : p->samples) {
        unsigned char b[2];
        blob.read(reinterpret_cast<char*>(b), 2);
        s = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
      }
    }
    e.qp_raster.resize(area);
    e.skip_mask.resize(area);
    blob.read(reinterpret_cast<char*>(e.qp_raster.data()),
              static_cast<std::streamsize>(area));
    blob.read(reinterpret_cast<char*>(e.skip_mask.data()),
              static_cast<std::streamsize>(area));
    if (!blob)
      throw format_error("dataset blob truncated at manifest line " +
                         std::to_string(line_no));
    (kind == "intra" ? store.intra : store.inter).push_back(std::move(e));
  }
  return store;
}

}  // namespace paqe
