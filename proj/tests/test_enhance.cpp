#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "paqe/codec.hpp"
#include "paqe/enhance.hpp"
#include "paqe/synth.hpp"

using namespace paqe;

namespace {

ModelTriple small_models(std::uint64_t seed) {
  ModelTriple m;
  m.intra = QENetwork(3, 6, 2);
  m.inter = QENetwork(3, 6, 2);
  m.unaware = QENetwork(2, 6, 2);
  m.intra.init_weights(seed);
  m.inter.init_weights(seed + 1);
  m.unaware.init_weights(seed + 2);
  return m;
}

Plane random_plane(int w, int h, std::mt19937_64& rng) {
  Plane p(w, h);
  for (auto& s : p.samples) s = static_cast<std::uint16_t>(rng() % 1024);
  return p;
}

QPMap uniform_qp_map(int w, int h, int qp) {
  QPMap map(w, h);
  for (auto& v : map.values) v = static_cast<float>(qp) / 63.0f;
  return map;
}

// Random tiling of the frame into blocks with random coding types.
FrameMeta random_mask_meta(int w, int h, int block, std::mt19937_64& rng,
                           int qp = 32) {
  FrameMeta m;
  m.frame_type = FrameType::B;
  m.base_qp = qp;
  for (int y = 0; y < h; y += block)
    for (int x = 0; x < w; x += block) {
      BlockRecord b;
      b.x = x;
      b.y = y;
      b.w = std::min(block, w - x);
      b.h = std::min(block, h - y);
      b.qp = qp;
      const int t = static_cast<int>(rng() % 3);
      b.block_type = t == 0   ? BlockType::INTRA
                     : t == 1 ? BlockType::INTER
                              : BlockType::SKIP;
      if (b.block_type == BlockType::INTRA)
        b.intra_mode = 0;
      else
        b.motion = MotionInfo{0, 0, 0};
      m.blocks.push_back(b);
    }
  return m;
}

}  // namespace

TEST_CASE("assemble_input stacks channels in [P, C, Q] order") {
  std::mt19937_64 rng(41);
  Plane recon = random_plane(8, 6, rng);
  Plane pred = random_plane(8, 6, rng);
  pred.at(3, 2) = 1023;  // marker
  const QPMap q = uniform_qp_map(8, 6, 42);

  const Tensor three = assemble_input(recon, &pred, q);
  CHECK(three.n == 1);
  CHECK(three.c == 3);
  CHECK(three.h == 6);
  CHECK(three.w == 8);
  CHECK(three.data[three.index(0, 0, 2, 3)] == doctest::Approx(1.0f));
  CHECK(three.data[three.index(0, 1, 2, 3)] ==
        doctest::Approx(recon.at(3, 2) / 1023.0f));
  CHECK(three.data[three.index(0, 2, 0, 0)] == 42.0f / 63.0f);

  const Tensor two = assemble_input(recon, nullptr, q);
  CHECK(two.c == 2);
  CHECK(two.data[two.index(0, 0, 2, 3)] ==
        doctest::Approx(recon.at(3, 2) / 1023.0f));

  Plane small(4, 4);
  CHECK_THROWS_AS(assemble_input(recon, &small, q), contract_error);
  const QPMap bad = uniform_qp_map(4, 4, 10);
  CHECK_THROWS_AS(assemble_input(recon, nullptr, bad), contract_error);
}

TEST_CASE("denormalization clamps and rounds half-up") {
  CHECK(denormalize_sample(-0.5f) == 0);
  CHECK(denormalize_sample(0.0f) == 0);
  CHECK(denormalize_sample(1.0f) == 1023);
  CHECK(denormalize_sample(2.0f) == 1023);
  CHECK(denormalize_sample(511.5f / 1023.0f) == 512);  // half rounds up
  CHECK(denormalize_sample(100.4f / 1023.0f) == 100);
}

TEST_CASE("intra-frame enhancement: shape, purity, arity") {
  std::mt19937_64 rng(42);
  ModelTriple models = small_models(101);
  const Plane recon = random_plane(24, 16, rng);
  const Plane pred = random_plane(24, 16, rng);
  const QPMap q = uniform_qp_map(24, 16, 37);

  const Plane a = enhance_intra_frame(models, recon, pred, q);
  CHECK(a.width == 24);
  CHECK(a.height == 16);
  const Plane b = enhance_intra_frame(models, recon, pred, q);
  CHECK(a == b);
  for (auto s : a.samples) CHECK(s <= kMaxSample);

  // wrong arity: unaware model with a prediction plane
  CHECK_THROWS_AS(enhance_full_plane(models.unaware, recon, &pred, q),
                  contract_error);
  CHECK_THROWS_AS(enhance_full_plane(models.intra, recon, nullptr, q),
                  contract_error);
}

TEST_CASE("zero-weight model maps everything to zero output") {
  ModelTriple models = small_models(1);
  models.intra.for_each_param(
      [](std::vector<float>& p, std::vector<float>&) {
        std::fill(p.begin(), p.end(), 0.0f);
      });
  std::mt19937_64 rng(43);
  const Plane recon = random_plane(8, 8, rng);
  const Plane pred = random_plane(8, 8, rng);
  const Plane out =
      enhance_intra_frame(models, recon, pred, uniform_qp_map(8, 8, 30));
  for (auto s : out.samples) CHECK(s == 0);
}

TEST_CASE("block-level dispatch equals frame-level mask composition") {
  std::mt19937_64 rng(44);
  ModelTriple models = small_models(202);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 32 + static_cast<int>(rng() % 3) * 8;
    const int h = 24 + static_cast<int>(rng() % 2) * 8;
    const Plane recon = random_plane(w, h, rng);
    const Plane pred = random_plane(w, h, rng);
    const FrameMeta meta = random_mask_meta(w, h, 8, rng);
    const QPMap q = build_qp_map(meta, w, h);
    const Plane block_wise = enhance_inter_frame(models, recon, pred, q, meta);
    const Plane frame_wise =
        enhance_inter_frame_framewise(models, recon, pred, q, meta);
    CHECK(block_wise == frame_wise);
  }
}

TEST_CASE("all-skip frame equals one full-frame unaware pass") {
  std::mt19937_64 rng(45);
  ModelTriple models = small_models(303);
  const Plane recon = random_plane(32, 24, rng);
  const Plane pred = random_plane(32, 24, rng);
  FrameMeta meta = random_mask_meta(32, 24, 8, rng);
  for (auto& b : meta.blocks) {
    b.block_type = BlockType::SKIP;
    b.intra_mode.reset();
    b.motion = MotionInfo{0, 0, 0};
  }
  const QPMap q = build_qp_map(meta, 32, 24);
  const Plane block_wise = enhance_inter_frame(models, recon, pred, q, meta);
  const Plane oracle = enhance_full_plane(models.unaware, recon, nullptr, q);
  CHECK(block_wise == oracle);
}

TEST_CASE("single differing block confines the output difference") {
  std::mt19937_64 rng(46);
  ModelTriple models = small_models(404);
  const Plane recon = random_plane(32, 32, rng);
  const Plane pred = random_plane(32, 32, rng);
  FrameMeta all_skip = random_mask_meta(32, 32, 8, rng);
  for (auto& b : all_skip.blocks) {
    b.block_type = BlockType::SKIP;
    b.intra_mode.reset();
    b.motion = MotionInfo{0, 0, 0};
  }
  FrameMeta one_intra = all_skip;
  one_intra.blocks[5].block_type = BlockType::INTRA;
  one_intra.blocks[5].intra_mode = 0;
  one_intra.blocks[5].motion.reset();

  const QPMap q = build_qp_map(all_skip, 32, 32);
  const Plane a = enhance_inter_frame(models, recon, pred, q, all_skip);
  const Plane b = enhance_inter_frame(models, recon, pred, q, one_intra);
  const auto& blk = one_intra.blocks[5];
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool inside = x >= blk.x && x < blk.x + blk.w && y >= blk.y &&
                          y < blk.y + blk.h;
      if (!inside) CHECK(a.at(x, y) == b.at(x, y));
    }
}

TEST_CASE("model sharing: identical content gives identical outputs") {
  std::mt19937_64 rng(47);
  ModelTriple models = small_models(505);
  const Plane content = random_plane(16, 16, rng);
  const Plane pred = random_plane(16, 16, rng);
  const QPMap q = uniform_qp_map(16, 16, 32);
  const Plane a = enhance_intra_frame(models, content, pred, q);
  const Plane b = enhance_intra_frame(models, content, pred, q);
  CHECK(a == b);
}

TEST_CASE("enhance_frame420 runs chroma at native half resolution") {
  SynthParams sp;
  sp.width = 32;
  sp.height = 32;
  sp.frames = 3;
  sp.seed = 48;
  const auto clip = synthesize_clip(sp);
  EncoderConfig cfg;
  cfg.gop_size = 2;
  cfg.base_qp = 37;
  const EncodeResult enc = encode_sequence(clip, cfg);
  ModelTriple models = small_models(606);
  for (std::size_t f = 0; f < clip.size(); ++f) {
    const Frame420 out =
        enhance_frame420(models, enc.recon[f], enc.pred[f], enc.meta[f]);
    CHECK(out.y.width == 32);
    CHECK(out.u.width == 16);
    CHECK(out.u.height == 16);
    CHECK(out.v.width == 16);
  }
}

TEST_CASE("model triple persistence round trip") {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "paqe_models_test").string();
  fs::create_directories(dir);
  ModelTriple models = small_models(707);
  save_model_triple(models, dir);
  ModelTriple back = load_model_triple(dir);
  std::mt19937_64 rng(49);
  const Plane recon = random_plane(16, 16, rng);
  const Plane pred = random_plane(16, 16, rng);
  const QPMap q = uniform_qp_map(16, 16, 27);
  CHECK(enhance_intra_frame(models, recon, pred, q) ==
        enhance_intra_frame(back, recon, pred, q));
  CHECK(enhance_full_plane(models.unaware, recon, nullptr, q) ==
        enhance_full_plane(back.unaware, recon, nullptr, q));
  fs::remove_all(dir);
}

TEST_CASE("model triple arity validation") {
  ModelTriple bad;
  bad.intra = QENetwork(2, 4, 1);
  bad.inter = QENetwork(3, 4, 1);
  bad.unaware = QENetwork(2, 4, 1);
  CHECK_THROWS_AS(bad.validate(), contract_error);
  bad.intra = QENetwork(3, 4, 1);
  bad.unaware = QENetwork(3, 4, 1);
  CHECK_THROWS_AS(bad.validate(), contract_error);
}
