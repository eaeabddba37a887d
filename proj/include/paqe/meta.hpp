#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paqe/common.hpp"

namespace paqe {

constexpr int kQpMin = 1;
constexpr int kQpMax = 63;

enum class BlockType { INTRA, INTER, SKIP };

inline const char* block_type_name(BlockType t) {
  switch (t) {
    case BlockType::INTRA: return "intra";
    case BlockType::INTER: return "inter";
    case BlockType::SKIP: return "skip";
  }
  return "?";
}

inline BlockType block_type_from_name(const std::string& s) {
  if (s == "intra") return BlockType::INTRA;
  if (s == "inter") return BlockType::INTER;
  if (s == "skip") return BlockType::SKIP;
  throw format_error("unknown block type \"" + s + "\"");
}

struct MotionInfo {
  int dx = 0;
  int dy = 0;
  int ref_poc = 0;  // reference picture, identified by poc
};

// Axis-aligned rectangle on the luma grid. Chroma inherits by halving.
struct BlockRecord {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  BlockType block_type = BlockType::INTRA;
  int qp = 32;
  std::optional<int> intra_mode;
  std::optional<MotionInfo> motion;
};

enum class FrameType { I, B };

struct FrameMeta {
  int poc = 0;
  FrameType frame_type = FrameType::I;
  int temporal_layer = 0;
  int base_qp = 32;
  bool ilf_flag = false;
  std::vector<BlockRecord> blocks;
};

// Normalized per-pixel QP raster; every value is q/63 for some q in [1, 63].
struct QPMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  QPMap() = default;
  QPMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h) {}
  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

namespace detail {
// Verifies the blocks tile [0,w)x[0,h) with no gap or overlap and fills
// `owner` with the index of the covering block per pixel.
inline std::vector<int> block_owner_raster(const FrameMeta& meta, int width,
                                           int height) {
  std::vector<int> owner(static_cast<std::size_t>(width) * height, -1);
  for (std::size_t b = 0; b < meta.blocks.size(); ++b) {
    const BlockRecord& blk = meta.blocks[b];
    if (blk.x < 0 || blk.y < 0 || blk.w <= 0 || blk.h <= 0 ||
        blk.x + blk.w > width || blk.y + blk.h > height)
      throw contract_error("block " + std::to_string(b) + " exits the frame");
    for (int yy = blk.y; yy < blk.y + blk.h; ++yy)
      for (int xx = blk.x; xx < blk.x + blk.w; ++xx) {
        int& cell = owner[static_cast<std::size_t>(yy) * width + xx];
        if (cell != -1)
          throw contract_error("blocks " + std::to_string(cell) + " and " +
                               std::to_string(b) + " overlap");
        cell = static_cast<int>(b);
      }
  }
  for (std::size_t i = 0; i < owner.size(); ++i)
    if (owner[i] == -1)
      throw contract_error("block tiling leaves pixel " + std::to_string(i) +
                           " uncovered");
  return owner;
}
}  // namespace detail

inline QPMap build_qp_map(const FrameMeta& meta, int width, int height) {
  const auto owner = detail::block_owner_raster(meta, width, height);
  QPMap map(width, height);
  for (std::size_t i = 0; i < owner.size(); ++i) {
    const int qp = meta.blocks[static_cast<std::size_t>(owner[i])].qp;
    if (qp < kQpMin || qp > kQpMax)
      throw contract_error("block qp " + std::to_string(qp) + " out of [1,63]");
    map.values[i] = static_cast<float>(qp) / static_cast<float>(kQpMax);
  }
  return map;
}

inline std::vector<BlockType> build_block_type_mask(const FrameMeta& meta,
                                                    int width, int height) {
  const auto owner = detail::block_owner_raster(meta, width, height);
  if (meta.frame_type == FrameType::I)
    for (const auto& blk : meta.blocks)
      if (blk.block_type != BlockType::INTRA)
        throw contract_error("I-frame meta contains a non-intra block");
  std::vector<BlockType> mask(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i)
    mask[i] = meta.blocks[static_cast<std::size_t>(owner[i])].block_type;
  return mask;
}

// ---- JSONL sidecar (one frame record per line) ----

inline nlohmann::json meta_to_json(const FrameMeta& meta) {
  nlohmann::json j;
  j["poc"] = meta.poc;
  j["frame_type"] = meta.frame_type == FrameType::I ? "I" : "B";
  j["temporal_layer"] = meta.temporal_layer;
  j["base_qp"] = meta.base_qp;
  j["ilf_flag"] = meta.ilf_flag;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : meta.blocks) {
    nlohmann::json jb;
    jb["x"] = b.x;
    jb["y"] = b.y;
    jb["w"] = b.w;
    jb["h"] = b.h;
    jb["type"] = block_type_name(b.block_type);
    jb["qp"] = b.qp;
    if (b.intra_mode)
      jb["mode"] = nlohmann::json{{"intra_mode", *b.intra_mode}};
    else if (b.motion)
      jb["mode"] = nlohmann::json{{"mv", {b.motion->dx, b.motion->dy}},
                                  {"ref", b.motion->ref_poc}};
    else
      jb["mode"] = nullptr;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

inline FrameMeta meta_from_json(const nlohmann::json& j) {
  FrameMeta meta;
  meta.poc = j.at("poc").get<int>();
  const std::string ft = j.at("frame_type").get<std::string>();
  if (ft == "I")
    meta.frame_type = FrameType::I;
  else if (ft == "B")
    meta.frame_type = FrameType::B;
  else
    throw format_error("unknown frame_type \"" + ft + "\"");
  meta.temporal_layer = j.at("temporal_layer").get<int>();
  meta.base_qp = j.at("base_qp").get<int>();
  meta.ilf_flag = j.at("ilf_flag").get<bool>();
  for (const auto& jb : j.at("blocks")) {
    BlockRecord b;
    b.x = jb.at("x").get<int>();
    b.y = jb.at("y").get<int>();
    b.w = jb.at("w").get<int>();
    b.h = jb.at("h").get<int>();
    b.block_type = block_type_from_name(jb.at("type").get<std::string>());
    b.qp = jb.at("qp").get<int>();
    if (b.qp < kQpMin || b.qp > kQpMax)
      throw format_error("block qp " + std::to_string(b.qp) + " out of [1,63]");
    if (jb.contains("mode") && !jb.at("mode").is_null()) {
      const auto& m = jb.at("mode");
      if (m.contains("intra_mode")) {
        b.intra_mode = m.at("intra_mode").get<int>();
      } else if (m.contains("mv")) {
        MotionInfo mi;
        mi.dx = m.at("mv").at(0).get<int>();
        mi.dy = m.at("mv").at(1).get<int>();
        mi.ref_poc = m.at("ref").get<int>();
        b.motion = mi;
      } else {
        throw format_error("unrecognized mode record");
      }
    }
    meta.blocks.push_back(std::move(b));
  }
  return meta;
}

inline std::string serialize_meta(const std::vector<FrameMeta>& metas) {
  std::ostringstream out;
  for (const auto& m : metas) out << meta_to_json(m).dump() << '\n';
  return out.str();
}

inline std::vector<FrameMeta> parse_meta(const std::string& text) {
  std::vector<FrameMeta> metas;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      metas.push_back(meta_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw format_error("meta line " + std::to_string(line_no) + ": " + e.what());
    } catch (const format_error& e) {
      throw format_error("meta line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return metas;
}

inline void write_meta_file(const std::vector<FrameMeta>& metas,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << serialize_meta(metas);
  if (!out) throw io_error("write failed on " + path);
}

inline std::vector<FrameMeta> read_meta_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_meta(buf.str());
}

}  // namespace paqe
