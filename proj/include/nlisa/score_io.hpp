#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "nlisa/error.hpp"
#include "nlisa/kg.hpp"
#include "nlisa/truth.hpp"

// Binary score files, little-endian:
//
//   "NLIS" | version u32 | |E| u64 | |R| u64 | storage u32 | payload
//
//   storage 0  dense raw scores      |R| x |E| x |E| f32, [r][a][b]; |R| counts base relations
//   storage 1  sparse top-k scores   per relation: rows u64, then per row
//                                    head u32 | k u32 | floor f32 | k x (tail u32, score f32)
//   storage 2  relation-tail table   |R| x |E| f32 over every relation id (reverses included)
//   storage 3  normalizer cache      |E| x |R| f64, [a][r]; |R| counts base relations

namespace nlisa {

static_assert(std::endian::native == std::endian::little, "score files assume a little-endian host");

enum class Storage : std::uint32_t { dense = 0, sparse_topk = 1, relation_tail = 2, normalizer_cache = 3 };

struct ScoreFileHeader {
  std::uint32_t version = 1;
  std::uint64_t num_entities = 0;
  std::uint64_t num_relations = 0;
  Storage storage = Storage::dense;
};

inline constexpr char kScoreMagic[4] = {'N', 'L', 'I', 'S'};
inline constexpr std::uint32_t kScoreVersion = 1;

namespace io {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("score file truncated");
  return v;
}

template <typename T>
void get_array(std::istream& in, std::vector<T>& out, std::size_t count) {
  out.resize(count);
  if (count && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count * sizeof(T))))
    throw DataError("score file truncated");
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

}  // namespace io

inline void write_header(std::ostream& out, const ScoreFileHeader& h) {
  out.write(kScoreMagic, 4);
  io::put<std::uint32_t>(out, h.version);
  io::put<std::uint64_t>(out, h.num_entities);
  io::put<std::uint64_t>(out, h.num_relations);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(h.storage));
}

inline ScoreFileHeader read_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kScoreMagic, 4) != 0) throw DataError("not a score file (bad magic)");
  ScoreFileHeader h;
  h.version = io::get<std::uint32_t>(in);
  if (h.version != kScoreVersion) throw DataError("unsupported score file version " + std::to_string(h.version));
  h.num_entities = io::get<std::uint64_t>(in);
  h.num_relations = io::get<std::uint64_t>(in);
  auto s = io::get<std::uint32_t>(in);
  if (s > 3) throw DataError("unknown storage flag " + std::to_string(s));
  h.storage = static_cast<Storage>(s);
  return h;
}

inline void write_scores(std::ostream& out, const RawScores& s) {
  write_header(out, {kScoreVersion, s.num_entities, s.num_relations, s.sparse ? Storage::sparse_topk : Storage::dense});
  if (!s.sparse) {
    io::put_array(out, s.dense);
    return;
  }
  for (std::size_t rel = 0; rel < s.num_relations; ++rel) {
    std::uint64_t count = 0;
    for (EntityId a = 0; a < s.num_entities; ++a) count += s.sparse_row(rel, a).present;
    io::put<std::uint64_t>(out, count);
    for (EntityId a = 0; a < s.num_entities; ++a) {
      const auto& row = s.sparse_row(rel, a);
      if (!row.present) continue;
      io::put<std::uint32_t>(out, a);
      io::put<std::uint32_t>(out, static_cast<std::uint32_t>(row.tails.size()));
      io::put<float>(out, row.floor);
      for (std::size_t k = 0; k < row.tails.size(); ++k) {
        io::put<std::uint32_t>(out, row.tails[k]);
        io::put<float>(out, row.scores[k]);
      }
    }
  }
}

inline RawScores read_scores(std::istream& in) {
  auto h = read_header(in);
  if (h.storage == Storage::dense) {
    std::vector<float> values;
    io::get_array(in, values, h.num_relations * h.num_entities * h.num_entities);
    return RawScores::make_dense(h.num_entities, h.num_relations, std::move(values));
  }
  if (h.storage != Storage::sparse_topk) throw DataError("score file does not hold raw scores");
  auto s = RawScores::make_sparse(h.num_entities, h.num_relations);
  for (std::size_t rel = 0; rel < h.num_relations; ++rel) {
    auto count = io::get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
      auto head = io::get<std::uint32_t>(in);
      if (head >= h.num_entities) throw DataError("sparse row head out of range");
      auto& row = s.sparse_row(rel, head);
      row.present = true;
      auto k = io::get<std::uint32_t>(in);
      row.floor = io::get<float>(in);
      row.tails.resize(k);
      row.scores.resize(k);
      for (std::uint32_t j = 0; j < k; ++j) {
        row.tails[j] = io::get<std::uint32_t>(in);
        row.scores[j] = io::get<float>(in);
      }
    }
  }
  s.validate();
  return s;
}

inline void write_relation_tail_table(std::ostream& out, std::size_t entities, std::size_t relations,
                                      const std::vector<float>& table) {
  write_header(out, {kScoreVersion, entities, relations, Storage::relation_tail});
  io::put_array(out, table);
}

inline std::vector<float> read_relation_tail_table(std::istream& in, const KnowledgeGraph& g) {
  auto h = read_header(in);
  if (h.storage != Storage::relation_tail) throw DataError("file is not a relation-tail table");
  if (h.num_entities != g.num_entities() || h.num_relations != g.num_relations())
    throw DataError("relation-tail table dimensions do not match the graph");
  std::vector<float> t;
  io::get_array(in, t, h.num_relations * h.num_entities);
  return t;
}

inline void write_cache(std::ostream& out, const CalibratedProvider& p, const KnowledgeGraph& g) {
  write_header(out, {kScoreVersion, g.num_entities(), g.num_base_relations(), Storage::normalizer_cache});
  io::put_array(out, p.cache());
}

inline std::vector<double> read_cache(std::istream& in, const KnowledgeGraph& g) {
  auto h = read_header(in);
  if (h.storage != Storage::normalizer_cache) throw DataError("file is not a normalizer cache");
  if (h.num_entities != g.num_entities() || h.num_relations != g.num_base_relations())
    throw DataError("normalizer cache dimensions do not match the graph");
  std::vector<double> c;
  io::get_array(in, c, h.num_entities * h.num_relations);
  return c;
}

// Header-only check of a raw score file against a graph.
inline ScoreFileHeader validate_score_file(std::istream& in, const KnowledgeGraph& g) {
  auto h = read_header(in);
  if (h.storage != Storage::dense && h.storage != Storage::sparse_topk)
    throw DataError("file does not hold raw scores");
  if (h.num_entities != g.num_entities())
    throw DataError("score file has " + std::to_string(h.num_entities) + " entities, graph has " +
                    std::to_string(g.num_entities()));
  if (h.num_relations != g.num_base_relations())
    throw DataError("score file has " + std::to_string(h.num_relations) + " relations, graph has " +
                    std::to_string(g.num_base_relations()) + " base relations");
  return h;
}

inline std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

// Loads raw scores and, when given, a saved normalizer cache and a
// relation-tail table.
inline std::unique_ptr<CalibratedProvider> build_cache(const KnowledgeGraph& g, const std::string& score_path,
                                                       const std::string& cache_path = {},
                                                       const std::string& tail_path = {},
                                                       CalibrationOptions opts = {}) {
  auto in = open_binary(score_path);
  auto raw = std::make_shared<const RawScores>(read_scores(in));
  std::unique_ptr<CalibratedProvider> p;
  if (!cache_path.empty()) {
    auto cin = open_binary(cache_path);
    p = std::make_unique<CalibratedProvider>(g, raw, read_cache(cin, g), opts);
  } else {
    p = std::make_unique<CalibratedProvider>(g, raw, opts);
  }
  if (!tail_path.empty()) {
    auto tin = open_binary(tail_path);
    p->set_relation_tail_table(read_relation_tail_table(tin, g));
  }
  return p;
}

}  // namespace nlisa
