#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tilecraft/trajectory.hpp"

namespace tilecraft {

struct TrajectoryMeta {
  std::string trajectory_id;
  TaskId task_id;
  PlayerKind player_kind = PlayerKind::Scripted;
  double total_score = 0.0;
  std::uint64_t duration_ticks = 0;
  int deaths = 0;
  int noop_count = 0;
  std::vector<std::pair<ItemId, std::uint64_t>> milestones;
  std::string pack_id;
  bool is_expert = false;

  friend bool operator==(const TrajectoryMeta&, const TrajectoryMeta&) = default;
};

std::string meta_to_json(const TrajectoryMeta& meta);
// Throws CorruptLogError on malformed input.
TrajectoryMeta meta_from_json(const std::string& text);

// 16 hex digits of spec_digest ^ world_seed ^ created_at.
std::string trajectory_id_for(const LogHeader& header);

// Creates root/<id>/{meta.json,log.mrlg}. Rewriting identical content is a
// no-op; a different log under the same id raises IntegrityError.
std::string write_trajectory(const std::filesystem::path& root, const TrajectoryLog& log,
                             const Annotation& annotation);

struct StoredTrajectory {
  TrajectoryLog log;
  TrajectoryMeta meta;
};
StoredTrajectory read_trajectory(const std::filesystem::path& root, const std::string& id);

struct CorpusEntryError {
  std::string trajectory_id;
  std::string message;
};

struct CorpusListing {
  std::vector<TrajectoryMeta> metas;  // sorted by id, is_expert recomputed corpus-wide
  std::vector<CorpusEntryError> errors;
};

// Reads every meta.json under root. is_expert is recomputed against the
// per-task expert threshold of the whole corpus.
CorpusListing list_corpus(const std::filesystem::path& root);

struct FilterResult {
  std::vector<std::string> ids;  // lexicographic
  std::vector<CorpusEntryError> errors;
};

FilterResult filter(const std::filesystem::path& root,
                    const std::function<bool(const TrajectoryMeta&)>& predicate);

// Tuple file (little-endian): "MRLT" u16 version u8 task u16 inventory_len
// u64 tick_count, then per tick: pov u8[12288], inventory u16[inventory_len],
// compass f32, action u8, reward f32, done u8.
inline constexpr std::uint16_t kTupleFormatVersion = 1;
inline constexpr std::size_t kTupleHeaderBytes = 4 + 2 + 1 + 2 + 8;

std::filesystem::path tuple_path(const std::filesystem::path& root, const std::string& id,
                                 const std::string& pack_id);

std::filesystem::path export_tuples(const std::filesystem::path& root, const std::string& id,
                                    const TexturePack& pack,
                                    const std::optional<TaskSpec>& spec = std::nullopt);

struct TupleHeader {
  TaskId task_id;
  std::uint16_t inventory_len = 0;
  std::uint64_t tick_count = 0;

  std::size_t record_bytes() const { return kPovBytes + 2u * inventory_len + 4 + 1 + 4 + 1; }
};

struct SampleBatch {
  std::size_t inventory_len = 0;
  std::vector<std::uint8_t> pov;         // size() * kPovBytes
  std::vector<std::uint16_t> inventory;  // size() * inventory_len
  std::vector<float> compass;
  std::vector<std::uint8_t> actions;
  std::vector<float> rewards;
  std::vector<std::uint8_t> dones;

  std::size_t size() const { return actions.size(); }
  const std::uint8_t* pov_at(std::size_t i) const { return pov.data() + i * kPovBytes; }
  const std::uint16_t* inventory_at(std::size_t i) const { return inventory.data() + i * inventory_len; }
};

// Random access over one tuple file.
class TupleReader {
 public:
  explicit TupleReader(const std::filesystem::path& path);

  const TupleHeader& header() const { return header_; }
  // Appends record `index` to `batch`.
  void read_into(std::uint64_t index, SampleBatch& batch);

 private:
  std::ifstream in_;
  TupleHeader header_;
  std::vector<std::uint8_t> record_;
};

// Shuffled minibatch stream across the tuple files of `ids`; missing files are
// exported on demand. Deterministic for a fixed shuffle_seed.
class BatchStream {
 public:
  BatchStream(const std::filesystem::path& root, std::vector<std::string> ids, const TexturePack& pack,
              std::size_t batch_size, std::uint64_t shuffle_seed);

  std::optional<SampleBatch> next();
  std::size_t total_tuples() const { return order_.size(); }

 private:
  std::vector<TupleReader> readers_;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
  std::size_t inventory_len_ = 0;
};

BatchStream load_batches(const std::filesystem::path& root, std::vector<std::string> ids,
                         const TexturePack& pack, std::size_t batch_size, std::uint64_t shuffle_seed);

}  // namespace tilecraft
