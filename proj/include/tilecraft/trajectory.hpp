#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tilecraft/task.hpp"

namespace tilecraft {

enum class PlayerKind : std::uint8_t { Human, Scripted, Agent };
std::string_view player_kind_name(PlayerKind k);
std::optional<PlayerKind> player_kind_from_name(std::string_view name);

inline constexpr std::uint16_t kLogFormatVersion = 1;

struct LogHeader {
  std::uint16_t format_version = kLogFormatVersion;
  TaskId task_id;
  bool truncated = false;
  std::uint64_t world_seed = 0;
  std::uint64_t spec_digest = 0;
  std::uint64_t created_at = 0;  // unix seconds
  PlayerKind player_kind = PlayerKind::Scripted;
  std::string pack_id;  // at most 16 bytes
};

// Event-sourced demonstration: seed + one action per tick.
struct TrajectoryLog {
  LogHeader header;
  std::vector<Action> actions;
};

// Bit-exact little-endian codec:
//   "MRLG" u16 format_version u8 task u8 flags(bit0 truncated) u64 world_seed
//   u64 spec_digest u64 created_at u8 player_kind u8[16] pack_id u64 count u8[count]
std::vector<std::uint8_t> encode_log(const TrajectoryLog& log);
// Throws CorruptLogError (bad magic, short data, unknown codes) or
// IncompatibleVersionError (format_version != 1).
TrajectoryLog decode_log(std::span<const std::uint8_t> bytes);

void write_log(const TrajectoryLog& log, const std::filesystem::path& path);
TrajectoryLog read_log(const std::filesystem::path& path);

// Per-tick action supplier; nullopt means the stream closed (log truncated).
using ActionStream = std::function<std::optional<Action>(const EpisodeState&)>;

struct RecordOptions {
  PlayerKind player_kind = PlayerKind::Scripted;
  std::uint64_t created_at = 0;
  std::string pack_id;
  std::optional<std::size_t> max_ticks;  // stop early, flagged truncated
};

struct Recording {
  TrajectoryLog log;
  std::vector<std::uint64_t> state_hashes;  // after each tick
  std::vector<double> rewards;
  EpisodeState final_episode;
};

Recording record(const TaskSpec& spec, std::uint64_t seed, const ActionStream& stream,
                 const RecordOptions& options = {});

struct ReplayStep {
  const WorldState* state = nullptr;  // after the action; valid until the next call
  Action action = Action::Noop;
  double reward = 0.0;
  bool done = false;
  const StepInfo* info = nullptr;
};

// Deterministic resimulation of a log. `spec` defaults to the task's defaults;
// its digest must match the header's.
class Replayer {
 public:
  explicit Replayer(const TrajectoryLog& log, std::optional<TaskSpec> spec = std::nullopt);

  std::optional<ReplayStep> next();
  const EpisodeState& episode() const { return episode_; }
  std::size_t position() const { return position_; }

 private:
  TrajectoryLog log_;
  EpisodeState episode_;
  StepInfo info_;
  std::size_t position_ = 0;
};

// Resolves the TaskSpec for a log; throws IncompatibleVersionError on digest mismatch.
TaskSpec spec_for_log(const LogHeader& header, const std::optional<TaskSpec>& spec = std::nullopt);

std::vector<std::uint64_t> replay_hashes(const TrajectoryLog& log,
                                         const std::optional<TaskSpec>& spec = std::nullopt);

struct RenderedStep {
  const Observation* observation = nullptr;  // seen before the action
  Action action = Action::Noop;
  double reward = 0.0;
  bool done = false;
};

// Replay that renders each pre-action observation with `pack`.
class Rerenderer {
 public:
  Rerenderer(const TrajectoryLog& log, TexturePack pack, std::optional<TaskSpec> spec = std::nullopt);

  std::optional<RenderedStep> next();
  const EpisodeState& episode() const { return replayer_.episode(); }

 private:
  Replayer replayer_;
  TexturePack pack_;
  Observation obs_;
};

struct Annotation {
  double total_score = 0.0;
  std::vector<std::pair<std::uint64_t, double>> per_tick_rewards;  // nonzero only
  std::vector<std::pair<ItemId, std::uint64_t>> milestones;        // first acquisitions
  int deaths = 0;
  int noop_count = 0;
  std::uint64_t duration_ticks = 0;
  DoneReason done_reason = DoneReason::None;
};

Annotation annotate(const TrajectoryLog& log, const std::optional<TaskSpec>& spec = std::nullopt);

struct PrecedenceGraph {
  std::vector<ItemId> nodes;  // sorted by code
  std::map<std::pair<ItemId, ItemId>, int> edge_counts;

  int count(ItemId a, ItemId b) const {
    auto it = edge_counts.find({a, b});
    return it == edge_counts.end() ? 0 : it->second;
  }
};

PrecedenceGraph precedence_graph(std::span<const Annotation> annotations);
PrecedenceGraph precedence_graph(std::span<const TrajectoryLog> logs);

struct LengthHistogram {
  std::uint64_t bin_width = 0;
  std::map<std::uint64_t, int> bins;  // bin start -> count
  std::optional<double> expert_threshold;  // 1.5 x median scripted duration
};

struct DurationSample {
  std::uint64_t duration_ticks = 0;
  PlayerKind player_kind = PlayerKind::Scripted;
};

LengthHistogram length_histogram(std::span<const DurationSample> samples, std::uint64_t bin_width);
LengthHistogram length_histogram(std::span<const TrajectoryLog> logs, std::uint64_t bin_width);

// 1.5 x median duration of the scripted samples; nullopt when there are none.
std::optional<double> expert_threshold(std::span<const DurationSample> samples);

// CSV and SVG report writers.
void write_histogram_csv(const LengthHistogram& h, const std::filesystem::path& path);
void write_histogram_svg(const LengthHistogram& h, const std::filesystem::path& path);
void write_precedence_csv(const PrecedenceGraph& g, const std::filesystem::path& path);
void write_precedence_svg(const PrecedenceGraph& g, const std::filesystem::path& path);

}  // namespace tilecraft
