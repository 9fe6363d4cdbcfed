#pragma once

#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tilecraft/kvconfig.hpp"
#include "tilecraft/render.hpp"
#include "tilecraft/world.hpp"

namespace tilecraft {

enum class TaskFamily : std::uint8_t {
  Treechop,
  NavigateSparse,
  NavigateDense,
  ObtainIronPickaxe,
  ObtainCookedMeat,
  ObtainDiamond,
  Survival,
};

struct TaskId {
  TaskFamily family = TaskFamily::Treechop;
  AnimalKind meat = AnimalKind::Cow;  // only meaningful for ObtainCookedMeat

  // Wire/log code: 0 treechop, 1 navigate_sparse, 2 navigate_dense,
  // 3 obtain_iron_pickaxe, 4..7 obtain_cooked_meat_{cow,chicken,sheep,pig},
  // 8 obtain_diamond, 9 survival.
  std::uint8_t code() const;
  std::string name() const;

  static std::optional<TaskId> from_code(int code);
  // Throws ConfigError for unknown names.
  static TaskId parse(std::string_view name);

  bool is_navigate() const {
    return family == TaskFamily::NavigateSparse || family == TaskFamily::NavigateDense;
  }
  friend bool operator==(const TaskId&, const TaskId&) = default;
};

std::vector<TaskId> all_tasks();

struct RewardSchedule {
  std::map<ItemId, double> milestones;
  std::optional<ItemId> terminal_item;
};

struct ObservationSpec {
  std::vector<ItemId> inventory_items;
  bool compass = false;
};

struct TaskSpec {
  TaskId task_id;
  std::optional<RewardSchedule> schedule;
  int tick_cap = 2000;
  bool dense_navigation = false;
  int goal_distance = 0;
  std::map<ItemId, std::uint32_t> starting_inventory;
  ObservationSpec observation_spec;
  GenConfig generation;
  // Treechop: schedule item pays per unit and the episode succeeds at this many units.
  int unit_target = 0;
};

// Task defaults; `overrides` may set tick_cap, goal_distance and any GenConfig key.
TaskSpec make_task(TaskId task_id, const KvConfig& overrides = {});
TaskSpec make_task(std::string_view name, const KvConfig& overrides = {});

// FNV-1a 64 over the canonical little-endian serialization of the spec.
std::uint64_t spec_digest(const TaskSpec& spec);

// Throws NoScheduleError for Survival.
double max_score(const TaskSpec& spec);

struct Observation {
  Image pov;
  std::vector<std::uint32_t> inventory;
  double compass_angle = 0.0;  // radians, positive = goal to the right of facing
};

enum class DoneReason : std::uint8_t { None, Success, Death, TickCap };
std::string_view done_reason_name(DoneReason r);
std::optional<DoneReason> done_reason_from_name(std::string_view name);

struct EpisodeState {
  WorldState world;
  TaskSpec spec;
  std::bitset<kItemCount> achieved;
  double cumulative_score = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
  int units_collected = 0;
  double initial_distance = 0.0;
};

struct StepInfo {
  TickOutcome outcome;
  std::vector<ItemId> new_milestones;
  DoneReason done_reason = DoneReason::None;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// Episode start without rendering.
EpisodeState start_episode(const TaskSpec& spec, std::uint64_t seed);

// Advances the episode by one tick without rendering. Throws EpisodeOverError when done.
StepResult advance(EpisodeState& episode, Action action);

Observation observe(const EpisodeState& episode, const TexturePack& pack);

struct ResetResult {
  EpisodeState episode;
  Observation observation;
};
ResetResult reset(const TaskSpec& spec, std::uint64_t seed, const TexturePack& pack);

struct EnvStepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};
EnvStepResult env_step(EpisodeState& episode, Action action, const TexturePack& pack);

// Euclidean agent-goal distance quantized to a 2^-16 grid; dense rewards are
// differences of these values so per-tick rewards sum exactly in double.
double quantized_goal_distance(const WorldState& world);
double compass_angle(const WorldState& world);

// Environment interface shared by the plain and budget-metered environments.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual EnvStepResult step(Action action) = 0;
  virtual const EpisodeState& episode() const = 0;
  virtual const TaskSpec& spec() const = 0;
};

class TaskEnv : public Environment {
 public:
  TaskEnv(TaskSpec spec, TexturePack pack);

  Observation reset(std::uint64_t seed) override;
  EnvStepResult step(Action action) override;
  const EpisodeState& episode() const override { return episode_; }
  const TaskSpec& spec() const override { return spec_; }
  const TexturePack& pack() const { return pack_; }

 private:
  TaskSpec spec_;
  TexturePack pack_;
  EpisodeState episode_;
};

}  // namespace tilecraft
