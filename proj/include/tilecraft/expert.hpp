#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tilecraft/agents.hpp"

namespace tilecraft {

// What the expert is trying to do this tick.
struct Intent {
  enum class Kind : std::uint8_t {
    Done,
    Gather,   // face a cell of `cell` and attack it
    Hunt,     // face a live animal of `animal` and attack it
    Reach,    // stand within Chebyshev 1 of the navigation goal
    Station,  // stand next to a placed `cell` station
    Place,    // place the held `item`
    Craft,    // issue `action`
  };
  Kind kind = Kind::Done;
  CellType cell = CellType::Ground;
  AnimalKind animal = AnimalKind::Cow;
  ItemId item = ItemId::Log;
  Action action = Action::Noop;

  friend bool operator==(const Intent&, const Intent&) = default;
};

// Next intent towards holding `count` of `item`: walks the recipe DAG, handles
// tool gating and stations. Exposed for tests.
Intent plan_for(const EpisodeState& ep, ItemId item, std::uint32_t count, bool reuse_stations = true);

// Privileged demonstrator: reads the full world state, plans over the recipe
// DAG and moves along least-cost paths (turns and moves cost 1, water is
// penalised, minable obstacles cost their hit count).
class ScriptedExpert : public PrivilegedPolicy {
 public:
  // Throws ConfigError for Survival, which has no goal.
  explicit ScriptedExpert(TaskId task);

  Action act(const EpisodeState& episode) override;
  const Intent& intent() const { return intent_; }

 private:
  struct Pose {
    Cell pos;
    Facing facing;
    friend bool operator==(const Pose&, const Pose&) = default;
  };

  Intent choose_intent(const EpisodeState& ep);
  Action pursue(const EpisodeState& ep, const Intent& intent);
  bool plan_path(const WorldState& w, const Intent& intent, int max_cost);
  Action follow(const WorldState& w);
  Action wander(const WorldState& w);
  Action place(const WorldState& w, Action place_action);

  TaskId task_;
  Intent intent_;
  std::vector<Pose> path_;
  std::size_t path_index_ = 0;
  std::uint64_t planned_at_ = 0;
  std::uint64_t wander_until_ = 0;
  std::uint64_t ignore_stations_until_ = 0;
  bool wood_stocked_ = false;
};

}  // namespace tilecraft
