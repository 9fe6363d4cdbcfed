#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tilecraft/items.hpp"
#include "tilecraft/kvconfig.hpp"

namespace tilecraft {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

Cell step_towards(Cell c, Facing f, int n = 1);
Facing turn_left(Facing f);
Facing turn_right(Facing f);
int chebyshev(Cell a, Cell b);

// Procedural generation profile. Densities are per-cell probabilities for the
// interior; whatever is left over becomes Ground.
struct GenConfig {
  int side = 64;
  double tree_density = 0.06;
  double stone_density = 0.10;
  double iron_density = 0.01;
  double diamond_density = 0.0005;
  double water_density = 0.004;
  int animal_count = 8;

  void validate() const;
  // Applies recognised keys from `kv` (side, *_density, animal_count).
  void apply(const KvConfig& kv);
  static GenConfig from_kv(const KvConfig& kv);
};

inline constexpr int kMaxAnimals = 8;
inline constexpr int kDrownAfterTicks = 10;
inline constexpr int kAnimalMovePeriod = 4;

struct Animal {
  AnimalKind kind = AnimalKind::Cow;
  Cell pos;
  bool alive = true;
  friend bool operator==(const Animal&, const Animal&) = default;
};

using Inventory = std::array<std::uint32_t, kItemCount>;

struct AgentState {
  Cell pos;
  Facing facing = Facing::N;
  Inventory inventory{};
  bool alive = true;
  std::uint32_t submerged_ticks = 0;
  friend bool operator==(const AgentState&, const AgentState&) = default;

  std::uint32_t count(ItemId item) const { return inventory[code(item)]; }
};

struct MiningProgress {
  Cell target;
  int hits_remaining = 0;
  friend bool operator==(const MiningProgress&, const MiningProgress&) = default;
};

struct WorldState {
  int side = 0;
  std::vector<CellType> grid;  // row-major, index y * side + x
  AgentState agent;
  std::vector<Animal> animals;
  std::uint64_t tick = 0;
  std::uint64_t rng_state = 0;
  std::optional<MiningProgress> mining_progress;
  std::optional<Cell> navigate_goal;

  friend bool operator==(const WorldState&, const WorldState&) = default;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < side && c.y < side; }
  CellType at(Cell c) const { return grid[static_cast<std::size_t>(c.y) * side + c.x]; }
  CellType& at(Cell c) { return grid[static_cast<std::size_t>(c.y) * side + c.x]; }
  // Out-of-bounds reads as Wall.
  CellType at_or_wall(Cell c) const { return in_bounds(c) ? at(c) : CellType::Wall; }

  // Index of a live animal at `c`, or -1.
  int animal_at(Cell c) const;
  Cell faced_cell() const { return step_towards(agent.pos, agent.facing); }
  bool station_adjacent(CellType station) const;
};

struct TickOutcome {
  std::vector<std::pair<ItemId, int>> acquired;
  std::vector<std::pair<ItemId, int>> consumed;  // recipe inputs
  std::vector<std::pair<ItemId, int>> placed;
  bool died = false;
  std::optional<std::pair<Cell, CellType>> cell_changed;
  std::vector<ItemId> first_acquisitions;  // count went 0 -> positive this tick
  // False for a craft/place/smelt action that could not be carried out.
  bool action_effective = true;
};

WorldState generate_world(std::uint64_t seed, const GenConfig& config);

// Advances `state` in place by one tick. Throws EpisodeOverError on a dead agent.
TickOutcome step_in_place(WorldState& state, Action action);

inline std::pair<WorldState, TickOutcome> step(WorldState state, Action action) {
  TickOutcome outcome = step_in_place(state, action);
  return {std::move(state), std::move(outcome)};
}

// Canonical little-endian serialization used by state_hash:
//   grid cells (u8, row-major)
//   agent: pos x,y (i32), facing (u8), inventory (21 x u32), alive (u8), submerged_ticks (u32)
//   animals sorted by (kind, x, y): count (u32), then kind (u8), x, y (i32), alive (u8)
//   tick (u64), rng_state (u64)
//   mining_progress: flag (u8) [x, y, hits_remaining (i32)]
//   navigate_goal: flag (u8) [x, y (i32)]
std::vector<std::uint8_t> canonical_bytes(const WorldState& state);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ull);

std::uint64_t state_hash(const WorldState& state);

std::size_t count_cells(const WorldState& state, CellType type);

}  // namespace tilecraft
