#include "tilecraft/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

#include "tilecraft/errors.hpp"
#include "tilecraft/rng.hpp"

namespace tilecraft {

Cell step_towards(Cell c, Facing f, int n) {
  switch (f) {
    case Facing::N: return {c.x, c.y - n};
    case Facing::E: return {c.x + n, c.y};
    case Facing::S: return {c.x, c.y + n};
    case Facing::W: return {c.x - n, c.y};
  }
  return c;
}

Facing turn_left(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 3) % 4); }
Facing turn_right(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 1) % 4); }

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

void GenConfig::validate() const {
  if (side < 16) throw ConfigError("grid side must be >= 16, got " + std::to_string(side));
  if (side > 4096) throw ConfigError("grid side must be <= 4096, got " + std::to_string(side));
  const std::pair<const char*, double> densities[] = {
      {"tree_density", tree_density},       {"stone_density", stone_density},
      {"iron_density", iron_density},       {"diamond_density", diamond_density},
      {"water_density", water_density},
  };
  double total = 0.0;
  for (auto [name, d] : densities) {
    if (!(d >= 0.0 && d <= 1.0))
      throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(d));
    total += d;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("resource densities sum to more than 1");
  if (animal_count < 0 || animal_count > kMaxAnimals)
    throw ConfigError("animal_count must lie in [0, 8], got " + std::to_string(animal_count));
}

void GenConfig::apply(const KvConfig& kv) {
  if (auto v = kv.get_int("side")) side = static_cast<int>(*v);
  if (auto v = kv.get_double("tree_density")) tree_density = *v;
  if (auto v = kv.get_double("stone_density")) stone_density = *v;
  if (auto v = kv.get_double("iron_density")) iron_density = *v;
  if (auto v = kv.get_double("diamond_density")) diamond_density = *v;
  if (auto v = kv.get_double("water_density")) water_density = *v;
  if (auto v = kv.get_int("animal_count")) animal_count = static_cast<int>(*v);
}

GenConfig GenConfig::from_kv(const KvConfig& kv) {
  GenConfig g;
  g.apply(kv);
  g.validate();
  return g;
}

int WorldState::animal_at(Cell c) const {
  for (std::size_t i = 0; i < animals.size(); ++i)
    if (animals[i].alive && animals[i].pos == c) return static_cast<int>(i);
  return -1;
}

bool WorldState::station_adjacent(CellType station) const {
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      Cell c{agent.pos.x + dx, agent.pos.y + dy};
      if (in_bounds(c) && at(c) == station) return true;
    }
  return false;
}

// Draw order: one uniform per interior cell (row-major), then agent position
// draws until a Ground cell, one draw for facing, then per animal one draw for
// its kind followed by position draws.
WorldState generate_world(std::uint64_t seed, const GenConfig& config) {
  config.validate();
  WorldState w;
  w.side = config.side;
  w.grid.assign(static_cast<std::size_t>(w.side) * w.side, CellType::Ground);
  SplitMix64 rng(seed);

  const double t_tree = config.tree_density;
  const double t_stone = t_tree + config.stone_density;
  const double t_iron = t_stone + config.iron_density;
  const double t_diamond = t_iron + config.diamond_density;
  const double t_water = t_diamond + config.water_density;

  for (int y = 0; y < w.side; ++y) {
    for (int x = 0; x < w.side; ++x) {
      CellType& cell = w.at({x, y});
      if (x == 0 || y == 0 || x == w.side - 1 || y == w.side - 1) {
        cell = CellType::Wall;
        continue;
      }
      double u = rng.uniform();
      if (u < t_tree) cell = CellType::Tree;
      else if (u < t_stone) cell = CellType::Stone;
      else if (u < t_iron) cell = CellType::IronOreBlock;
      else if (u < t_diamond) cell = CellType::DiamondOreBlock;
      else if (u < t_water) cell = CellType::Water;
    }
  }

  const auto interior = static_cast<std::uint64_t>(w.side - 2);
  auto draw_cell = [&] {
    int x = 1 + static_cast<int>(rng.below(interior));
    int y = 1 + static_cast<int>(rng.below(interior));
    return Cell{x, y};
  };

  bool placed = false;
  for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
    Cell c = draw_cell();
    if (w.at(c) == CellType::Ground) {
      w.agent.pos = c;
      placed = true;
    }
  }
  if (!placed) {
    // Nearly saturated configs: take the first Ground cell, or clear the centre.
    auto it = std::find(w.grid.begin(), w.grid.end(), CellType::Ground);
    if (it != w.grid.end()) {
      auto idx = static_cast<int>(it - w.grid.begin());
      w.agent.pos = {idx % w.side, idx / w.side};
    } else {
      w.agent.pos = {w.side / 2, w.side / 2};
      w.at(w.agent.pos) = CellType::Ground;
    }
  }
  w.agent.facing = static_cast<Facing>(rng.below(4));

  for (int i = 0; i < config.animal_count; ++i) {
    auto kind = static_cast<AnimalKind>(rng.below(kAnimalKindCount));
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Cell c = draw_cell();
      if (w.at(c) == CellType::Ground && c != w.agent.pos && w.animal_at(c) < 0) {
        w.animals.push_back({kind, c, true});
        break;
      }
    }
  }

  w.rng_state = rng.state();
  return w;
}

namespace {

void add_item(WorldState& s, TickOutcome& out, ItemId item, int n) {
  s.agent.inventory[code(item)] += static_cast<std::uint32_t>(n);
  out.acquired.emplace_back(item, n);
}

bool has_inputs(const Inventory& inv, const Recipe& r) {
  for (auto [item, n] : r.ingredients())
    if (inv[code(item)] < static_cast<std::uint32_t>(n)) return false;
  return true;
}

bool station_ok(const WorldState& s, Station station) {
  switch (station) {
    case Station::None: return true;
    case Station::Table: return s.station_adjacent(CellType::PlacedTable);
    case Station::Furnace: return s.station_adjacent(CellType::PlacedFurnace);
  }
  return false;
}

bool apply_recipe(WorldState& s, TickOutcome& out, const Recipe& r) {
  if (!has_inputs(s.agent.inventory, r) || !station_ok(s, r.station)) return false;
  for (auto [item, n] : r.ingredients()) {
    s.agent.inventory[code(item)] -= static_cast<std::uint32_t>(n);
    out.consumed.emplace_back(item, n);
  }
  add_item(s, out, r.output, r.output_count);
  return true;
}

bool place_station(WorldState& s, TickOutcome& out, ItemId item, CellType placed) {
  if (s.agent.count(item) == 0) return false;
  Cell f = s.faced_cell();
  if (!s.in_bounds(f) || s.at(f) != CellType::Ground || s.animal_at(f) >= 0) return false;
  s.at(f) = placed;
  s.agent.inventory[code(item)] -= 1;
  out.placed.emplace_back(item, 1);
  out.cell_changed = {f, placed};
  return true;
}

bool walkable(const WorldState& s, Cell c) {
  if (!s.in_bounds(c)) return false;
  CellType t = s.at(c);
  return (t == CellType::Ground || t == CellType::Water) && s.animal_at(c) < 0;
}

void attack(WorldState& s, TickOutcome& out) {
  Cell f = s.faced_cell();
  if (int a = s.animal_at(f); a >= 0) {
    s.animals[a].alive = false;
    s.mining_progress.reset();
    add_item(s, out, raw_meat(s.animals[a].kind), 1);
    return;
  }
  const int tier = pickaxe_tier(s.agent.inventory);
  int hits = 0;
  ItemId drop = ItemId::Log;
  switch (s.at_or_wall(f)) {
    case CellType::Tree:
      hits = s.agent.count(ItemId::IronAxe) > 0 ? 1 : 3;
      drop = ItemId::Log;
      break;
    case CellType::Stone:
      hits = tier >= 1 ? 4 : 0;
      drop = ItemId::Cobblestone;
      break;
    case CellType::IronOreBlock:
      hits = tier >= 2 ? 4 : 0;
      drop = ItemId::IronOre;
      break;
    case CellType::DiamondOreBlock:
      hits = tier >= 3 ? 4 : 0;
      drop = ItemId::Diamond;
      break;
    default: break;
  }
  if (hits == 0) {
    s.mining_progress.reset();
    return;
  }
  int remaining = (s.mining_progress && s.mining_progress->target == f)
                      ? s.mining_progress->hits_remaining - 1
                      : hits - 1;
  if (remaining > 0) {
    s.mining_progress = MiningProgress{f, remaining};
    return;
  }
  s.mining_progress.reset();
  s.at(f) = CellType::Ground;
  out.cell_changed = {f, CellType::Ground};
  add_item(s, out, drop, 1);
}

void move_animals(WorldState& s) {
  SplitMix64 rng(s.rng_state);
  for (auto& animal : s.animals) {
    if (!animal.alive) continue;
    auto d = rng.below(5);
    if (d == 0) continue;
    Cell target = step_towards(animal.pos, static_cast<Facing>(d - 1));
    if (s.in_bounds(target) && s.at(target) == CellType::Ground && target != s.agent.pos &&
        s.animal_at(target) < 0)
      animal.pos = target;
  }
  s.rng_state = rng.state();
}

}  // namespace

TickOutcome step_in_place(WorldState& s, Action action) {
  if (!s.agent.alive) throw EpisodeOverError("step on a dead agent");
  TickOutcome out;
  const Inventory before = s.agent.inventory;
  s.tick += 1;
  if (action != Action::Attack) s.mining_progress.reset();

  switch (action) {
    case Action::Noop: break;
    case Action::Forward:
    case Action::Backward: {
      Facing dir = s.agent.facing;
      if (action == Action::Backward) dir = turn_right(turn_right(dir));
      Cell target = step_towards(s.agent.pos, dir);
      if (walkable(s, target)) s.agent.pos = target;
      break;
    }
    case Action::TurnLeft: s.agent.facing = turn_left(s.agent.facing); break;
    case Action::TurnRight: s.agent.facing = turn_right(s.agent.facing); break;
    case Action::Attack: attack(s, out); break;
    case Action::PlaceTable:
      out.action_effective = place_station(s, out, ItemId::CraftingTable, CellType::PlacedTable);
      break;
    case Action::PlaceFurnace:
      if (s.agent.count(ItemId::Furnace) > 0)
        out.action_effective = place_station(s, out, ItemId::Furnace, CellType::PlacedFurnace);
      else
        out.action_effective = apply_recipe(s, out, *recipe_producing(ItemId::Furnace));
      break;
    case Action::SmeltMeat: {
      out.action_effective = false;
      for (int k = 0; k < kAnimalKindCount; ++k) {
        auto kind = static_cast<AnimalKind>(k);
        if (s.agent.count(raw_meat(kind)) > 0) {
          out.action_effective = apply_recipe(s, out, *recipe_producing(cooked_meat(kind)));
          break;
        }
      }
      break;
    }
    default:
      out.action_effective = apply_recipe(s, out, *recipe_for(action));
      break;
  }

  if (s.at(s.agent.pos) == CellType::Water) {
    if (++s.agent.submerged_ticks > kDrownAfterTicks) {
      s.agent.alive = false;
      out.died = true;
    }
  } else {
    s.agent.submerged_ticks = 0;
  }

  if (s.tick % kAnimalMovePeriod == 0) move_animals(s);

  for (int i = 0; i < kItemCount; ++i)
    if (before[i] == 0 && s.agent.inventory[i] > 0)
      out.first_acquisitions.push_back(static_cast<ItemId>(i));
  return out;
}

namespace {

struct VectorSink {
  std::vector<std::uint8_t>& out;
  void put(const std::uint8_t* p, std::size_t n) { out.insert(out.end(), p, p + n); }
};

struct FnvSink {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void put(const std::uint8_t* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  }
};

template <typename Sink, typename T>
void put_le(Sink& sink, T value) {
  std::uint8_t buf[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<std::uint8_t>(u >> (8 * i));
  sink.put(buf, sizeof(T));
}

template <typename Sink>
void serialize(const WorldState& s, Sink& sink) {
  static_assert(sizeof(CellType) == 1);
  sink.put(reinterpret_cast<const std::uint8_t*>(s.grid.data()), s.grid.size());

  put_le<Sink, std::int32_t>(sink, s.agent.pos.x);
  put_le<Sink, std::int32_t>(sink, s.agent.pos.y);
  put_le<Sink, std::uint8_t>(sink, static_cast<std::uint8_t>(s.agent.facing));
  for (auto c : s.agent.inventory) put_le<Sink, std::uint32_t>(sink, c);
  put_le<Sink, std::uint8_t>(sink, s.agent.alive ? 1 : 0);
  put_le<Sink, std::uint32_t>(sink, s.agent.submerged_ticks);

  std::vector<const Animal*> sorted;
  sorted.reserve(s.animals.size());
  for (const auto& a : s.animals) sorted.push_back(&a);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Animal* a, const Animal* b) {
    return std::tuple(a->kind, a->pos.x, a->pos.y) < std::tuple(b->kind, b->pos.x, b->pos.y);
  });
  put_le<Sink, std::uint32_t>(sink, static_cast<std::uint32_t>(sorted.size()));
  for (const Animal* a : sorted) {
    put_le<Sink, std::uint8_t>(sink, static_cast<std::uint8_t>(a->kind));
    put_le<Sink, std::int32_t>(sink, a->pos.x);
    put_le<Sink, std::int32_t>(sink, a->pos.y);
    put_le<Sink, std::uint8_t>(sink, a->alive ? 1 : 0);
  }

  put_le<Sink, std::uint64_t>(sink, s.tick);
  put_le<Sink, std::uint64_t>(sink, s.rng_state);

  put_le<Sink, std::uint8_t>(sink, s.mining_progress ? 1 : 0);
  if (s.mining_progress) {
    put_le<Sink, std::int32_t>(sink, s.mining_progress->target.x);
    put_le<Sink, std::int32_t>(sink, s.mining_progress->target.y);
    put_le<Sink, std::int32_t>(sink, s.mining_progress->hits_remaining);
  }
  put_le<Sink, std::uint8_t>(sink, s.navigate_goal ? 1 : 0);
  if (s.navigate_goal) {
    put_le<Sink, std::int32_t>(sink, s.navigate_goal->x);
    put_le<Sink, std::int32_t>(sink, s.navigate_goal->y);
  }
}

}  // namespace

std::vector<std::uint8_t> canonical_bytes(const WorldState& state) {
  std::vector<std::uint8_t> out;
  out.reserve(state.grid.size() + 256);
  VectorSink sink{out};
  serialize(state, sink);
  return out;
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t basis) {
  FnvSink sink{basis};
  sink.put(data, size);
  return sink.h;
}

std::uint64_t state_hash(const WorldState& state) {
  FnvSink sink;
  serialize(state, sink);
  return sink.h;
}

std::size_t count_cells(const WorldState& state, CellType type) {
  return static_cast<std::size_t>(std::count(state.grid.begin(), state.grid.end(), type));
}

}  // namespace tilecraft
