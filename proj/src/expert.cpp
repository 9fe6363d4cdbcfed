#include "tilecraft/expert.hpp"

#include <queue>

#include "tilecraft/errors.hpp"

namespace tilecraft {

namespace {

using enum ItemId;

constexpr int kStationSearchRadius = 12;
constexpr int kWaterPenalty = 4;
constexpr int kWoodStock = 5;
constexpr std::uint64_t kWanderTicks = 30;
constexpr std::uint64_t kReplanEvery = 200;

Action craft_action(ItemId item) {
  switch (item) {
    case Planks: return Action::CraftPlanks;
    case Stick: return Action::CraftStick;
    case CraftingTable: return Action::CraftTable;
    case WoodenPickaxe: return Action::CraftWoodenPickaxe;
    case StonePickaxe: return Action::CraftStonePickaxe;
    case IronPickaxe: return Action::CraftIronPickaxe;
    case IronIngot: return Action::SmeltIronIngot;
    case Furnace: return Action::PlaceFurnace;
    default: return Action::SmeltMeat;
  }
}

bool station_nearby(const WorldState& w, CellType station) {
  for (int dy = -kStationSearchRadius; dy <= kStationSearchRadius; ++dy)
    for (int dx = -kStationSearchRadius; dx <= kStationSearchRadius; ++dx) {
      Cell c{w.agent.pos.x + dx, w.agent.pos.y + dy};
      if (w.in_bounds(c) && w.at(c) == station) return true;
    }
  return false;
}

struct Planner {
  const EpisodeState& ep;
  bool reuse_stations;

  std::optional<Intent> need_station(Station station) const {
    if (station == Station::None) return std::nullopt;
    const CellType cell = station == Station::Table ? CellType::PlacedTable : CellType::PlacedFurnace;
    const ItemId item = station == Station::Table ? CraftingTable : Furnace;
    const WorldState& w = ep.world;
    if (w.station_adjacent(cell)) return std::nullopt;
    if (reuse_stations && station_nearby(w, cell)) return Intent{.kind = Intent::Kind::Station, .cell = cell};
    if (w.agent.count(item) > 0) return Intent{.kind = Intent::Kind::Place, .item = item};
    return need(item, 1);
  }

  std::optional<Intent> gather(CellType cell, int tier, ItemId tool) const {
    if (pickaxe_tier(ep.world.agent.inventory) < tier) return need(tool, 1);
    return Intent{.kind = Intent::Kind::Gather, .cell = cell};
  }

  std::optional<Intent> need(ItemId item, std::uint32_t count) const {
    const auto have = ep.world.agent.count(item);
    if (have >= count) return std::nullopt;
    switch (item) {
      case Log: return Intent{.kind = Intent::Kind::Gather, .cell = CellType::Tree};
      case Cobblestone: return gather(CellType::Stone, 1, WoodenPickaxe);
      case IronOre: return gather(CellType::IronOreBlock, 2, StonePickaxe);
      case Diamond: return gather(CellType::DiamondOreBlock, 3, IronPickaxe);
      case RawMeatCow: return Intent{.kind = Intent::Kind::Hunt, .animal = AnimalKind::Cow};
      case RawMeatChicken: return Intent{.kind = Intent::Kind::Hunt, .animal = AnimalKind::Chicken};
      case RawMeatSheep: return Intent{.kind = Intent::Kind::Hunt, .animal = AnimalKind::Sheep};
      case RawMeatPig: return Intent{.kind = Intent::Kind::Hunt, .animal = AnimalKind::Pig};
      default: break;
    }
    const Recipe* r = recipe_producing(item);
    if (!r) return Intent{};  // nothing produces it
    const auto crafts = (count - have + r->output_count - 1) / r->output_count;
    for (auto [input, n] : r->ingredients())
      if (auto sub = need(input, static_cast<std::uint32_t>(n) * crafts)) return sub;
    if (auto sub = need_station(r->station)) return sub;
    return Intent{.kind = Intent::Kind::Craft, .action = craft_action(item)};
  }
};

bool walkable(const WorldState& w, Cell c) {
  if (!w.in_bounds(c)) return false;
  const CellType t = w.at(c);
  return (t == CellType::Ground || t == CellType::Water) && w.animal_at(c) < 0;
}

// Hits needed to clear `c`, 0 when it cannot be mined with the current tools.
int mine_hits(const WorldState& w, Cell c) {
  if (!w.in_bounds(c) || w.animal_at(c) >= 0) return 0;
  const int tier = pickaxe_tier(w.agent.inventory);
  switch (w.at(c)) {
    case CellType::Tree: return w.agent.count(IronAxe) > 0 ? 1 : 3;
    case CellType::Stone: return tier >= 1 ? 4 : 0;
    case CellType::IronOreBlock: return tier >= 2 ? 4 : 0;
    case CellType::DiamondOreBlock: return tier >= 3 ? 4 : 0;
    default: return 0;
  }
}

bool goal_reached(const WorldState& w, const Intent& intent, Cell pos, Facing facing) {
  const Cell front = step_towards(pos, facing);
  switch (intent.kind) {
    case Intent::Kind::Gather: return w.at_or_wall(front) == intent.cell && w.animal_at(front) < 0;
    case Intent::Kind::Hunt: {
      const int a = w.animal_at(front);
      return a >= 0 && w.animals[a].kind == intent.animal;
    }
    case Intent::Kind::Reach: return w.navigate_goal && chebyshev(pos, *w.navigate_goal) <= 1;
    case Intent::Kind::Station:
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (w.at_or_wall({pos.x + dx, pos.y + dy}) == intent.cell) return true;
      return false;
    default: return true;
  }
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  SplitMix64 r(a * 0x9e3779b97f4a7c15ull ^ b);
  return r.next();
}

}  // namespace

Intent plan_for(const EpisodeState& ep, ItemId item, std::uint32_t count, bool reuse_stations) {
  return Planner{ep, reuse_stations}.need(item, count).value_or(Intent{});
}

ScriptedExpert::ScriptedExpert(TaskId task) : task_(task) {
  if (task.family == TaskFamily::Survival) throw ConfigError("the scripted expert needs a task with a goal");
}

Intent ScriptedExpert::choose_intent(const EpisodeState& ep) {
  const WorldState& w = ep.world;
  switch (task_.family) {
    case TaskFamily::Treechop: return {.kind = Intent::Kind::Gather, .cell = CellType::Tree};
    case TaskFamily::NavigateSparse:
    case TaskFamily::NavigateDense: return {.kind = Intent::Kind::Reach};
    default: break;
  }
  // Stock up on wood before starting the craft chain to save trips.
  if (!wood_stocked_) {
    if (w.agent.count(Log) < kWoodStock && w.agent.count(Planks) == 0)
      return {.kind = Intent::Kind::Gather, .cell = CellType::Tree};
    wood_stocked_ = true;
  }
  ItemId target = Diamond;
  if (task_.family == TaskFamily::ObtainIronPickaxe) target = IronPickaxe;
  if (task_.family == TaskFamily::ObtainCookedMeat) target = cooked_meat(task_.meat);
  return plan_for(ep, target, 1, w.tick >= ignore_stations_until_);
}

Action ScriptedExpert::act(const EpisodeState& ep) {
  if (ep.world.tick == 0) {
    path_.clear();
    wood_stocked_ = false;
    wander_until_ = 0;
    ignore_stations_until_ = 0;
  }
  const Intent next = choose_intent(ep);
  if (!(next == intent_)) path_.clear();
  intent_ = next;
  return pursue(ep, intent_);
}

Action ScriptedExpert::pursue(const EpisodeState& ep, const Intent& intent) {
  const WorldState& w = ep.world;
  switch (intent.kind) {
    case Intent::Kind::Done: return Action::Noop;
    case Intent::Kind::Craft: return intent.action;
    case Intent::Kind::Place:
      return place(w, intent.item == CraftingTable ? Action::PlaceTable : Action::PlaceFurnace);
    default: break;
  }
  if (goal_reached(w, intent, w.agent.pos, w.agent.facing)) {
    path_.clear();
    return intent.kind == Intent::Kind::Gather || intent.kind == Intent::Kind::Hunt ? Action::Attack : Action::Noop;
  }
  if (w.tick < wander_until_) return wander(w);

  const Pose here{w.agent.pos, w.agent.facing};
  bool valid = !path_.empty() && w.tick - planned_at_ < kReplanEvery &&
               goal_reached(w, intent, path_.back().pos, path_.back().facing);
  if (valid && path_[path_index_] != here) {
    if (path_index_ + 1 < path_.size() && path_[path_index_ + 1] == here) ++path_index_;
    else valid = false;
  }
  if (!valid) {
    const int max_cost = intent.kind == Intent::Kind::Station ? 4 * kStationSearchRadius : 1 << 30;
    if (!plan_path(w, intent, max_cost)) {
      if (intent.kind == Intent::Kind::Station) {
        // Too far to walk back: build a new one instead.
        ignore_stations_until_ = w.tick + kReplanEvery;
        return Action::Noop;
      }
      wander_until_ = w.tick + kWanderTicks;
      return wander(w);
    }
  }
  return follow(w);
}

bool ScriptedExpert::plan_path(const WorldState& w, const Intent& intent, int max_cost) {
  const int side = w.side;
  const auto index = [side](Cell c, Facing f) { return (c.y * side + c.x) * 4 + static_cast<int>(f); };
  const std::size_t n = static_cast<std::size_t>(side) * side * 4;
  std::vector<int> dist(n, -1), parent(n, -1);
  using Entry = std::pair<int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int start = index(w.agent.pos, w.agent.facing);
  dist[start] = 0;
  open.push({0, start});
  int found = -1;
  std::vector<bool> closed(n, false);

  while (!open.empty()) {
    auto [d, s] = open.top();
    open.pop();
    if (closed[s]) continue;
    closed[s] = true;
    const Cell c{(s / 4) % side, (s / 4) / side};
    const auto f = static_cast<Facing>(s % 4);
    if (goal_reached(w, intent, c, f)) {
      found = s;
      break;
    }
    auto relax = [&](int t, int cost) {
      if (d + cost > max_cost) return;
      if (dist[t] < 0 || d + cost < dist[t]) {
        dist[t] = d + cost;
        parent[t] = s;
        open.push({d + cost, t});
      }
    };
    relax(index(c, turn_left(f)), 1);
    relax(index(c, turn_right(f)), 1);
    const Cell ahead = step_towards(c, f);
    if (walkable(w, ahead)) relax(index(ahead, f), w.at(ahead) == CellType::Water ? 1 + kWaterPenalty : 1);
    else if (int hits = mine_hits(w, ahead); hits > 0) relax(index(ahead, f), hits + 1);
  }
  if (found < 0) return false;

  path_.clear();
  for (int s = found; s >= 0; s = parent[s])
    path_.push_back({{(s / 4) % side, (s / 4) / side}, static_cast<Facing>(s % 4)});
  std::reverse(path_.begin(), path_.end());
  path_index_ = 0;
  planned_at_ = w.tick;
  return true;
}

Action ScriptedExpert::follow(const WorldState& w) {
  if (path_index_ + 1 >= path_.size()) return Action::Noop;
  const Pose& next = path_[path_index_ + 1];
  if (next.facing != w.agent.facing)
    return next.facing == turn_left(w.agent.facing) ? Action::TurnLeft : Action::TurnRight;
  if (walkable(w, next.pos)) return Action::Forward;
  if (mine_hits(w, next.pos) > 0) return Action::Attack;
  // An animal stepped into the way.
  path_.clear();
  return Action::Noop;
}

Action ScriptedExpert::wander(const WorldState& w) {
  const std::uint64_t r = mix(w.tick, static_cast<std::uint64_t>(w.agent.pos.x * 4096 + w.agent.pos.y));
  if (walkable(w, w.faced_cell()) && w.at(w.faced_cell()) == CellType::Ground && r % 4 != 0)
    return Action::Forward;
  return r % 2 ? Action::TurnLeft : Action::TurnRight;
}

Action ScriptedExpert::place(const WorldState& w, Action place_action) {
  auto free = [&](Facing f) {
    const Cell c = step_towards(w.agent.pos, f);
    return w.in_bounds(c) && w.at(c) == CellType::Ground && w.animal_at(c) < 0;
  };
  if (free(w.agent.facing)) return place_action;
  if (free(turn_right(w.agent.facing))) return Action::TurnRight;
  if (free(turn_left(w.agent.facing))) return Action::TurnLeft;
  if (free(turn_right(turn_right(w.agent.facing)))) return Action::TurnRight;
  return wander(w);
}

}  // namespace tilecraft
