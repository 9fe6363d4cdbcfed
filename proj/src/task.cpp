#include "tilecraft/task.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include "tilecraft/errors.hpp"
#include "tilecraft/rng.hpp"

namespace tilecraft {

namespace {

using enum ItemId;

const std::vector<std::pair<ItemId, double>> kDiamondSchedule = {
    {Log, 1},          {Planks, 2},       {Stick, 4},         {CraftingTable, 4},
    {WoodenPickaxe, 8}, {Cobblestone, 16}, {Furnace, 32},      {StonePickaxe, 32},
    {IronOre, 64},     {IronIngot, 128},  {IronPickaxe, 256}, {Diamond, 1024},
};

constexpr std::string_view kFamilyNames[] = {
    "treechop", "navigate_sparse", "navigate_dense", "obtain_iron_pickaxe",
    "obtain_cooked_meat", "obtain_diamond", "survival",
};

const std::set<std::string, std::less<>> kOverrideKeys = {
    "task",         "seed",          "tick_cap",        "goal_distance",
    "side",         "tree_density",  "stone_density",   "iron_density",
    "diamond_density", "water_density", "animal_count",
};

GenConfig treechop_profile() {
  GenConfig g;
  g.tree_density = 0.05;
  g.stone_density = 0.02;
  g.iron_density = 0.0;
  g.diamond_density = 0.0;
  g.water_density = 0.0;
  g.animal_count = 0;
  return g;
}

GenConfig navigate_profile() {
  GenConfig g;
  g.side = 160;
  g.tree_density = 0.01;
  g.stone_density = 0.005;
  g.iron_density = 0.0;
  g.diamond_density = 0.0;
  g.water_density = 0.002;
  g.animal_count = 0;
  return g;
}

struct Writer {
  std::vector<std::uint8_t> bytes;
  template <typename T>
  void put(T value) {
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void put_f64(double v) { put<std::uint64_t>(std::bit_cast<std::uint64_t>(v)); }
};

}  // namespace

std::uint8_t TaskId::code() const {
  switch (family) {
    case TaskFamily::Treechop: return 0;
    case TaskFamily::NavigateSparse: return 1;
    case TaskFamily::NavigateDense: return 2;
    case TaskFamily::ObtainIronPickaxe: return 3;
    case TaskFamily::ObtainCookedMeat: return static_cast<std::uint8_t>(4 + static_cast<int>(meat));
    case TaskFamily::ObtainDiamond: return 8;
    case TaskFamily::Survival: return 9;
  }
  return 255;
}

std::string TaskId::name() const {
  std::string n(kFamilyNames[static_cast<int>(family)]);
  if (family == TaskFamily::ObtainCookedMeat) n += "_" + std::string(animal_name(meat));
  return n;
}

std::optional<TaskId> TaskId::from_code(int c) {
  switch (c) {
    case 0: return TaskId{TaskFamily::Treechop};
    case 1: return TaskId{TaskFamily::NavigateSparse};
    case 2: return TaskId{TaskFamily::NavigateDense};
    case 3: return TaskId{TaskFamily::ObtainIronPickaxe};
    case 4: case 5: case 6: case 7:
      return TaskId{TaskFamily::ObtainCookedMeat, static_cast<AnimalKind>(c - 4)};
    case 8: return TaskId{TaskFamily::ObtainDiamond};
    case 9: return TaskId{TaskFamily::Survival};
    default: return std::nullopt;
  }
}

TaskId TaskId::parse(std::string_view name) {
  for (int c = 0; c <= 9; ++c) {
    TaskId t = *from_code(c);
    if (t.name() == name) return t;
  }
  throw ConfigError("unknown task id '" + std::string(name) + "'");
}

std::vector<TaskId> all_tasks() {
  std::vector<TaskId> out;
  for (int c = 0; c <= 9; ++c) out.push_back(*TaskId::from_code(c));
  return out;
}

TaskSpec make_task(TaskId task_id, const KvConfig& overrides) {
  for (const auto& [key, value] : overrides.values())
    if (!kOverrideKeys.contains(key)) throw ConfigError("unknown task config key '" + key + "'");

  TaskSpec spec;
  spec.task_id = task_id;
  switch (task_id.family) {
    case TaskFamily::Treechop:
      spec.schedule = RewardSchedule{{{Log, 1.0}}, std::nullopt};
      spec.tick_cap = 2000;
      spec.unit_target = 64;
      spec.starting_inventory = {{IronAxe, 1}};
      spec.generation = treechop_profile();
      spec.observation_spec.inventory_items = {Log};
      break;
    case TaskFamily::NavigateSparse:
    case TaskFamily::NavigateDense:
      spec.tick_cap = 2000;
      spec.dense_navigation = task_id.family == TaskFamily::NavigateDense;
      spec.goal_distance = 64;
      spec.generation = navigate_profile();
      spec.observation_spec.compass = true;
      break;
    case TaskFamily::ObtainIronPickaxe: {
      RewardSchedule s;
      for (auto [item, r] : kDiamondSchedule)
        if (item != Diamond) s.milestones[item] = r;
      s.terminal_item = IronPickaxe;
      spec.schedule = s;
      spec.tick_cap = 18000;
      break;
    }
    case TaskFamily::ObtainCookedMeat: {
      RewardSchedule s;
      s.milestones = {{Log, 1},          {Planks, 2},
                      {CraftingTable, 4}, {Cobblestone, 16},
                      {Furnace, 32},      {raw_meat(task_id.meat), 64},
                      {cooked_meat(task_id.meat), 1024}};
      s.terminal_item = cooked_meat(task_id.meat);
      spec.schedule = s;
      spec.tick_cap = 18000;
      break;
    }
    case TaskFamily::ObtainDiamond: {
      RewardSchedule s;
      for (auto [item, r] : kDiamondSchedule) s.milestones[item] = r;
      s.terminal_item = Diamond;
      spec.schedule = s;
      spec.tick_cap = 18000;
      break;
    }
    case TaskFamily::Survival:
      spec.tick_cap = 18000;
      for (int i = 0; i < kItemCount; ++i)
        spec.observation_spec.inventory_items.push_back(static_cast<ItemId>(i));
      break;
  }
  if (spec.schedule && spec.task_id.family != TaskFamily::Treechop)
    for (const auto& [item, r] : spec.schedule->milestones)
      spec.observation_spec.inventory_items.push_back(item);

  if (auto v = overrides.get_int("tick_cap")) {
    if (*v <= 0) throw ConfigError("tick_cap must be positive");
    spec.tick_cap = static_cast<int>(*v);
  }
  if (auto v = overrides.get_int("goal_distance")) {
    if (*v <= 1) throw ConfigError("goal_distance must be > 1");
    spec.goal_distance = static_cast<int>(*v);
  }
  spec.generation.apply(overrides);
  spec.generation.validate();
  return spec;
}

TaskSpec make_task(std::string_view name, const KvConfig& overrides) {
  return make_task(TaskId::parse(name), overrides);
}

std::uint64_t spec_digest(const TaskSpec& spec) {
  Writer w;
  w.put<std::uint8_t>(spec.task_id.code());
  w.put<std::uint8_t>(spec.schedule ? 1 : 0);
  if (spec.schedule) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.schedule->milestones.size()));
    for (auto [item, r] : spec.schedule->milestones) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(code(item)));
      w.put_f64(r);
    }
    w.put<std::uint8_t>(spec.schedule->terminal_item ? 1 : 0);
    if (spec.schedule->terminal_item)
      w.put<std::uint8_t>(static_cast<std::uint8_t>(code(*spec.schedule->terminal_item)));
  }
  w.put<std::int32_t>(spec.tick_cap);
  w.put<std::uint8_t>(spec.dense_navigation ? 1 : 0);
  w.put<std::int32_t>(spec.goal_distance);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.starting_inventory.size()));
  for (auto [item, n] : spec.starting_inventory) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(code(item)));
    w.put<std::uint32_t>(n);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.observation_spec.inventory_items.size()));
  for (ItemId item : spec.observation_spec.inventory_items)
    w.put<std::uint8_t>(static_cast<std::uint8_t>(code(item)));
  w.put<std::uint8_t>(spec.observation_spec.compass ? 1 : 0);
  const GenConfig& g = spec.generation;
  w.put<std::int32_t>(g.side);
  for (double d : {g.tree_density, g.stone_density, g.iron_density, g.diamond_density, g.water_density})
    w.put_f64(d);
  w.put<std::int32_t>(g.animal_count);
  w.put<std::int32_t>(spec.unit_target);
  return fnv1a64(w.bytes.data(), w.bytes.size());
}

double max_score(const TaskSpec& spec) {
  switch (spec.task_id.family) {
    case TaskFamily::Treechop: return spec.unit_target * spec.schedule->milestones.at(Log);
    case TaskFamily::NavigateSparse: return 100.0;
    case TaskFamily::NavigateDense: return spec.goal_distance;
    case TaskFamily::Survival: throw NoScheduleError("survival has no reward schedule");
    default: break;
  }
  if (!spec.schedule) throw NoScheduleError("task has no reward schedule");
  double total = 0.0;
  for (const auto& [item, r] : spec.schedule->milestones) total += r;
  return total;
}

std::string_view done_reason_name(DoneReason r) {
  switch (r) {
    case DoneReason::None: return "none";
    case DoneReason::Success: return "success";
    case DoneReason::Death: return "death";
    case DoneReason::TickCap: return "tick_cap";
  }
  return "none";
}

std::optional<DoneReason> done_reason_from_name(std::string_view name) {
  for (auto r : {DoneReason::None, DoneReason::Success, DoneReason::Death, DoneReason::TickCap})
    if (done_reason_name(r) == name) return r;
  return std::nullopt;
}

double quantized_goal_distance(const WorldState& world) {
  if (!world.navigate_goal) return 0.0;
  const double dx = world.navigate_goal->x - world.agent.pos.x;
  const double dy = world.navigate_goal->y - world.agent.pos.y;
  return std::round(std::sqrt(dx * dx + dy * dy) * 65536.0) / 65536.0;
}

double compass_angle(const WorldState& world) {
  if (!world.navigate_goal) return 0.0;
  const Cell f = step_towards({0, 0}, world.agent.facing);
  const double vx = world.navigate_goal->x - world.agent.pos.x;
  const double vy = world.navigate_goal->y - world.agent.pos.y;
  if (vx == 0.0 && vy == 0.0) return 0.0;
  const double cross = f.x * vy - f.y * vx;
  const double dot = f.x * vx + f.y * vy;
  return std::atan2(cross, dot);
}

namespace {

// Continues the world RNG stream: angle draws until the rounded target lands
// inside the interior within half a cell of the requested distance.
Cell place_goal(WorldState& world, int distance) {
  SplitMix64 rng(world.rng_state);
  const Cell a = world.agent.pos;
  auto acceptable = [&](Cell c) {
    if (c.x < 1 || c.y < 1 || c.x > world.side - 2 || c.y > world.side - 2) return false;
    const double dx = c.x - a.x, dy = c.y - a.y;
    return std::abs(std::sqrt(dx * dx + dy * dy) - distance) <= 0.5;
  };
  std::optional<Cell> goal;
  for (int attempt = 0; attempt < 4096 && !goal; ++attempt) {
    const double theta = rng.uniform() * 2.0 * std::numbers::pi;
    Cell c{static_cast<int>(std::lround(a.x + distance * std::cos(theta))),
           static_cast<int>(std::lround(a.y + distance * std::sin(theta)))};
    if (acceptable(c)) goal = c;
  }
  for (int y = 1; y < world.side - 1 && !goal; ++y)
    for (int x = 1; x < world.side - 1 && !goal; ++x)
      if (acceptable({x, y})) goal = Cell{x, y};
  if (!goal) throw ConfigError("grid too small to place a goal " + std::to_string(distance) + " cells away");
  world.rng_state = rng.state();
  world.at(*goal) = CellType::Ground;
  return *goal;
}

}  // namespace

EpisodeState start_episode(const TaskSpec& spec, std::uint64_t seed) {
  EpisodeState ep;
  ep.spec = spec;
  ep.world = generate_world(seed, spec.generation);
  for (auto [item, n] : spec.starting_inventory) ep.world.agent.inventory[code(item)] = n;
  if (spec.task_id.is_navigate()) {
    ep.world.navigate_goal = place_goal(ep.world, spec.goal_distance);
    ep.initial_distance = quantized_goal_distance(ep.world);
  }
  return ep;
}

StepResult advance(EpisodeState& ep, Action action) {
  if (ep.done) throw EpisodeOverError("episode is over");
  StepResult result;
  const double before = ep.spec.dense_navigation ? quantized_goal_distance(ep.world) : 0.0;
  result.info.outcome = step_in_place(ep.world, action);
  const TickOutcome& outcome = result.info.outcome;
  bool success = false;

  switch (ep.spec.task_id.family) {
    case TaskFamily::Treechop: {
      int logs = 0;
      for (auto [item, n] : outcome.acquired)
        if (item == Log) logs += n;
      result.reward = logs * ep.spec.schedule->milestones.at(Log);
      ep.units_collected += logs;
      if (logs > 0 && !ep.achieved.test(code(Log))) {
        ep.achieved.set(code(Log));
        result.info.new_milestones.push_back(Log);
      }
      success = ep.units_collected >= ep.spec.unit_target;
      break;
    }
    case TaskFamily::NavigateSparse:
      if (chebyshev(ep.world.agent.pos, *ep.world.navigate_goal) <= 1) {
        result.reward = 100.0;
        success = true;
      }
      break;
    case TaskFamily::NavigateDense:
      result.reward = before - quantized_goal_distance(ep.world);
      success = chebyshev(ep.world.agent.pos, *ep.world.navigate_goal) <= 1;
      break;
    case TaskFamily::Survival:
      for (ItemId item : outcome.first_acquisitions)
        if (!ep.achieved.test(code(item))) {
          ep.achieved.set(code(item));
          result.info.new_milestones.push_back(item);
        }
      break;
    default: {
      const RewardSchedule& s = *ep.spec.schedule;
      for (ItemId item : outcome.first_acquisitions) {
        auto it = s.milestones.find(item);
        if (it == s.milestones.end() || ep.achieved.test(code(item))) continue;
        ep.achieved.set(code(item));
        result.reward += it->second;
        result.info.new_milestones.push_back(item);
      }
      success = s.terminal_item && ep.achieved.test(code(*s.terminal_item));
      break;
    }
  }

  ep.cumulative_score += result.reward;
  if (success) ep.done_reason = DoneReason::Success;
  else if (outcome.died) ep.done_reason = DoneReason::Death;
  else if (ep.world.tick >= static_cast<std::uint64_t>(ep.spec.tick_cap)) ep.done_reason = DoneReason::TickCap;
  ep.done = ep.done_reason != DoneReason::None;
  result.done = ep.done;
  result.info.done_reason = ep.done_reason;
  return result;
}

Observation observe(const EpisodeState& ep, const TexturePack& pack) {
  Observation obs;
  obs.pov = render_pov(ep.world, pack);
  obs.inventory.reserve(ep.spec.observation_spec.inventory_items.size());
  for (ItemId item : ep.spec.observation_spec.inventory_items)
    obs.inventory.push_back(ep.world.agent.count(item));
  obs.compass_angle = ep.spec.observation_spec.compass ? compass_angle(ep.world) : 0.0;
  return obs;
}

ResetResult reset(const TaskSpec& spec, std::uint64_t seed, const TexturePack& pack) {
  ResetResult r{start_episode(spec, seed), {}};
  r.observation = observe(r.episode, pack);
  return r;
}

EnvStepResult env_step(EpisodeState& episode, Action action, const TexturePack& pack) {
  StepResult s = advance(episode, action);
  return {observe(episode, pack), s.reward, s.done, std::move(s.info)};
}

TaskEnv::TaskEnv(TaskSpec spec, TexturePack pack) : spec_(std::move(spec)), pack_(std::move(pack)) {
  episode_.done = true;
}

Observation TaskEnv::reset(std::uint64_t seed) {
  auto r = tilecraft::reset(spec_, seed, pack_);
  episode_ = std::move(r.episode);
  return std::move(r.observation);
}

EnvStepResult TaskEnv::step(Action action) { return env_step(episode_, action, pack_); }

}  // namespace tilecraft
