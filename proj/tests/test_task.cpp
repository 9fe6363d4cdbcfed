#include <cmath>
#include <numbers>

#include "doctest.h"
#include "tilecraft/errors.hpp"
#include "tilecraft/task.hpp"

using namespace tilecraft;
using enum ItemId;

namespace {

// Milestone rewards, in chain order.
const std::pair<ItemId, int> kMilestoneRewards[] = {
    {Log, 1},           {Planks, 2},       {Stick, 4},         {CraftingTable, 4},
    {WoodenPickaxe, 8}, {Cobblestone, 16}, {Furnace, 32},      {StonePickaxe, 32},
    {IronOre, 64},      {IronIngot, 128},  {IronPickaxe, 256}, {Diamond, 1024},
};

// Clears the area around the agent so hand-driven tests are not blocked.
void clear_around(EpisodeState& ep, int radius) {
  auto& w = ep.world;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      Cell c{w.agent.pos.x + dx, w.agent.pos.y + dy};
      if (c.x > 0 && c.y > 0 && c.x < w.side - 1 && c.y < w.side - 1) w.at(c) = CellType::Ground;
    }
  w.animals.clear();
}

}  // namespace

TEST_CASE("ObtainDiamond schedule matches the reward table") {
  auto spec = make_task(TaskId{TaskFamily::ObtainDiamond});
  REQUIRE(spec.schedule);
  CHECK(spec.schedule->milestones.size() == 12);
  long sum = 0;
  for (auto [item, r] : kMilestoneRewards) {
    CHECK(spec.schedule->milestones.at(item) == r);
    sum += r;
  }
  CHECK(spec.schedule->terminal_item == Diamond);
  CHECK(spec.tick_cap == 18000);
  CHECK(max_score(spec) == static_cast<double>(sum));
  CHECK(sum == 1571);
}

TEST_CASE("ObtainIronPickaxe is the reward table prefix") {
  auto spec = make_task("obtain_iron_pickaxe");
  long sum = 0;
  for (auto [item, r] : kMilestoneRewards) {
    if (item == Diamond) {
      CHECK_FALSE(spec.schedule->milestones.contains(Diamond));
      continue;
    }
    CHECK(spec.schedule->milestones.at(item) == r);
    sum += r;
  }
  CHECK(max_score(spec) == static_cast<double>(sum));
  CHECK(sum == 547);
  CHECK(spec.schedule->terminal_item == IronPickaxe);
}

TEST_CASE("task defaults") {
  auto tc = make_task("treechop");
  CHECK(tc.starting_inventory == std::map<ItemId, std::uint32_t>{{IronAxe, 1}});
  CHECK(max_score(tc) == 64.0);
  CHECK(tc.tick_cap == 2000);
  CHECK(make_task("navigate_sparse").goal_distance == 64);
  CHECK(make_task("navigate_dense").observation_spec.compass);
  CHECK_FALSE(make_task("obtain_diamond").observation_spec.compass);
  CHECK_THROWS_AS(max_score(make_task("survival")), NoScheduleError);
  CHECK_THROWS_AS(make_task("obtain_bed"), ConfigError);
  auto meat = make_task("obtain_cooked_meat_sheep");
  CHECK(meat.schedule->terminal_item == CookedMeatSheep);
  CHECK(meat.schedule->milestones.at(RawMeatSheep) == 64);
  for (auto t : all_tasks()) {
    CHECK(TaskId::from_code(t.code()) == t);
    CHECK(TaskId::parse(t.name()) == t);
  }
  CHECK(all_tasks().size() == 10);
}

TEST_CASE("overrides") {
  KvConfig kv;
  kv.set("tick_cap", "50");
  kv.set("tree_density", "0.2");
  auto spec = make_task("treechop", kv);
  CHECK(spec.tick_cap == 50);
  CHECK(spec.generation.tree_density == 0.2);
  CHECK(spec_digest(spec) != spec_digest(make_task("treechop")));
  kv.set("tick_cap", "0");
  CHECK_THROWS_AS(make_task("treechop", kv), ConfigError);
  KvConfig bad;
  bad.set("colour", "red");
  CHECK_THROWS_AS(make_task("treechop", bad), ConfigError);
}

TEST_CASE("reset determinism and empty inventory") {
  auto spec = make_task("obtain_diamond");
  auto a = start_episode(spec, 11);
  auto b = start_episode(spec, 11);
  CHECK(state_hash(a.world) == state_hash(b.world));
  for (auto n : a.world.agent.inventory) CHECK(n == 0);
  CHECK(a.cumulative_score == 0.0);
  CHECK(a.achieved.none());
}

TEST_CASE("navigate goal distance") {
  for (auto name : {"navigate_sparse", "navigate_dense"}) {
    auto spec = make_task(name);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto ep = start_episode(spec, seed);
      REQUIRE(ep.world.navigate_goal);
      double dx = ep.world.navigate_goal->x - ep.world.agent.pos.x;
      double dy = ep.world.navigate_goal->y - ep.world.agent.pos.y;
      double d = std::sqrt(dx * dx + dy * dy);
      CHECK(d >= 63.5);
      CHECK(d <= 64.5);
    }
  }
}

TEST_CASE("first-instance milestone rule") {
  auto ep = start_episode(make_task("obtain_diamond"), 3);
  clear_around(ep, 2);
  auto& w = ep.world;
  w.at(w.faced_cell()) = CellType::Tree;
  double total = 0;
  for (int i = 0; i < 3; ++i) total += advance(ep, Action::Attack).reward;
  CHECK(total == 1.0);
  w.at(w.faced_cell()) = CellType::Tree;
  total = 0;
  for (int i = 0; i < 3; ++i) total += advance(ep, Action::Attack).reward;
  CHECK(total == 0.0);
  CHECK(w.agent.count(Log) == 2);
  auto r = advance(ep, Action::CraftPlanks);
  CHECK(r.reward == 2.0);
  CHECK(r.info.new_milestones == std::vector<ItemId>{Planks});
  CHECK(ep.cumulative_score == 3.0);
}

TEST_CASE("treechop pays per unit and ends at 64") {
  auto ep = start_episode(make_task("treechop"), 1);
  clear_around(ep, 1);
  double score = 0;
  int steps = 0;
  while (!ep.done) {
    ep.world.at(ep.world.faced_cell()) = CellType::Tree;
    auto r = advance(ep, Action::Attack);
    CHECK(r.reward == 1.0);  // iron axe: one hit per log
    score += r.reward;
    ++steps;
  }
  CHECK(steps == 64);
  CHECK(score == 64.0);
  CHECK(ep.done_reason == DoneReason::Success);
  CHECK_THROWS_AS(advance(ep, Action::Noop), EpisodeOverError);
}

TEST_CASE("dense navigation: unit step along an axis pays exactly 1") {
  auto ep = start_episode(make_task("navigate_dense"), 5);
  clear_around(ep, 2);
  auto& w = ep.world;
  w.agent.facing = Facing::E;
  w.navigate_goal = Cell{w.agent.pos.x + 10, w.agent.pos.y};
  auto r = advance(ep, Action::Forward);
  CHECK(r.reward == 1.0);
  r = advance(ep, Action::Backward);
  CHECK(r.reward == -1.0);
}

TEST_CASE("compass sign convention") {
  auto ep = start_episode(make_task("navigate_sparse"), 5);
  auto& w = ep.world;
  w.agent.facing = Facing::N;
  w.navigate_goal = Cell{w.agent.pos.x + 5, w.agent.pos.y};  // east = right of north
  CHECK(compass_angle(w) == doctest::Approx(std::numbers::pi / 2));
  w.navigate_goal = Cell{w.agent.pos.x, w.agent.pos.y - 5};
  CHECK(compass_angle(w) == doctest::Approx(0.0));
  w.navigate_goal = Cell{w.agent.pos.x - 5, w.agent.pos.y};
  CHECK(compass_angle(w) == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("sparse navigation success at Chebyshev 1") {
  auto ep = start_episode(make_task("navigate_sparse"), 9);
  clear_around(ep, 3);
  auto& w = ep.world;
  w.agent.facing = Facing::E;
  w.navigate_goal = Cell{w.agent.pos.x + 2, w.agent.pos.y + 1};
  CHECK(advance(ep, Action::Noop).reward == 0.0);
  auto r = advance(ep, Action::Forward);
  CHECK(r.reward == 100.0);
  CHECK(r.done);
  CHECK(ep.done_reason == DoneReason::Success);
}

TEST_CASE("survival pays nothing and hits the tick cap") {
  KvConfig kv;
  kv.set("tick_cap", "30");
  auto ep = start_episode(make_task("survival", kv), 2);
  int ticks = 0;
  while (!ep.done) {
    CHECK(advance(ep, static_cast<Action>(ticks % kActionCount)).reward == 0.0);
    ++ticks;
  }
  CHECK(ticks <= 30);
  CHECK((ep.done_reason == DoneReason::TickCap || ep.done_reason == DoneReason::Death));
}

TEST_CASE("observation layout") {
  auto spec = make_task("obtain_iron_pickaxe");
  auto r = reset(spec, 4, make_texture_pack(1));
  CHECK(r.observation.inventory.size() == spec.observation_spec.inventory_items.size());
  CHECK(r.observation.compass_angle == 0.0);
  TaskEnv env(spec, make_texture_pack(1));
  auto obs = env.reset(4);
  CHECK(obs.pov == r.observation.pov);
  auto s = env.step(Action::TurnLeft);
  CHECK(s.reward == 0.0);
  CHECK_FALSE(s.done);
}
