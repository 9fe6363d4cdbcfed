#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "tilecraft/dataset.hpp"
#include "tilecraft/errors.hpp"
#include "tilecraft/expert.hpp"
#include "tilecraft/trajectory.hpp"

using namespace tilecraft;
namespace fs = std::filesystem;

namespace {

Recording expert_recording(const TaskSpec& spec, std::uint64_t seed) {
  auto ex = std::make_shared<ScriptedExpert>(spec.task_id);
  return record(spec, seed, [ex](const EpisodeState& ep) -> std::optional<Action> { return ex->act(ep); });
}

}  // namespace

TEST_CASE("random policy is uniform over the actions") {
  RandomPolicy p;
  SplitMix64 rng(2024);
  Observation obs;
  std::array<int, kActionCount> counts{};
  for (int i = 0; i < 16000; ++i) ++counts[code(p.act(obs, false, rng))];
  for (int c : counts) {
    CHECK(c >= 800);
    CHECK(c <= 1200);
  }
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(p.act(obs, true, a) == p.act(obs, true, b));
}

TEST_CASE("random policy rarely gets anywhere on NavigateSparse") {
  const TaskSpec spec = make_task("navigate_sparse");
  RandomPolicy p;
  SplitMix64 rng(1);
  double total = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto [ep, obs] = reset(spec, 300 + s, make_texture_pack(1));
    while (!ep.done) advance(ep, p.act(obs, false, rng));
    total += ep.cumulative_score;
  }
  CHECK(total / 20 <= 10.0);
}

TEST_CASE("feature vector layout") {
  Observation obs;
  obs.inventory = {0, 32, 64, 1000};
  obs.compass_angle = M_PI / 2;
  obs.pov.pixels.fill(255);
  // Top-left 4x4 block black, next block pure red.
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) {
      std::uint8_t* p = obs.pov.pixel(r, c);
      p[0] = c < 4 ? 0 : 255;
      p[1] = p[2] = 0;
    }
  const Eigen::VectorXf f = features(obs);
  REQUIRE(f.size() == feature_length(4));
  CHECK(f.size() == 4 + 2 + 256);
  CHECK(f(0) == 0.0f);
  CHECK(f(1) == doctest::Approx(0.5));
  CHECK(f(2) == doctest::Approx(1.0));
  CHECK(f(3) == doctest::Approx(1.0));
  CHECK(f(4) == doctest::Approx(1.0));  // sin
  CHECK(f(5) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(f(6) == doctest::Approx(0.0));
  CHECK(f(7) == doctest::Approx(0.299));
  CHECK(f(8) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(f(6 + 255) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("features of real observations stay in range") {
  const TaskSpec spec = make_task("obtain_iron_pickaxe");
  auto [ep, obs] = reset(spec, 8, make_texture_pack(4));
  REQUIRE(!obs.inventory.empty());
  SplitMix64 rng(3);
  for (int t = 0; t < 200 && !ep.done; ++t) {
    const Eigen::VectorXf f = features(obs);
    const auto inv = static_cast<Eigen::Index>(obs.inventory.size());
    CHECK(f.head(inv).minCoeff() >= 0.0f);
    CHECK(f.head(inv).maxCoeff() <= 1.0f);
    CHECK(std::abs(f(inv)) <= 1.0f);
    CHECK(std::abs(f(inv + 1)) <= 1.0f);
    CHECK(f.tail(kGrayFeatures).minCoeff() >= 0.0f);
    CHECK(f.tail(kGrayFeatures).maxCoeff() <= 1.0f);
    obs = env_step(ep, static_cast<Action>(rng.below(kActionCount)), make_texture_pack(4)).observation;
  }
}

TEST_CASE("scripted expert refuses tasks without a goal") {
  CHECK_THROWS_AS(ScriptedExpert(TaskId{TaskFamily::Survival}), ConfigError);
}

TEST_CASE("planner walks the recipe graph") {
  const TaskSpec spec = make_task("obtain_iron_pickaxe");
  EpisodeState ep = start_episode(spec, 11);
  CHECK(plan_for(ep, ItemId::IronPickaxe, 1).kind == Intent::Kind::Gather);
  CHECK(plan_for(ep, ItemId::IronPickaxe, 1).cell == CellType::Tree);

  auto& inv = ep.world.agent.inventory;
  inv[code(ItemId::Log)] = 1;
  Intent planks = plan_for(ep, ItemId::Planks, 4);
  CHECK(planks.kind == Intent::Kind::Craft);
  CHECK(planks.action == Action::CraftPlanks);

  inv[code(ItemId::Log)] = 0;
  inv[code(ItemId::Planks)] = 4;
  CHECK(plan_for(ep, ItemId::CraftingTable, 1).action == Action::CraftTable);

  // A held table must be placed before anything needing one can be crafted.
  inv[code(ItemId::Planks)] = 3;
  inv[code(ItemId::Stick)] = 2;
  inv[code(ItemId::CraftingTable)] = 1;
  Intent pick = plan_for(ep, ItemId::WoodenPickaxe, 1);
  CHECK(pick.kind == Intent::Kind::Place);
  CHECK(pick.item == ItemId::CraftingTable);

  // Stone needs a wooden pickaxe first.
  inv = {};
  CHECK(plan_for(ep, ItemId::Cobblestone, 1).cell == CellType::Tree);
  inv[code(ItemId::WoodenPickaxe)] = 1;
  CHECK(plan_for(ep, ItemId::Cobblestone, 1).cell == CellType::Stone);
}

TEST_CASE("scripted expert solves Treechop and NavigateSparse") {
  const TaskSpec chop = make_task("treechop");
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto rec = expert_recording(chop, 40 + s);
    Replayer r(rec.log);
    while (r.next()) {
    }
    CHECK(r.episode().cumulative_score == 64.0);
  }
  const TaskSpec nav = make_task("navigate_sparse");
  int fast = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto rec = expert_recording(nav, 60 + s);
    if (rec.log.actions.size() <= 4 * 64) ++fast;
  }
  CHECK(fast >= 9);
}

TEST_CASE("expert filter keeps scripted solutions and drops truncated human logs") {
  const fs::path root = fs::temp_directory_path() / "tilecraft_agents_filter";
  fs::remove_all(root);
  const TaskSpec chop = make_task("treechop");
  std::vector<std::string> expert_ids;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto rec = expert_recording(chop, 100 + s);
    expert_ids.push_back(write_trajectory(root, rec.log, annotate(rec.log)));
  }
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto ex = std::make_shared<ScriptedExpert>(chop.task_id);
    RecordOptions opt;
    opt.player_kind = PlayerKind::Human;
    opt.max_ticks = 40;
    auto rec = record(chop, 200 + s, [ex](const EpisodeState& ep) -> std::optional<Action> { return ex->act(ep); }, opt);
    CHECK(rec.log.header.truncated);
    write_trajectory(root, rec.log, annotate(rec.log));
  }
  auto r = filter(root, [](const TrajectoryMeta& m) { return m.is_expert; });
  std::sort(expert_ids.begin(), expert_ids.end());
  CHECK(r.ids == expert_ids);
  CHECK(r.errors.empty());
  auto human = filter(root, [](const TrajectoryMeta& m) { return m.player_kind == PlayerKind::Human; });
  CHECK(human.ids.size() == 5);
  fs::remove_all(root);
}
