#include <filesystem>
#include <set>

#include "doctest.h"
#include "tilecraft/binio.hpp"
#include "tilecraft/errors.hpp"
#include "tilecraft/eval.hpp"
#include "tilecraft/expert.hpp"

using namespace tilecraft;
namespace fs = std::filesystem;

namespace {

ScoreReport report(std::string entry, double mean, int tie_break, std::string provenance = "p") {
  ScoreReport r;
  r.entry = std::move(entry);
  r.mean = mean;
  r.tie_break_episode = tie_break;
  r.provenance = std::move(provenance);
  return r;
}

}  // namespace

TEST_CASE("budget counts every reset and step") {
  Budget budget{10};
  BudgetedEnv env(make_task("treechop"), make_texture_pack(1), budget);
  env.reset(5);
  for (int i = 0; i < 9; ++i) env.step(Action::Noop);
  CHECK(budget.consumed == 10);
  CHECK(budget.exhausted());
  CHECK_THROWS_AS(env.step(Action::Noop), BudgetExhausted);
  CHECK_THROWS_AS(env.reset(6), BudgetExhausted);
  CHECK(budget.consumed == 10);

  Budget zero{0};
  CHECK_THROWS_AS(BudgetedEnv(make_task("treechop"), make_texture_pack(1), zero), ConfigError);
}

TEST_CASE("metered environment is transparent") {
  const TaskSpec spec = make_task("obtain_iron_pickaxe");
  const TexturePack pack = make_texture_pack(3);
  Budget budget{100000};
  BudgetedEnv metered(spec, pack, budget);
  TaskEnv plain(spec, pack);
  auto a = metered.reset(77), b = plain.reset(77);
  CHECK(a.pov.pixels == b.pov.pixels);
  SplitMix64 rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto act = static_cast<Action>(rng.below(kActionCount));
    auto x = metered.step(act), y = plain.step(act);
    CHECK(x.reward == y.reward);
    CHECK(x.done == y.done);
    CHECK(x.observation.inventory == y.observation.inventory);
    CHECK(x.observation.pov.pixels == y.observation.pov.pixels);
    if (x.done) break;
  }
  CHECK(state_hash(metered.episode().world) == state_hash(plain.episode().world));
}

TEST_CASE("vault round trip and corruption") {
  const std::vector<std::uint64_t> seeds{1, 99, 0xffffffffffffffffull};
  auto bytes = encode_vault(seeds);
  CHECK(bytes.size() == 4 + 2 + 4 + 8 * seeds.size());
  CHECK(decode_vault(bytes) == seeds);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_vault(truncated), ConfigError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_vault(bad_magic), ConfigError);
  CHECK_THROWS_AS(decode_vault(encode_vault(std::vector<std::uint64_t>{4, 4})), ConfigError);
  CHECK_THROWS_AS(read_vault("/nonexistent/vault.mrlv"), ConfigError);
}

TEST_CASE("ranking breaks ties by earliest best milestone, none last") {
  std::vector<ScoreReport> r{report("a", 10, 3), report("b", 10, 7), report("c", 10, 0)};
  auto ranked = compare(r);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].index == 0);
  CHECK(ranked[1].index == 1);
  CHECK(ranked[2].index == 2);
  CHECK(ranked[0].rank == 1);
  CHECK(ranked[2].rank == 3);

  std::vector<ScoreReport> order{report("low", 1, 1), report("high", 2, 50)};
  CHECK(compare(order)[0].index == 1);

  std::vector<ScoreReport> tied{report("x", 5, 2), report("y", 5, 2), report("z", 4, 1)};
  auto t = compare(tied);
  CHECK(t[0].rank == 1);
  CHECK(t[1].rank == 1);
  CHECK(t[2].rank == 3);

  std::vector<ScoreReport> mixed{report("a", 1, 1, "p"), report("b", 1, 1, "q")};
  CHECK_THROWS_AS(compare(mixed), ComparisonError);
  CHECK_THROWS_AS(compare(std::span<const ScoreReport>{}), ComparisonError);
}

TEST_CASE("tie-break tracker keeps the first episode of the best milestone") {
  const TaskSpec spec = make_task("obtain_iron_pickaxe");
  TieBreakTracker t(spec);
  const ItemId log[] = {ItemId::Log};
  const ItemId stone[] = {ItemId::Cobblestone};
  t.record(1, log);
  CHECK(t.episode() == 1);
  t.record(2, stone);
  t.record(3, log);
  t.record(4, stone);
  CHECK(t.episode() == 2);
}

TEST_CASE("noop policy scores zero with no tie-break") {
  const TaskSpec spec = make_task("obtain_iron_pickaxe", KvConfig::parse("tick_cap = 50"));
  EvalConfig config{{1, 2, 3}, make_texture_pack(9), 0};
  AlwaysPolicy noop(Action::Noop);
  auto r = run_evaluation(noop, spec, config);
  CHECK(r.per_episode_scores == std::vector<double>{0, 0, 0});
  CHECK(r.mean == 0);
  CHECK(r.std == 0);
  CHECK(r.tie_break_episode == 0);
  CHECK(r.provenance == config.provenance(spec));
  CHECK_THROWS_AS(run_evaluation(noop, spec, EvalConfig{{}, make_texture_pack(9), 0}), ConfigError);
}

TEST_CASE("evaluation is deterministic and provenance tracks its inputs") {
  const TaskSpec spec = make_task("treechop", KvConfig::parse("tick_cap = 200"));
  EvalConfig config{{11, 12, 13, 14}, make_texture_pack(2), 42};
  RandomPolicy random;
  auto a = run_evaluation(random, spec, config);
  auto b = run_evaluation(random, spec, config);
  CHECK(a.per_episode_scores == b.per_episode_scores);
  CHECK(a.tie_break_episode == b.tie_break_episode);

  EvalConfig other_pack = config;
  other_pack.pack = make_texture_pack(3);
  CHECK(other_pack.provenance(spec) != config.provenance(spec));
  EvalConfig other_seeds = config;
  other_seeds.seeds.back() = 15;
  CHECK(other_seeds.provenance(spec) != config.provenance(spec));
  CHECK(config.provenance(make_task("treechop")) != config.provenance(spec));
}

TEST_CASE("population standard deviation") {
  auto r = summarize("e", "p", {2, 4, 4, 4, 5, 5, 7, 9}, 0);
  CHECK(r.mean == doctest::Approx(5.0));
  CHECK(r.std == doctest::Approx(2.0));
}

TEST_CASE("scripted expert evaluates through the privileged overload") {
  const TaskSpec spec = make_task("treechop");
  EvalConfig config{{21, 22}, make_texture_pack(2), 0};
  auto r = run_evaluation([] { return std::make_unique<ScriptedExpert>(TaskId{TaskFamily::Treechop}); }, spec,
                          config);
  CHECK(r.mean == doctest::Approx(64.0));
  CHECK(r.tie_break_episode == 1);
}

TEST_CASE("variant sets are disjoint and reproducible") {
  auto set = make_variant_set(1234, 100);
  std::set<std::uint64_t> all;
  for (const Variant* v : {&set.dev, &set.val, &set.eval}) {
    CHECK(v->vault.size() == 100);
    all.insert(v->vault.begin(), v->vault.end());
  }
  CHECK(all.size() == 300);
  CHECK(set.dev.shareable);
  CHECK_FALSE(set.val.shareable);
  CHECK_FALSE(set.eval.shareable);
  CHECK(set.dev.pack.pack_id != set.val.pack.pack_id);
  CHECK(set.val.pack.pack_id != set.eval.pack.pack_id);

  auto again = make_variant_set(1234, 100);
  CHECK(again.eval.vault == set.eval.vault);
  CHECK(again.eval.pack == set.eval.pack);
  CHECK(make_variant_set(1235, 100).eval.vault != set.eval.vault);

  const fs::path dir = fs::temp_directory_path() / "tilecraft_variants";
  fs::remove_all(dir);
  write_variant_set(set, 1234, dir);
  CHECK(read_vault(dir / "eval" / "vault.mrlv") == set.eval.vault);
  auto meta = KvConfig::load(dir / "val" / "pack.txt");
  CHECK(meta.get_u64("pack_seed") == variant_pack_seed(1234, 1));
  CHECK(meta.get("pack_id") == set.val.pack.pack_id);
  CHECK(fs::exists(dir / "dev" / "atlas.rgb"));
  fs::remove_all(dir);
}
