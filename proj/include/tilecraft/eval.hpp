#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tilecraft/agents.hpp"
#include "tilecraft/task.hpp"

namespace tilecraft {

struct Budget {
  std::uint64_t max_env_samples = 1'000'000;
  std::uint64_t consumed = 0;

  std::uint64_t remaining() const { return max_env_samples - consumed; }
  bool exhausted() const { return consumed >= max_env_samples; }
  // Throws BudgetExhausted when nothing is left.
  void consume();
};

// Counts every reset and step against `budget`.
class BudgetedEnv : public Environment {
 public:
  BudgetedEnv(TaskSpec spec, TexturePack pack, Budget& budget);

  Observation reset(std::uint64_t seed) override;
  EnvStepResult step(Action action) override;
  const EpisodeState& episode() const override { return env_.episode(); }
  const TaskSpec& spec() const override { return env_.spec(); }
  const Budget& budget() const { return budget_; }

 private:
  TaskEnv env_;
  Budget& budget_;
};

// Seed vault file: "MRLV" u16 version u32 count, count x u64 seeds.
inline constexpr std::uint16_t kVaultFormatVersion = 1;
std::vector<std::uint8_t> encode_vault(std::span<const std::uint64_t> seeds);
// Throws ConfigError on malformed data or duplicate seeds.
std::vector<std::uint64_t> decode_vault(std::span<const std::uint8_t> bytes);
void write_vault(std::span<const std::uint64_t> seeds, const std::filesystem::path& path);
std::vector<std::uint64_t> read_vault(const std::filesystem::path& path);

struct EvalConfig {
  std::vector<std::uint64_t> seeds;  // one per episode
  TexturePack pack;
  std::uint64_t policy_seed = 0;  // rng for stochastic policies

  std::size_t n_episodes() const { return seeds.size(); }
  // Identifies the evaluation setup; reports are only comparable when equal.
  std::string provenance(const TaskSpec& spec) const;
};

struct ScoreReport {
  std::string entry;
  std::string provenance;
  std::vector<double> per_episode_scores;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  int tie_break_episode = 0;
  std::uint64_t samples_consumed_training = 0;
};

// Tracks the tie-break: the first episode (1-based) in which the best
// milestone reached anywhere in the evaluation was first reached.
class TieBreakTracker {
 public:
  explicit TieBreakTracker(const TaskSpec& spec) : spec_(spec) {}
  void record(int episode, std::span<const ItemId> new_milestones);
  int episode() const { return episode_; }

 private:
  double rank(ItemId item) const;
  const TaskSpec& spec_;
  double best_ = -1.0;
  int episode_ = 0;
};

ScoreReport summarize(std::string entry, std::string provenance, std::vector<double> scores, int tie_break);

ScoreReport run_evaluation(Policy& policy, const TaskSpec& spec, const EvalConfig& config);
// For privileged scripted policies; `make` builds a fresh policy per episode.
ScoreReport run_evaluation(const std::function<std::unique_ptr<PrivilegedPolicy>()>& make, const TaskSpec& spec,
                           const EvalConfig& config);

struct RankedEntry {
  std::size_t index = 0;  // into the input list
  int rank = 0;           // 1-based, ties share
};

// Descending mean; equal means rank the smaller tie_break_episode first (0 ranks
// last); full ties share a rank. Throws ComparisonError on empty input or mixed provenance.
std::vector<RankedEntry> compare(std::span<const ScoreReport> entries);

void write_leaderboard_csv(std::span<const ScoreReport> entries, const std::filesystem::path& path);
void write_report_csv(const ScoreReport& report, const std::filesystem::path& path);

struct Variant {
  std::string name;
  TexturePack pack;
  std::vector<std::uint64_t> vault;
  bool shareable = false;
};

struct VariantSet {
  Variant dev, val, eval;
};

VariantSet make_variant_set(std::uint64_t master_seed, std::size_t vault_size = 100);

// Writes <dir>/<name>/{vault.mrlv,atlas.rgb,pack.txt} for each variant.
void write_variant_set(const VariantSet& set, std::uint64_t master_seed, const std::filesystem::path& dir);

// Child seeds used for the dev/val/eval packs of `master_seed`.
std::uint64_t variant_pack_seed(std::uint64_t master_seed, int which);

}  // namespace tilecraft
