#include "tilecraft/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "tilecraft/binio.hpp"
#include "tilecraft/errors.hpp"

namespace tilecraft {

void Budget::consume() {
  if (exhausted()) throw BudgetExhausted();
  ++consumed;
}

BudgetedEnv::BudgetedEnv(TaskSpec spec, TexturePack pack, Budget& budget)
    : env_(std::move(spec), std::move(pack)), budget_(budget) {
  if (budget.max_env_samples == 0) throw ConfigError("budget must be positive");
}

Observation BudgetedEnv::reset(std::uint64_t seed) {
  budget_.consume();
  return env_.reset(seed);
}

EnvStepResult BudgetedEnv::step(Action action) {
  budget_.consume();
  return env_.step(action);
}

std::vector<std::uint8_t> encode_vault(std::span<const std::uint64_t> seeds) {
  ByteWriter w;
  w.raw("MRLV", 4);
  w.put<std::uint16_t>(kVaultFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(seeds.size()));
  for (auto s : seeds) w.put<std::uint64_t>(s);
  return std::move(w.bytes);
}

std::vector<std::uint64_t> decode_vault(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "MRLV", 4) != 0) throw ConfigError("not a seed vault (bad magic)");
    if (r.get<std::uint16_t>() != kVaultFormatVersion) throw ConfigError("unsupported seed vault version");
    const auto n = r.get<std::uint32_t>();
    if (r.remaining() != static_cast<std::size_t>(n) * 8) throw ConfigError("seed vault length mismatch");
    std::vector<std::uint64_t> seeds(n);
    for (auto& s : seeds) s = r.get<std::uint64_t>();
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ConfigError("seed vault contains duplicate seeds");
    return seeds;
  } catch (const CorruptLogError&) {
    throw ConfigError("seed vault truncated");
  }
}

void write_vault(std::span<const std::uint64_t> seeds, const std::filesystem::path& path) {
  write_file(path, encode_vault(seeds));
}

std::vector<std::uint64_t> read_vault(const std::filesystem::path& path) {
  try {
    return decode_vault(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(std::string("seed vault unavailable: ") + e.what());
  }
}

std::string EvalConfig::provenance(const TaskSpec& spec) const {
  std::vector<std::uint8_t> bytes = encode_vault(seeds);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s/%016llx/%s/%016llx", spec.task_id.name().c_str(),
                static_cast<unsigned long long>(spec_digest(spec)), pack.pack_id.c_str(),
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

double TieBreakTracker::rank(ItemId item) const {
  if (spec_.schedule) {
    auto it = spec_.schedule->milestones.find(item);
    if (it != spec_.schedule->milestones.end()) return it->second;
  }
  // Unscheduled milestones (Survival) rank by item code, deeper items later.
  return code(item);
}

void TieBreakTracker::record(int episode, std::span<const ItemId> new_milestones) {
  for (ItemId item : new_milestones) {
    const double r = rank(item);
    if (r > best_) {
      best_ = r;
      episode_ = episode;
    }
  }
}

ScoreReport summarize(std::string entry, std::string provenance, std::vector<double> scores, int tie_break) {
  ScoreReport r;
  r.entry = std::move(entry);
  r.provenance = std::move(provenance);
  r.per_episode_scores = std::move(scores);
  r.tie_break_episode = tie_break;
  const auto n = static_cast<double>(r.per_episode_scores.size());
  if (n == 0) return r;
  double sum = 0;
  for (double s : r.per_episode_scores) sum += s;
  r.mean = sum / n;
  double sq = 0;
  for (double s : r.per_episode_scores) sq += (s - r.mean) * (s - r.mean);
  r.std = std::sqrt(sq / n);
  return r;
}

namespace {

template <typename ActFn>
ScoreReport evaluate_with(const TaskSpec& spec, const EvalConfig& config, ActFn&& act_for_episode) {
  if (config.seeds.empty()) throw ConfigError("evaluation needs at least one seed");
  std::vector<double> scores;
  TieBreakTracker tie(spec);
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    auto act = act_for_episode(i);
    auto [ep, obs] = reset(spec, config.seeds[i], config.pack);
    while (!ep.done) {
      EnvStepResult r = env_step(ep, act(ep, obs), config.pack);
      tie.record(static_cast<int>(i + 1), r.info.new_milestones);
      obs = std::move(r.observation);
    }
    scores.push_back(ep.cumulative_score);
  }
  return summarize("", config.provenance(spec), std::move(scores), tie.episode());
}

}  // namespace

ScoreReport run_evaluation(Policy& policy, const TaskSpec& spec, const EvalConfig& config) {
  return evaluate_with(spec, config, [&](std::size_t i) {
    auto rng = std::make_shared<SplitMix64>(child_seed(config.policy_seed, i));
    return [&policy, rng](const EpisodeState&, const Observation& obs) { return policy.act(obs, false, *rng); };
  });
}

ScoreReport run_evaluation(const std::function<std::unique_ptr<PrivilegedPolicy>()>& make, const TaskSpec& spec,
                           const EvalConfig& config) {
  return evaluate_with(spec, config, [&](std::size_t) {
    std::shared_ptr<PrivilegedPolicy> p = make();
    return [p](const EpisodeState& ep, const Observation&) { return p->act(ep); };
  });
}

std::vector<RankedEntry> compare(std::span<const ScoreReport> entries) {
  if (entries.empty()) throw ComparisonError("nothing to compare");
  for (const auto& e : entries)
    if (e.provenance != entries.front().provenance)
      throw ComparisonError("reports come from different evaluation setups");
  // 0 means no milestone was reached and sorts after every real episode index.
  auto key = [](const ScoreReport& r) {
    return std::pair(-r.mean, r.tie_break_episode == 0 ? std::numeric_limits<int>::max() : r.tie_break_episode);
  };
  std::vector<RankedEntry> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out[i].index = i;
  std::stable_sort(out.begin(), out.end(),
                   [&](const auto& a, const auto& b) { return key(entries[a.index]) < key(entries[b.index]); });
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool tied = i > 0 && key(entries[out[i].index]) == key(entries[out[i - 1].index]);
    out[i].rank = tied ? out[i - 1].rank : static_cast<int>(i + 1);
  }
  return out;
}

void write_leaderboard_csv(std::span<const ScoreReport> entries, const std::filesystem::path& path) {
  auto ranking = compare(entries);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "entry,mean,std,tie_break_episode,samples\n";
  out.precision(17);
  for (const auto& r : ranking) {
    const auto& e = entries[r.index];
    out << e.entry << ',' << e.mean << ',' << e.std << ',' << e.tie_break_episode << ','
        << e.samples_consumed_training << '\n';
  }
  if (!out) throw IoError("short write on " + path.string());
}

void write_report_csv(const ScoreReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "episode,score\n";
  for (std::size_t i = 0; i < report.per_episode_scores.size(); ++i)
    out << i + 1 << ',' << report.per_episode_scores[i] << '\n';
  out << "mean," << report.mean << '\n';
  out << "std," << report.std << '\n';
  out << "tie_break_episode," << report.tie_break_episode << '\n';
  out << "samples," << report.samples_consumed_training << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

std::uint64_t variant_pack_seed(std::uint64_t master_seed, int which) { return child_seed(master_seed, which); }

VariantSet make_variant_set(std::uint64_t master_seed, std::size_t vault_size) {
  VariantSet set;
  std::set<std::uint64_t> used;
  Variant* variants[] = {&set.dev, &set.val, &set.eval};
  const char* names[] = {"dev", "val", "eval"};
  for (int k = 0; k < 3; ++k) {
    Variant& v = *variants[k];
    v.name = names[k];
    v.pack = make_texture_pack(variant_pack_seed(master_seed, k));
    v.shareable = k == 0;
    SplitMix64 rng(child_seed(master_seed, 3 + k));
    while (v.vault.size() < vault_size) {
      const std::uint64_t s = rng.next();
      if (used.insert(s).second) v.vault.push_back(s);
    }
  }
  return set;
}

void write_variant_set(const VariantSet& set, std::uint64_t master_seed, const std::filesystem::path& dir) {
  int k = 0;
  for (const Variant* v : {&set.dev, &set.val, &set.eval}) {
    const auto sub = dir / v->name;
    std::filesystem::create_directories(sub);
    write_vault(v->vault, sub / "vault.mrlv");
    write_atlas(v->pack, sub / "atlas.rgb");
    std::ofstream meta(sub / "pack.txt");
    meta << "pack_seed=" << variant_pack_seed(master_seed, k++) << '\n'
         << "pack_id=" << v->pack.pack_id << '\n'
         << "lighting=" << v->pack.lighting << '\n'
         << "visibility=" << (v->shareable ? "shareable" : "hidden") << '\n';
    if (!meta) throw IoError("cannot write " + (sub / "pack.txt").string());
  }
}

}  // namespace tilecraft
