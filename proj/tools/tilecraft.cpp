#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "tilecraft/dataset.hpp"
#include "tilecraft/errors.hpp"
#include "tilecraft/eval.hpp"
#include "tilecraft/expert.hpp"
#include "tilecraft/gateway.hpp"
#include "tilecraft/train.hpp"

using namespace tilecraft;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kRuntime = 4 };

// Bad flags and unusable inputs are reported differently from corrupt data.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDefaultMaster = 7;

int variant_index(const std::string& name) {
  if (name == "dev") return 0;
  if (name == "val") return 1;
  if (name == "eval") return 2;
  return -1;
}

// "dev" | "val" | "eval" (of --master-seed), a pack.txt from make-variants, or a pack seed.
TexturePack resolve_pack(const std::string& text, std::uint64_t master) {
  if (int k = variant_index(text); k >= 0) return make_texture_pack(variant_pack_seed(master, k));
  if (fs::is_regular_file(text)) {
    auto seed = KvConfig::load(text).get_u64("pack_seed");
    if (!seed) throw DataError(text + " has no pack_seed");
    return make_texture_pack(*seed);
  }
  return make_texture_pack(parse_u64(text));
}

std::vector<std::uint64_t> resolve_vault(const std::string& text, std::uint64_t master) {
  if (int k = variant_index(text); k >= 0) {
    const VariantSet set = make_variant_set(master);
    return k == 0 ? set.dev.vault : k == 1 ? set.val.vault : set.eval.vault;
  }
  if (!fs::is_regular_file(text)) throw UsageError("no vault at " + text);
  try {
    return read_vault(text);
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

std::vector<std::string> expert_ids(const fs::path& corpus, TaskId task) {
  if (!fs::is_directory(corpus)) throw UsageError("no corpus at " + corpus.string());
  auto r = filter(corpus, [&](const TrajectoryMeta& m) { return m.is_expert && m.task_id == task; });
  for (const auto& e : r.errors) std::cerr << "skipping " << e.trajectory_id << ": " << e.message << '\n';
  if (r.ids.empty()) throw UsageError("no expert " + task.name() + " demonstrations in " + corpus.string());
  return r.ids;
}

void require_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create " + dir.string());
}

struct GenDemos {
  std::string task, out, policy = "expert";
  int count = 1;
  std::uint64_t seed = 0;
  std::size_t max_ticks = 0;

  void run() const {
    const TaskSpec spec = make_task(task);
    if (policy == "expert") ScriptedExpert probe(spec.task_id);  // rejects goal-less tasks up front
    require_writable_dir(out);
    double total = 0;
    for (int i = 0; i < count; ++i) {
      const std::uint64_t world_seed = child_seed(seed, static_cast<std::uint64_t>(i));
      RecordOptions opt;
      if (max_ticks) opt.max_ticks = max_ticks;
      Recording rec;
      if (policy == "expert") {
        auto ex = std::make_shared<ScriptedExpert>(spec.task_id);
        rec = record(spec, world_seed, [ex](const EpisodeState& ep) -> std::optional<Action> { return ex->act(ep); },
                     opt);
      } else {
        opt.player_kind = PlayerKind::Agent;
        auto rng = std::make_shared<SplitMix64>(child_seed(world_seed, 1));
        rec = record(spec, world_seed, [rng](const EpisodeState&) -> std::optional<Action> {
          return static_cast<Action>(rng->below(kActionCount));
        }, opt);
      }
      const Annotation a = annotate(rec.log, spec);
      write_trajectory(out, rec.log, a);
      total += a.total_score;
    }
    std::printf("wrote %d %s trajectories to %s, mean score %.3f\n", count, task.c_str(), out.c_str(),
                count ? total / count : 0.0);
  }
};

struct ExportDataset {
  std::string corpus, pack = "dev", task;
  std::uint64_t master = kDefaultMaster;
  bool expert_only = false;

  void run() const {
    const TexturePack p = resolve_pack(pack, master);
    std::optional<TaskId> t;
    if (!task.empty()) t = TaskId::parse(task);
    if (!fs::is_directory(corpus)) throw UsageError("no corpus at " + corpus);
    auto r = filter(corpus, [&](const TrajectoryMeta& m) {
      return (!expert_only || m.is_expert) && (!t || m.task_id == *t);
    });
    for (const auto& e : r.errors) std::cerr << "skipping " << e.trajectory_id << ": " << e.message << '\n';
    for (const auto& id : r.ids) export_tuples(corpus, id, p);
    std::printf("exported %zu trajectories with pack %s\n", r.ids.size(), p.pack_id.c_str());
  }
};

struct Train {
  std::string algo, task, corpus, config, out, pack = "dev";
  std::uint64_t budget = 1'000'000, seed = 0, master = kDefaultMaster;
  std::size_t curve_episodes = 10;

  void run() const {
    const TaskSpec spec = make_task(task);
    const TrainConfig cfg = config.empty() ? TrainConfig{} : TrainConfig::from_kv(KvConfig::load(config));
    cfg.validate();
    if (algo != "dqn" && corpus.empty()) throw UsageError("--algo " + algo + " needs --corpus");
    const TexturePack p = resolve_pack(pack, master);
    const VariantSet set = make_variant_set(master);
    std::vector<std::string> ids;
    if (algo != "dqn") ids = expert_ids(corpus, spec.task_id);
    require_writable_dir(out);

    const std::vector<std::uint64_t>& dev = set.dev.vault;
    const EvalConfig curve_eval{{dev.begin(), dev.begin() + static_cast<long>(std::min(curve_episodes, dev.size()))},
                                p, 0};
    std::unique_ptr<Policy> policy;
    std::vector<CurvePoint> curve;
    if (algo == "bc") {
      BcResult r = train_bc(corpus, ids, p, cfg, seed);
      std::printf("train accuracy %.4f\n", r.train_accuracy);
      policy = std::move(r.policy);
      curve.push_back({0, run_evaluation(*policy, spec, curve_eval).mean});
    } else {
      Budget b{budget};
      TrainResult r = algo == "dqn" ? train_dqn(spec, b, cfg, seed, curve_eval)
                                    : train_predqn(spec, load_demo_transitions(corpus, ids, p), b, cfg, seed, curve_eval);
      std::printf("consumed %llu of %llu samples\n", static_cast<unsigned long long>(r.samples_consumed),
                  static_cast<unsigned long long>(budget));
      policy = std::move(r.policy);
      curve = std::move(r.curve);
    }
    save_blob(policy->parameters(), fs::path(out) / "policy.mrlp");
    write_curve_csv(curve, fs::path(out) / "curve.csv");
    const ScoreReport dev_report = run_evaluation(*policy, spec, {dev, p, 0});
    std::printf("final dev mean %.3f over %zu episodes\n", dev_report.mean, dev.size());
  }
};

struct Evaluate {
  std::string blob, task, vault = "dev", pack = "dev", out, entry;
  std::uint64_t master = kDefaultMaster, policy_seed = 0;
  std::size_t episodes = 0;

  void run() const {
    const TaskSpec spec = make_task(task);
    const TexturePack p = resolve_pack(pack, master);
    std::vector<std::uint64_t> seeds = resolve_vault(vault, master);
    if (episodes > seeds.size())
      throw UsageError("--episodes " + std::to_string(episodes) + " exceeds the vault's " + std::to_string(seeds.size()));
    if (episodes) seeds.resize(episodes);
    if (!fs::is_regular_file(blob)) throw UsageError("no parameter blob at " + blob);
    std::unique_ptr<Policy> policy;
    try {
      policy = policy_from_blob(load_blob(blob));
    } catch (const ConfigError& e) {
      throw DataError(blob + ": " + e.what());
    }
    const EvalConfig cfg{seeds, p, policy_seed};
    ScoreReport r = run_evaluation(*policy, spec, cfg);
    r.entry = entry.empty() ? fs::path(blob).stem().string() : entry;
    if (fs::path(out).has_parent_path()) require_writable_dir(fs::path(out).parent_path());
    write_report_csv(r, out);
    std::printf("%s on %s: mean %.3f +- %.3f over %zu episodes, tie-break episode %d\n", r.entry.c_str(),
                spec.task_id.name().c_str(), r.mean, r.std, seeds.size(), r.tie_break_episode);
    std::printf("provenance %s\n", r.provenance.c_str());
  }
};

struct Report {
  std::string corpus, kind, out, task;
  std::uint64_t bin_width = 100;

  void run() const {
    std::optional<TaskId> t;
    if (!task.empty()) t = TaskId::parse(task);
    if (!fs::is_directory(corpus)) throw UsageError("no corpus at " + corpus);
    const CorpusListing listing = list_corpus(corpus);
    for (const auto& e : listing.errors) std::cerr << "skipping " << e.trajectory_id << ": " << e.message << '\n';
    std::vector<TrajectoryMeta> metas;
    for (const auto& m : listing.metas)
      if (!t || m.task_id == *t) metas.push_back(m);
    if (metas.empty()) throw UsageError("corpus " + corpus + " has no matching trajectories");
    require_writable_dir(out);
    const fs::path dir(out);
    if (kind == "histogram") {
      std::vector<DurationSample> samples;
      for (const auto& m : metas) samples.push_back({m.duration_ticks, m.player_kind});
      const LengthHistogram h = length_histogram(samples, bin_width);
      write_histogram_csv(h, dir / "histogram.csv");
      write_histogram_svg(h, dir / "histogram.svg");
      std::printf("histogram of %zu trajectories in %zu bins\n", metas.size(), h.bins.size());
    } else {
      std::vector<Annotation> notes(metas.size());
      for (std::size_t i = 0; i < metas.size(); ++i) notes[i].milestones = metas[i].milestones;
      const PrecedenceGraph g = precedence_graph(notes);
      write_precedence_csv(g, dir / "precedence.csv");
      write_precedence_svg(g, dir / "precedence.svg");
      std::printf("precedence graph of %zu trajectories, %zu edges\n", metas.size(), g.edge_counts.size());
    }
  }
};

struct MakeVariants {
  std::uint64_t master = kDefaultMaster;
  std::size_t vault_size = 100;
  std::string out;

  void run() const {
    require_writable_dir(out);
    write_variant_set(make_variant_set(master, vault_size), master, out);
    std::printf("wrote dev, val and eval variants of master seed %llu to %s\n",
                static_cast<unsigned long long>(master), out.c_str());
  }
};

struct ServePlay {
  std::string bind = "127.0.0.1:8080", corpus, web = TILECRAFT_WEB_DIR;
  double tick_rate = 10.0;

  void run() const {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw UsageError("--bind wants host:port");
    ServeOptions o;
    o.address = bind.substr(0, colon);
    const std::uint64_t port = parse_u64(bind.substr(colon + 1));
    if (port > 65535) throw UsageError("port out of range");
    o.port = static_cast<std::uint16_t>(port);
    o.corpus = corpus;
    o.static_root = web;
    o.tick_rate = tick_rate;
    require_writable_dir(corpus);
    PlayServer server(o);
    std::printf("serving http://%s:%u/ (websocket /play), recording to %s\n", o.address.c_str(),
                static_cast<unsigned>(server.port()), corpus.c_str());
    std::fflush(stdout);
    server.run();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tilecraft: crafting-world demonstrations, baselines and evaluation"};
  app.require_subcommand(1);
  const auto task_names = [] {
    std::vector<std::string> names;
    for (TaskId t : all_tasks()) names.push_back(t.name());
    return names;
  }();
  const auto task_check = CLI::IsMember(task_names);
  std::function<void()> action;

  GenDemos gen;
  auto* g = app.add_subcommand("gen-demos", "record scripted or random trajectories into a corpus");
  g->add_option("--task", gen.task)->required()->check(task_check);
  g->add_option("--count", gen.count)->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out)->required();
  g->add_option("--policy", gen.policy)->check(CLI::IsMember({"expert", "random"}));
  g->add_option("--max-ticks", gen.max_ticks, "stop early and flag truncated");
  g->callback([&] { action = [&] { gen.run(); }; });

  ExportDataset exp;
  auto* e = app.add_subcommand("export-dataset", "write tuple files next to each trajectory");
  e->add_option("--corpus", exp.corpus)->required();
  e->add_option("--pack", exp.pack, "dev|val|eval, a pack.txt, or a pack seed");
  e->add_option("--master-seed", exp.master);
  e->add_option("--task", exp.task)->check(task_check);
  e->add_flag("--expert-only", exp.expert_only);
  e->callback([&] { action = [&] { exp.run(); }; });

  Train tr;
  auto* t = app.add_subcommand("train", "train a baseline and write policy.mrlp and curve.csv");
  t->add_option("--algo", tr.algo)->required()->check(CLI::IsMember({"bc", "dqn", "predqn"}));
  t->add_option("--task", tr.task)->required()->check(task_check);
  t->add_option("--budget", tr.budget, "environment samples")->check(CLI::PositiveNumber);
  t->add_option("--corpus", tr.corpus, "expert demonstrations (bc, predqn)");
  t->add_option("--config", tr.config, "key = value overrides");
  t->add_option("--out", tr.out)->required();
  t->add_option("--seed", tr.seed);
  t->add_option("--pack", tr.pack);
  t->add_option("--master-seed", tr.master);
  t->add_option("--curve-episodes", tr.curve_episodes)->check(CLI::PositiveNumber);
  t->callback([&] { action = [&] { tr.run(); }; });

  Evaluate ev;
  auto* v = app.add_subcommand("evaluate", "score a parameter blob on a seed vault");
  v->add_option("--policy-blob", ev.blob)->required();
  v->add_option("--task", ev.task)->required()->check(task_check);
  v->add_option("--vault", ev.vault, "dev|val|eval or a vault.mrlv");
  v->add_option("--pack", ev.pack, "dev|val|eval, a pack.txt, or a pack seed");
  v->add_option("--episodes", ev.episodes, "vault prefix length")->check(CLI::PositiveNumber);
  v->add_option("--master-seed", ev.master);
  v->add_option("--policy-seed", ev.policy_seed);
  v->add_option("--entry", ev.entry);
  v->add_option("--out", ev.out, "report CSV")->required();
  v->callback([&] { action = [&] { ev.run(); }; });

  Report rep;
  auto* r = app.add_subcommand("report", "episode length histogram or milestone precedence graph");
  r->add_option("--corpus", rep.corpus)->required();
  r->add_option("--kind", rep.kind)->required()->check(CLI::IsMember({"histogram", "precedence"}));
  r->add_option("--out", rep.out)->required();
  r->add_option("--task", rep.task)->check(task_check);
  r->add_option("--bin-width", rep.bin_width)->check(CLI::PositiveNumber);
  r->callback([&] { action = [&] { rep.run(); }; });

  MakeVariants mv;
  auto* m = app.add_subcommand("make-variants", "dev, val and eval texture packs with disjoint seed vaults");
  m->add_option("--master-seed", mv.master);
  m->add_option("--vault-size", mv.vault_size)->check(CLI::PositiveNumber);
  m->add_option("--out", mv.out)->required();
  m->callback([&] { action = [&] { mv.run(); }; });

  ServePlay sp;
  auto* s = app.add_subcommand("serve-play", "live play over WebSocket, recorded as human trajectories");
  s->add_option("--bind", sp.bind, "host:port");
  s->add_option("--corpus", sp.corpus)->required();
  s->add_option("--tick-rate", sp.tick_rate)->check(CLI::PositiveNumber);
  s->add_option("--static", sp.web, "client bundle directory");
  s->callback([&] { action = [&] { sp.run(); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    action();
    return kOk;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const CorruptLogError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const IncompatibleVersionError& err) {
    std::cerr << "version error: " << err.what() << '\n';
    return kData;
  } catch (const IntegrityError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntime;
  }
}
