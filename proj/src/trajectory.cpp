#include "tilecraft/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "tilecraft/binio.hpp"
#include "tilecraft/errors.hpp"

namespace tilecraft {

namespace {

constexpr char kLogMagic[4] = {'M', 'R', 'L', 'G'};
constexpr std::size_t kLogHeaderSize = 4 + 2 + 1 + 1 + 8 + 8 + 8 + 1 + 16 + 8;

bool is_craft_like(Action a) { return code(a) >= code(Action::PlaceTable); }

}  // namespace

std::string_view player_kind_name(PlayerKind k) {
  switch (k) {
    case PlayerKind::Human: return "human";
    case PlayerKind::Scripted: return "scripted";
    case PlayerKind::Agent: return "agent";
  }
  return "agent";
}

std::optional<PlayerKind> player_kind_from_name(std::string_view name) {
  for (auto k : {PlayerKind::Human, PlayerKind::Scripted, PlayerKind::Agent})
    if (player_kind_name(k) == name) return k;
  return std::nullopt;
}

std::vector<std::uint8_t> encode_log(const TrajectoryLog& log) {
  const LogHeader& h = log.header;
  if (h.pack_id.size() > 16) throw ConfigError("pack_id longer than 16 bytes: " + h.pack_id);
  ByteWriter w;
  w.raw(kLogMagic, 4);
  w.put<std::uint16_t>(h.format_version);
  w.put<std::uint8_t>(h.task_id.code());
  w.put<std::uint8_t>(h.truncated ? 1 : 0);
  w.put<std::uint64_t>(h.world_seed);
  w.put<std::uint64_t>(h.spec_digest);
  w.put<std::uint64_t>(h.created_at);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(h.player_kind));
  char pack[16] = {};
  std::memcpy(pack, h.pack_id.data(), h.pack_id.size());
  w.raw(pack, 16);
  w.put<std::uint64_t>(log.actions.size());
  for (Action a : log.actions) w.put<std::uint8_t>(static_cast<std::uint8_t>(code(a)));
  return std::move(w.bytes);
}

TrajectoryLog decode_log(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kLogHeaderSize) throw CorruptLogError("log shorter than its header");
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kLogMagic, 4) != 0) throw CorruptLogError("bad log magic");
  TrajectoryLog log;
  LogHeader& h = log.header;
  h.format_version = r.get<std::uint16_t>();
  if (h.format_version != kLogFormatVersion)
    throw IncompatibleVersionError("unsupported log format version " + std::to_string(h.format_version));
  auto task = TaskId::from_code(r.get<std::uint8_t>());
  if (!task) throw CorruptLogError("unknown task code in log header");
  h.task_id = *task;
  const auto flags = r.get<std::uint8_t>();
  if (flags & ~1u) throw CorruptLogError("unknown log flags");
  h.truncated = flags & 1u;
  h.world_seed = r.get<std::uint64_t>();
  h.spec_digest = r.get<std::uint64_t>();
  h.created_at = r.get<std::uint64_t>();
  const auto kind = r.get<std::uint8_t>();
  if (kind > 2) throw CorruptLogError("unknown player kind in log header");
  h.player_kind = static_cast<PlayerKind>(kind);
  char pack[16];
  r.raw(pack, 16);
  h.pack_id.assign(pack, strnlen(pack, 16));
  const auto count = r.get<std::uint64_t>();
  if (bytes.size() - kLogHeaderSize != count)
    throw CorruptLogError("action count does not match log length");
  log.actions.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto a = action_from_code(r.get<std::uint8_t>());
    if (!a) throw CorruptLogError("action code out of range at tick " + std::to_string(i + 1));
    log.actions.push_back(*a);
  }
  return log;
}

void write_log(const TrajectoryLog& log, const std::filesystem::path& path) {
  write_file(path, encode_log(log));
}

TrajectoryLog read_log(const std::filesystem::path& path) { return decode_log(read_file(path)); }

Recording record(const TaskSpec& spec, std::uint64_t seed, const ActionStream& stream,
                 const RecordOptions& options) {
  Recording rec;
  LogHeader& h = rec.log.header;
  h.task_id = spec.task_id;
  h.world_seed = seed;
  h.spec_digest = spec_digest(spec);
  h.created_at = options.created_at;
  h.player_kind = options.player_kind;
  h.pack_id = options.pack_id;

  EpisodeState ep = start_episode(spec, seed);
  while (!ep.done) {
    if (options.max_ticks && rec.log.actions.size() >= *options.max_ticks) {
      h.truncated = true;
      break;
    }
    std::optional<Action> a = stream(ep);
    if (!a) {
      h.truncated = true;
      break;
    }
    StepResult r = advance(ep, *a);
    rec.log.actions.push_back(*a);
    rec.state_hashes.push_back(state_hash(ep.world));
    rec.rewards.push_back(r.reward);
  }
  rec.final_episode = std::move(ep);
  return rec;
}

TaskSpec spec_for_log(const LogHeader& header, const std::optional<TaskSpec>& spec) {
  TaskSpec s = spec ? *spec : make_task(header.task_id);
  if (s.task_id != header.task_id)
    throw IncompatibleVersionError("log task " + header.task_id.name() + " does not match spec task " +
                                   s.task_id.name());
  if (spec_digest(s) != header.spec_digest)
    throw IncompatibleVersionError("spec digest mismatch for " + header.task_id.name() +
                                   " log (recorded with a different task configuration)");
  return s;
}

Replayer::Replayer(const TrajectoryLog& log, std::optional<TaskSpec> spec) : log_(log) {
  episode_ = start_episode(spec_for_log(log_.header, spec), log_.header.world_seed);
}

std::optional<ReplayStep> Replayer::next() {
  if (position_ >= log_.actions.size()) return std::nullopt;
  if (episode_.done)
    throw CorruptLogError("log continues past the end of its episode at tick " +
                          std::to_string(position_ + 1));
  const Action a = log_.actions[position_++];
  StepResult r = advance(episode_, a);
  info_ = std::move(r.info);
  return ReplayStep{&episode_.world, a, r.reward, r.done, &info_};
}

std::vector<std::uint64_t> replay_hashes(const TrajectoryLog& log, const std::optional<TaskSpec>& spec) {
  std::vector<std::uint64_t> out;
  out.reserve(log.actions.size());
  Replayer rp(log, spec);
  while (auto s = rp.next()) out.push_back(state_hash(*s->state));
  return out;
}

Rerenderer::Rerenderer(const TrajectoryLog& log, TexturePack pack, std::optional<TaskSpec> spec)
    : replayer_(log, std::move(spec)), pack_(std::move(pack)) {}

std::optional<RenderedStep> Rerenderer::next() {
  if (!replayer_.episode().done) obs_ = observe(replayer_.episode(), pack_);
  auto s = replayer_.next();
  if (!s) return std::nullopt;
  return RenderedStep{&obs_, s->action, s->reward, s->done};
}

Annotation annotate(const TrajectoryLog& log, const std::optional<TaskSpec>& spec) {
  Annotation a;
  Replayer rp(log, spec);
  while (auto s = rp.next()) {
    const std::uint64_t tick = s->state->tick;
    a.total_score += s->reward;
    if (s->reward != 0.0) a.per_tick_rewards.emplace_back(tick, s->reward);
    for (ItemId item : s->info->new_milestones) a.milestones.emplace_back(item, tick);
    if (s->info->outcome.died) ++a.deaths;
    if (s->action == Action::Noop || (is_craft_like(s->action) && !s->info->outcome.action_effective))
      ++a.noop_count;
  }
  a.duration_ticks = log.actions.size();
  a.done_reason = rp.episode().done_reason;
  return a;
}

PrecedenceGraph precedence_graph(std::span<const Annotation> annotations) {
  PrecedenceGraph g;
  std::vector<bool> seen(kItemCount, false);
  for (const Annotation& a : annotations) {
    auto ms = a.milestones;
    std::stable_sort(ms.begin(), ms.end(), [](auto& l, auto& r) { return l.second < r.second; });
    for (auto [item, tick] : ms) seen[code(item)] = true;
    for (std::size_t i = 1; i < ms.size(); ++i) ++g.edge_counts[{ms[i - 1].first, ms[i].first}];
  }
  for (int i = 0; i < kItemCount; ++i)
    if (seen[i]) g.nodes.push_back(static_cast<ItemId>(i));
  return g;
}

PrecedenceGraph precedence_graph(std::span<const TrajectoryLog> logs) {
  std::vector<Annotation> annotations;
  annotations.reserve(logs.size());
  for (const auto& log : logs) annotations.push_back(annotate(log));
  return precedence_graph(annotations);
}

std::optional<double> expert_threshold(std::span<const DurationSample> samples) {
  std::vector<std::uint64_t> d;
  for (const auto& s : samples)
    if (s.player_kind == PlayerKind::Scripted) d.push_back(s.duration_ticks);
  if (d.empty()) return std::nullopt;
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double median = n % 2 ? static_cast<double>(d[n / 2])
                              : (static_cast<double>(d[n / 2 - 1]) + static_cast<double>(d[n / 2])) / 2.0;
  return 1.5 * median;
}

LengthHistogram length_histogram(std::span<const DurationSample> samples, std::uint64_t bin_width) {
  if (bin_width == 0) throw ConfigError("histogram bin width must be positive");
  if (samples.empty()) throw ConfigError("histogram needs at least one trajectory");
  LengthHistogram h;
  h.bin_width = bin_width;
  for (const auto& s : samples) ++h.bins[(s.duration_ticks / bin_width) * bin_width];
  h.expert_threshold = expert_threshold(samples);
  return h;
}

LengthHistogram length_histogram(std::span<const TrajectoryLog> logs, std::uint64_t bin_width) {
  std::vector<DurationSample> samples;
  for (const auto& l : logs) samples.push_back({l.actions.size(), l.header.player_kind});
  return length_histogram(samples, bin_width);
}

void write_histogram_csv(const LengthHistogram& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bin_start,bin_end,count\n";
  for (auto [start, count] : h.bins) out << start << ',' << start + h.bin_width << ',' << count << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

void write_precedence_csv(const PrecedenceGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "from,to,count\n";
  for (const auto& [edge, count] : g.edge_counts)
    out << item_name(edge.first) << ',' << item_name(edge.second) << ',' << count << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

void write_histogram_svg(const LengthHistogram& h, const std::filesystem::path& path) {
  constexpr double W = 640, H = 360, left = 50, bottom = 40, top = 20, right = 20;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  std::uint64_t lo = h.bins.empty() ? 0 : h.bins.begin()->first;
  std::uint64_t hi = h.bins.empty() ? h.bin_width : h.bins.rbegin()->first + h.bin_width;
  if (h.expert_threshold) hi = std::max<std::uint64_t>(hi, static_cast<std::uint64_t>(*h.expert_threshold) + 1);
  int max_count = 1;
  for (auto [start, count] : h.bins) max_count = std::max(max_count, count);
  const double span = static_cast<double>(hi - lo);
  auto sx = [&](double t) { return left + (t - lo) / span * (W - left - right); };
  auto sy = [&](double c) { return H - bottom - c / max_count * (H - top - bottom); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (auto [start, count] : h.bins) {
    const double x0 = sx(static_cast<double>(start)), x1 = sx(static_cast<double>(start + h.bin_width));
    out << "<rect x=\"" << x0 << "\" y=\"" << sy(count) << "\" width=\"" << std::max(1.0, x1 - x0 - 1)
        << "\" height=\"" << sy(0) - sy(count) << "\" fill=\"#4477aa\"/>\n";
  }
  out << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << W - right << "\" y2=\"" << sy(0)
      << "\" stroke=\"black\"/>\n";
  if (h.expert_threshold) {
    const double x = sx(*h.expert_threshold);
    out << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << sy(0)
        << "\" stroke=\"#cc3311\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << x + 4 << "\" y=\"" << top + 12 << "\" font-size=\"12\" fill=\"#cc3311\">expert threshold "
        << *h.expert_threshold << "</text>\n";
  }
  out << "<text x=\"" << left << "\" y=\"" << H - 10 << "\" font-size=\"12\">" << lo << "</text>\n";
  out << "<text x=\"" << W - right - 40 << "\" y=\"" << H - 10 << "\" font-size=\"12\">" << hi << "</text>\n";
  out << "<text x=\"" << W / 2 - 60 << "\" y=\"" << H - 10 << "\" font-size=\"12\">duration (ticks)</text>\n";
  out << "<text x=\"4\" y=\"" << top + 10 << "\" font-size=\"12\">" << max_count << "</text>\n";
  out << "</svg>\n";
}

void write_precedence_svg(const PrecedenceGraph& g, const std::filesystem::path& path) {
  constexpr double W = 720, H = 720, R = 280;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t n = g.nodes.size();
  std::vector<std::pair<double, double>> pos(kItemCount);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * static_cast<double>(i) / std::max<std::size_t>(n, 1) - std::numbers::pi / 2;
    pos[code(g.nodes[i])] = {W / 2 + R * std::cos(a), H / 2 + R * std::sin(a)};
  }
  int max_count = 1;
  for (const auto& [e, c] : g.edge_counts) max_count = std::max(max_count, c);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
         "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#555\"/></marker></defs>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& [e, c] : g.edge_counts) {
    auto [x0, y0] = pos[code(e.first)];
    auto [x1, y1] = pos[code(e.second)];
    // Curve each edge to the right of its direction so A->B and B->A stay apart.
    const double mx = (x0 + x1) / 2 + (y1 - y0) * 0.15, my = (y0 + y1) / 2 - (x1 - x0) * 0.15;
    const double width = 1.0 + 6.0 * static_cast<double>(c) / max_count;
    out << "<path d=\"M" << x0 << ',' << y0 << " Q" << mx << ',' << my << ' ' << x1 << ',' << y1
        << "\" fill=\"none\" stroke=\"#555\" stroke-opacity=\"0.6\" stroke-width=\"" << width
        << "\" marker-end=\"url(#arrow)\"><title>" << item_name(e.first) << " -> " << item_name(e.second)
        << ": " << c << "</title></path>\n";
  }
  for (ItemId item : g.nodes) {
    auto [x, y] = pos[code(item)];
    out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"8\" fill=\"#228833\"/>\n";
    out << "<text x=\"" << x + 10 << "\" y=\"" << y - 10 << "\" font-size=\"12\">" << item_name(item)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace tilecraft
