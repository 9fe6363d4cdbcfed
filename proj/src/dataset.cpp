#include "tilecraft/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "json.hpp"
#include "tilecraft/binio.hpp"
#include "tilecraft/rng.hpp"

namespace tilecraft {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kLogFile = "log.mrlg";

bool scoreable(const TaskId& t) { return t.family != TaskFamily::Survival; }

bool meets_expert_bar(const TrajectoryMeta& m, std::optional<double> threshold) {
  if (!threshold || static_cast<double>(m.duration_ticks) > *threshold) return false;
  if (!scoreable(m.task_id)) return true;
  return m.total_score == max_score(make_task(m.task_id));
}

// Per-task 1.5 x median scripted duration.
std::map<std::uint8_t, double> thresholds_by_task(const std::vector<TrajectoryMeta>& metas) {
  std::map<std::uint8_t, std::vector<DurationSample>> samples;
  for (const auto& m : metas) samples[m.task_id.code()].push_back({m.duration_ticks, m.player_kind});
  std::map<std::uint8_t, double> out;
  for (const auto& [task, s] : samples)
    if (auto t = expert_threshold(s)) out[task] = *t;
  return out;
}

void apply_expert_flags(std::vector<TrajectoryMeta>& metas) {
  auto thresholds = thresholds_by_task(metas);
  for (auto& m : metas) {
    auto it = thresholds.find(m.task_id.code());
    m.is_expert = meets_expert_bar(m, it == thresholds.end() ? std::nullopt : std::optional(it->second));
  }
}

TrajectoryMeta read_meta(const fs::path& dir) {
  auto bytes = read_file(dir / kMetaFile);
  return meta_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace

std::string meta_to_json(const TrajectoryMeta& m) {
  json j;
  j["trajectory_id"] = m.trajectory_id;
  j["task_id"] = m.task_id.name();
  j["player_kind"] = std::string(player_kind_name(m.player_kind));
  j["total_score"] = m.total_score;
  j["duration_ticks"] = m.duration_ticks;
  j["deaths"] = m.deaths;
  j["noop_count"] = m.noop_count;
  json ms = json::array();
  for (auto [item, tick] : m.milestones) ms.push_back({code(item), tick});
  j["milestones"] = ms;
  j["pack_id"] = m.pack_id;
  j["is_expert"] = m.is_expert;
  return j.dump(2) + "\n";
}

TrajectoryMeta meta_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    TrajectoryMeta m;
    m.trajectory_id = j.at("trajectory_id").get<std::string>();
    m.task_id = TaskId::parse(j.at("task_id").get<std::string>());
    auto kind = player_kind_from_name(j.at("player_kind").get<std::string>());
    if (!kind) throw CorruptLogError("unknown player_kind");
    m.player_kind = *kind;
    m.total_score = j.at("total_score").get<double>();
    m.duration_ticks = j.at("duration_ticks").get<std::uint64_t>();
    m.deaths = j.at("deaths").get<int>();
    m.noop_count = j.at("noop_count").get<int>();
    for (const auto& pair : j.at("milestones")) {
      auto item = item_from_code(pair.at(0).get<int>());
      if (!item) throw CorruptLogError("unknown milestone item code");
      m.milestones.emplace_back(*item, pair.at(1).get<std::uint64_t>());
    }
    m.pack_id = j.at("pack_id").get<std::string>();
    m.is_expert = j.at("is_expert").get<bool>();
    return m;
  } catch (const json::exception& e) {
    throw CorruptLogError(std::string("malformed meta.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptLogError(std::string("malformed meta.json: ") + e.what());
  }
}

std::string trajectory_id_for(const LogHeader& h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h.spec_digest ^ h.world_seed ^ h.created_at));
  return buf;
}

std::string write_trajectory(const fs::path& root, const TrajectoryLog& log, const Annotation& annotation) {
  const std::string id = trajectory_id_for(log.header);
  const fs::path dir = root / id;
  const auto bytes = encode_log(log);

  std::error_code ec;
  if (fs::exists(dir / kLogFile, ec)) {
    if (read_file(dir / kLogFile) != bytes)
      throw IntegrityError("trajectory " + id + " already exists with different content");
    return id;
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  TrajectoryMeta m;
  m.trajectory_id = id;
  m.task_id = log.header.task_id;
  m.player_kind = log.header.player_kind;
  m.total_score = annotation.total_score;
  m.duration_ticks = annotation.duration_ticks;
  m.deaths = annotation.deaths;
  m.noop_count = annotation.noop_count;
  m.milestones = annotation.milestones;
  m.pack_id = log.header.pack_id;

  // Provisional flag against the corpus as it stands; list_corpus recomputes.
  std::vector<TrajectoryMeta> peers = list_corpus(root).metas;
  peers.push_back(m);
  apply_expert_flags(peers);
  m.is_expert = peers.back().is_expert;

  write_file(dir / kLogFile, bytes);
  const std::string text = meta_to_json(m);
  write_file(dir / kMetaFile, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return id;
}

StoredTrajectory read_trajectory(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  if (!fs::is_directory(dir)) throw IoError("no trajectory " + id + " under " + root.string());
  return {read_log(dir / kLogFile), read_meta(dir)};
}

CorpusListing list_corpus(const fs::path& root) {
  CorpusListing out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string id = entry.path().filename().string();
    // A directory being written has no meta yet.
    if (!fs::exists(entry.path() / kMetaFile)) continue;
    try {
      TrajectoryMeta m = read_meta(entry.path());
      if (m.trajectory_id != id) throw CorruptLogError("meta.json id does not match directory");
      out.metas.push_back(std::move(m));
    } catch (const std::exception& e) {
      out.errors.push_back({id, e.what()});
    }
  }
  std::sort(out.metas.begin(), out.metas.end(),
            [](const auto& a, const auto& b) { return a.trajectory_id < b.trajectory_id; });
  apply_expert_flags(out.metas);
  return out;
}

FilterResult filter(const fs::path& root, const std::function<bool(const TrajectoryMeta&)>& predicate) {
  CorpusListing listing = list_corpus(root);
  FilterResult r;
  for (const auto& m : listing.metas)
    if (predicate(m)) r.ids.push_back(m.trajectory_id);
  r.errors = std::move(listing.errors);
  return r;
}

fs::path tuple_path(const fs::path& root, const std::string& id, const std::string& pack_id) {
  return root / id / ("tuples-" + pack_id + ".mrlt");
}

fs::path export_tuples(const fs::path& root, const std::string& id, const TexturePack& pack,
                       const std::optional<TaskSpec>& spec) {
  StoredTrajectory t = read_trajectory(root, id);
  Rerenderer rr(t.log, pack, spec);
  const auto& items = rr.episode().spec.observation_spec.inventory_items;
  const std::size_t inv_len = items.size();

  ByteWriter w;
  const std::size_t record = kPovBytes + 2 * inv_len + 10;
  w.bytes.reserve(kTupleHeaderBytes + record * t.log.actions.size());
  w.raw("MRLT", 4);
  w.put<std::uint16_t>(kTupleFormatVersion);
  w.put<std::uint8_t>(t.log.header.task_id.code());
  w.put<std::uint16_t>(static_cast<std::uint16_t>(inv_len));
  w.put<std::uint64_t>(t.log.actions.size());
  while (auto s = rr.next()) {
    const Observation& o = *s->observation;
    w.raw(o.pov.pixels.data(), kPovBytes);
    for (std::uint32_t n : o.inventory) w.put<std::uint16_t>(static_cast<std::uint16_t>(std::min<std::uint32_t>(n, 65535)));
    w.put<float>(static_cast<float>(o.compass_angle));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(code(s->action)));
    w.put<float>(static_cast<float>(s->reward));
    w.put<std::uint8_t>(s->done ? 1 : 0);
  }
  const fs::path path = tuple_path(root, id, pack.pack_id);
  write_file(path, w.bytes);
  return path;
}

TupleReader::TupleReader(const fs::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(kTupleHeaderBytes);
  in_.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (in_.gcount() != static_cast<std::streamsize>(head.size()))
    throw CorruptLogError("short tuple header in " + path.string());
  ByteReader r(head);
  char magic[4];
  r.raw(magic, 4);
  if (std::string_view(magic, 4) != "MRLT") throw CorruptLogError("bad tuple magic in " + path.string());
  if (r.get<std::uint16_t>() != kTupleFormatVersion)
    throw IncompatibleVersionError("unsupported tuple format version in " + path.string());
  auto task = TaskId::from_code(r.get<std::uint8_t>());
  if (!task) throw CorruptLogError("unknown task code in " + path.string());
  header_.task_id = *task;
  header_.inventory_len = r.get<std::uint16_t>();
  header_.tick_count = r.get<std::uint64_t>();

  in_.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in_.tellg());
  if (size != kTupleHeaderBytes + header_.tick_count * header_.record_bytes())
    throw CorruptLogError("tuple file length does not match its header: " + path.string());
  record_.resize(header_.record_bytes());
}

void TupleReader::read_into(std::uint64_t index, SampleBatch& b) {
  if (index >= header_.tick_count) throw std::out_of_range("tuple index out of range");
  in_.seekg(static_cast<std::streamoff>(kTupleHeaderBytes + index * record_.size()));
  in_.read(reinterpret_cast<char*>(record_.data()), static_cast<std::streamsize>(record_.size()));
  if (!in_) throw IoError("tuple read failed");
  b.pov.insert(b.pov.end(), record_.begin(), record_.begin() + kPovBytes);
  ByteReader r{std::span<const std::uint8_t>(record_).subspan(kPovBytes)};
  for (int i = 0; i < header_.inventory_len; ++i) b.inventory.push_back(r.get<std::uint16_t>());
  b.compass.push_back(r.get<float>());
  b.actions.push_back(r.get<std::uint8_t>());
  b.rewards.push_back(r.get<float>());
  b.dones.push_back(r.get<std::uint8_t>());
}

BatchStream::BatchStream(const fs::path& root, std::vector<std::string> ids, const TexturePack& pack,
                         std::size_t batch_size, std::uint64_t shuffle_seed)
    : batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  for (const auto& id : ids) {
    fs::path path = tuple_path(root, id, pack.pack_id);
    if (!fs::exists(path)) path = export_tuples(root, id, pack);
    readers_.emplace_back(path);
    const auto& h = readers_.back().header();
    if (readers_.size() == 1) inventory_len_ = h.inventory_len;
    else if (h.inventory_len != inventory_len_)
      throw ConfigError("trajectories with different inventory layouts cannot share a batch stream");
    const auto r = static_cast<std::uint32_t>(readers_.size() - 1);
    for (std::uint64_t i = 0; i < h.tick_count; ++i) order_.emplace_back(r, i);
  }
  SplitMix64 rng(shuffle_seed);
  shuffle(std::span(order_), rng);
}

std::optional<SampleBatch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  SampleBatch b;
  b.inventory_len = inventory_len_;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  for (; cursor_ < end; ++cursor_) readers_[order_[cursor_].first].read_into(order_[cursor_].second, b);
  return b;
}

BatchStream load_batches(const fs::path& root, std::vector<std::string> ids, const TexturePack& pack,
                         std::size_t batch_size, std::uint64_t shuffle_seed) {
  return BatchStream(root, std::move(ids), pack, batch_size, shuffle_seed);
}

}  // namespace tilecraft
