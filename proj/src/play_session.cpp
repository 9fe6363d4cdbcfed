#include <boost/beast/core/detail/base64.hpp>
#include <chrono>
#include <cstdio>

#include "json.hpp"
#include "tilecraft/dataset.hpp"
#include "tilecraft/errors.hpp"
#include "tilecraft/gateway.hpp"

namespace tilecraft {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

std::string encode_base64(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> decode_base64(std::string_view text) {
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const std::size_t body = text.find_last_not_of('=') + 1;
  if (text.size() % 4 != 0 || text.size() - body > 2) throw ConfigError("invalid base64");
  auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  if (read != body) throw ConfigError("invalid base64");
  out.resize(written);
  return out;
}

std::string error_message(std::string_view code, std::string_view detail) {
  return json{{"type", "error"}, {"code", code}, {"detail", detail}}.dump();
}

PlaySession::PlaySession(std::filesystem::path corpus, double tick_rate, std::uint64_t entropy)
    : corpus_(std::move(corpus)), tick_rate_(tick_rate), rng_(entropy), pack_(make_texture_pack(kPlayPackSeed)) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_.next()));
  session_id_ = buf;
}

std::vector<std::string> PlaySession::on_message(std::string_view text) {
  json msg = json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
    return {error_message("bad_message", "expected a JSON object with a string \"type\"")};
  const std::string type = msg["type"];

  if (type == "act") {
    if (!live_) return {error_message("not_started", "no episode is running")};
    const json& c = msg.value("code", json());
    std::optional<Action> a;
    if (c.is_number_integer()) a = action_from_code(c.get<int>());
    if (!a) return {error_message("bad_message", "act needs an integer action code")};
    pending_ = *a;  // latest wins until the next tick
    return {};
  }

  if (type == "start") {
    if (!msg.contains("task") || !msg["task"].is_string())
      return {error_message("bad_message", "start needs a task name")};
    TaskSpec spec;
    try {
      spec = make_task(msg["task"].get<std::string>());
    } catch (const ConfigError& e) {
      return {error_message("bad_task", e.what())};
    }
    std::uint64_t seed = rng_.next() >> 11;  // stays exact as a JSON number
    if (msg.contains("seed")) {
      if (!msg["seed"].is_number_unsigned()) return {error_message("bad_message", "seed must be a non-negative integer")};
      seed = msg["seed"].get<std::uint64_t>();
    }
    if (live_) finish(true);

    auto [ep, obs] = reset(spec, seed, pack_);
    log_ = {};
    log_.header.task_id = spec.task_id;
    log_.header.world_seed = seed;
    log_.header.spec_digest = spec_digest(spec);
    log_.header.created_at = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
    log_.header.player_kind = PlayerKind::Human;
    log_.header.pack_id = pack_.pack_id;
    spec_ = spec;
    episode_ = std::move(ep);
    pending_ = Action::Noop;
    live_ = true;

    json started{{"type", "started"}, {"session_id", session_id_}, {"task", spec.task_id.name()},
                 {"tick_rate", tick_rate_}, {"seed", seed}};
    return {started.dump(), obs_message(obs, 0.0)};
  }

  return {error_message("bad_message", "unknown message type '" + type + "'")};
}

std::optional<std::string> PlaySession::tick() {
  if (!live_) return std::nullopt;
  const Action a = pending_;
  pending_ = Action::Noop;
  EnvStepResult r = env_step(*episode_, a, pack_);
  log_.actions.push_back(a);
  std::string msg = obs_message(r.observation, r.reward);
  if (r.done) finish(false);
  return msg;
}

void PlaySession::close() {
  if (live_) finish(true);
}

std::string PlaySession::obs_message(const Observation& obs, double reward) const {
  const EpisodeState& ep = *episode_;
  return json{{"type", "obs"},
              {"tick", ep.world.tick},
              {"pov_b64", encode_base64(obs.pov.pixels)},
              {"inventory", obs.inventory},
              {"compass", obs.compass_angle},
              {"reward", reward},
              {"score", ep.cumulative_score},
              {"done", ep.done},
              {"done_reason", done_reason_name(ep.done_reason)}}
      .dump();
}

void PlaySession::finish(bool truncated) {
  live_ = false;
  log_.header.truncated = truncated;
  written_.push_back(write_trajectory(corpus_, log_, annotate(log_, *spec_)));
}

}  // namespace tilecraft
