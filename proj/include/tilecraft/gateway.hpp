#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilecraft/render.hpp"
#include "tilecraft/rng.hpp"
#include "tilecraft/task.hpp"
#include "tilecraft/trajectory.hpp"

namespace tilecraft {

std::string encode_base64(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> decode_base64(std::string_view text);

// Frames rendered for human players; also stamped into their logs.
inline constexpr std::uint64_t kPlayPackSeed = 0;

// One live-play connection. Transport-free: the server feeds it client text
// frames and a tick clock, and sends back whatever JSON it returns.
//
// client -> server  {"type":"start","task":name,"seed"?:n}  {"type":"act","code":n}
// server -> client  {"type":"started",...} {"type":"obs",...} {"type":"error","code","detail"}
class PlaySession {
 public:
  PlaySession(std::filesystem::path corpus, double tick_rate, std::uint64_t entropy);

  std::vector<std::string> on_message(std::string_view text);

  // Consumes the pending action (then Noop) and returns the Obs frame; nullopt
  // when no episode is live. A finished episode is written to the corpus.
  std::optional<std::string> tick();

  // Connection gone: a live episode is written as truncated.
  void close();

  bool live() const { return live_; }
  const std::string& session_id() const { return session_id_; }
  const std::vector<std::string>& written() const { return written_; }
  const std::optional<EpisodeState>& episode() const { return episode_; }

 private:
  std::string obs_message(const Observation& obs, double reward) const;
  void finish(bool truncated);

  std::filesystem::path corpus_;
  double tick_rate_;
  SplitMix64 rng_;
  std::string session_id_;
  TexturePack pack_;
  std::optional<TaskSpec> spec_;
  std::optional<EpisodeState> episode_;
  TrajectoryLog log_;
  Action pending_ = Action::Noop;
  bool live_ = false;
  std::vector<std::string> written_;
};

std::string error_message(std::string_view code, std::string_view detail);

struct ServeOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path corpus;
  std::filesystem::path static_root;
  double tick_rate = 10.0;
};

// WebSocket sessions at /play, static files from static_root everywhere else.
class PlayServer {
 public:
  // Binds immediately; throws IoError when the address is unavailable.
  explicit PlayServer(ServeOptions options);
  ~PlayServer();

  std::uint16_t port() const;
  // Blocks until stop().
  void run();
  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace tilecraft
