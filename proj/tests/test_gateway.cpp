#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "tilecraft/dataset.hpp"
#include "tilecraft/errors.hpp"
#include "tilecraft/expert.hpp"
#include "tilecraft/gateway.hpp"

using namespace tilecraft;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json only(const std::vector<std::string>& replies) {
  REQUIRE(replies.size() == 1);
  return json::parse(replies[0]);
}

std::string act(Action a) { return json{{"type", "act"}, {"code", code(a)}}.dump(); }

}  // namespace

TEST_CASE("base64") {
  const std::string foobar = "foobar";
  const std::vector<std::uint8_t> bytes(foobar.begin(), foobar.end());
  CHECK(encode_base64(bytes) == "Zm9vYmFy");
  CHECK(encode_base64(std::span(bytes).first(4)) == "Zm9vYg==");
  CHECK(decode_base64("Zm9vYg==") == std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 4));

  SplitMix64 rng(4);
  std::vector<std::uint8_t> frame(kPovBytes);
  for (auto& b : frame) b = static_cast<std::uint8_t>(rng.below(256));
  const std::string text = encode_base64(frame);
  CHECK(text.size() == 16384);
  CHECK(decode_base64(text) == frame);
  CHECK_THROWS_AS(decode_base64("Zm9v!!=="), ConfigError);
  CHECK_THROWS_AS(decode_base64("Zm9"), ConfigError);
  CHECK(decode_base64("").empty());
}

TEST_CASE("session protocol errors") {
  TempDir dir("tilecraft_gateway_errors");
  PlaySession s(dir.path, 10, 1);
  CHECK(only(s.on_message("{nope"))["code"] == "bad_message");
  CHECK(only(s.on_message("[1,2]"))["code"] == "bad_message");
  CHECK(only(s.on_message(R"({"type":"dance"})"))["code"] == "bad_message");
  CHECK(only(s.on_message(act(Action::Forward)))["code"] == "not_started");
  CHECK(only(s.on_message(R"({"type":"start","task":"obtain_bread"})"))["code"] == "bad_task");
  CHECK(only(s.on_message(R"({"type":"start"})"))["code"] == "bad_message");
  CHECK(only(s.on_message(R"({"type":"start","task":"treechop","seed":-3})"))["code"] == "bad_message");
  CHECK_FALSE(s.live());
  CHECK(!s.tick());

  s.on_message(R"({"type":"start","task":"treechop","seed":5})");
  CHECK(only(s.on_message(R"({"type":"act","code":99})"))["code"] == "bad_message");
  CHECK(only(s.on_message(R"({"type":"act","code":"forward"})"))["code"] == "bad_message");
  CHECK(s.live());
}

TEST_CASE("start replies with Started and the first frame") {
  TempDir dir("tilecraft_gateway_start");
  PlaySession s(dir.path, 10, 2);
  const auto replies = s.on_message(R"({"type":"start","task":"navigate_dense","seed":12})");
  REQUIRE(replies.size() == 2);
  const json started = json::parse(replies[0]);
  CHECK(started["type"] == "started");
  CHECK(started["session_id"] == s.session_id());
  CHECK(started["task"] == "navigate_dense");
  CHECK(started["tick_rate"] == 10.0);
  const json obs = json::parse(replies[1]);
  CHECK(obs["type"] == "obs");
  CHECK(obs["tick"] == 0);
  CHECK(obs["done"] == false);
  CHECK(obs["score"] == 0.0);

  // The frame is the raw render of the play pack.
  auto [ep, expected] = reset(make_task("navigate_dense"), 12, make_texture_pack(kPlayPackSeed));
  const auto pov = decode_base64(obs["pov_b64"].get<std::string>());
  CHECK(std::equal(pov.begin(), pov.end(), expected.pov.pixels.begin(), expected.pov.pixels.end()));
  CHECK(obs["compass"].get<double>() == expected.compass_angle);
}

TEST_CASE("idle ticks record Noop and a disconnect truncates") {
  TempDir dir("tilecraft_gateway_idle");
  PlaySession s(dir.path, 10, 3);
  s.on_message(R"({"type":"start","task":"treechop","seed":8})");
  for (int k = 0; k < 7; ++k) REQUIRE(s.tick());
  s.close();
  CHECK_FALSE(s.live());
  REQUIRE(s.written().size() == 1);
  const StoredTrajectory t = read_trajectory(dir.path, s.written()[0]);
  CHECK(t.log.actions == std::vector<Action>(7, Action::Noop));
  CHECK(t.log.header.truncated);
  CHECK(t.log.header.player_kind == PlayerKind::Human);
  CHECK(t.log.header.world_seed == 8);
  CHECK(t.log.header.created_at > 1600000000);
  CHECK(t.log.header.pack_id == make_texture_pack(kPlayPackSeed).pack_id);
  s.close();
  CHECK(s.written().size() == 1);
}

TEST_CASE("latest action between ticks wins") {
  TempDir dir("tilecraft_gateway_latest");
  PlaySession s(dir.path, 10, 4);
  s.on_message(R"({"type":"start","task":"treechop","seed":9})");
  s.on_message(act(Action::Forward));
  s.on_message(act(Action::TurnLeft));
  s.tick();
  s.on_message(act(Action::Attack));
  s.tick();
  s.tick();
  s.close();
  const StoredTrajectory t = read_trajectory(dir.path, s.written()[0]);
  CHECK(t.log.actions == std::vector<Action>{Action::TurnLeft, Action::Attack, Action::Noop});
}

TEST_CASE("a finished session replays to the scores shown live") {
  TempDir dir("tilecraft_gateway_replay");
  PlaySession s(dir.path, 10, 5);
  s.on_message(R"({"type":"start","task":"treechop","seed":31})");
  ScriptedExpert expert(make_task("treechop").task_id);
  std::vector<double> live_scores;
  std::int64_t last_tick = 0;
  while (s.live()) {
    s.on_message(act(expert.act(*s.episode())));
    const json obs = json::parse(*s.tick());
    CHECK(obs["tick"].get<std::int64_t>() > last_tick);
    last_tick = obs["tick"];
    live_scores.push_back(obs["score"]);
    if (obs["done"] == true) CHECK(obs["done_reason"] == "success");
  }
  CHECK(live_scores.back() == 64.0);
  REQUIRE(s.written().size() == 1);
  const StoredTrajectory t = read_trajectory(dir.path, s.written()[0]);
  CHECK_FALSE(t.log.header.truncated);
  CHECK(t.meta.total_score == 64.0);

  Replayer r(t.log);
  double running = 0;
  std::size_t i = 0;
  while (auto step = r.next()) {
    running += step->reward;
    REQUIRE(i < live_scores.size());
    CHECK(running == live_scores[i++]);
  }
  CHECK(i == live_scores.size());
}

TEST_CASE("restarting mid-episode writes the old one as truncated") {
  TempDir dir("tilecraft_gateway_restart");
  PlaySession s(dir.path, 10, 6);
  s.on_message(R"({"type":"start","task":"treechop","seed":1})");
  s.tick();
  s.on_message(R"({"type":"start","task":"navigate_sparse","seed":2})");
  CHECK(s.live());
  REQUIRE(s.written().size() == 1);
  CHECK(read_trajectory(dir.path, s.written()[0]).log.header.truncated);
}

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::pair<unsigned, std::string> http_get(std::uint16_t port, const std::string& target) {
  net::io_context ioc;
  beast::tcp_stream stream(ioc);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  http::request<http::empty_body> req(http::verb::get, target, 11);
  req.set(http::field::host, "localhost");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  return {res.result_int(), res.body()};
}

struct RunningServer {
  PlayServer server;
  std::thread thread;
  explicit RunningServer(ServeOptions o) : server(std::move(o)), thread([this] { server.run(); }) {}
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("server speaks the protocol over a real socket") {
  TempDir corpus("tilecraft_gateway_server_corpus");
  TempDir web("tilecraft_gateway_server_web");
  std::ofstream(web.path / "index.html") << "<html>play</html>";
  fs::create_directories(web.path / "js");
  std::ofstream(web.path / "js" / "app.js") << "let x = 1;";

  ServeOptions o;
  o.port = 0;
  o.corpus = corpus.path;
  o.static_root = web.path;
  o.tick_rate = 40;
  RunningServer rs(o);
  const std::uint16_t port = rs.server.port();
  REQUIRE(port != 0);

  CHECK(http_get(port, "/") == std::pair<unsigned, std::string>{200, "<html>play</html>"});
  CHECK(http_get(port, "/js/app.js").second == "let x = 1;");
  CHECK(http_get(port, "/missing.js").first == 404);
  CHECK(http_get(port, "/../secret").first == 400);

  net::io_context ioc;
  websocket::stream<tcp::socket> ws(ioc);
  ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  ws.handshake("localhost", "/play");
  auto receive = [&] {
    beast::flat_buffer buf;
    ws.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  };

  ws.write(net::buffer(std::string("not json")));
  CHECK(receive()["code"] == "bad_message");

  ws.write(net::buffer(std::string(R"({"type":"start","task":"treechop","seed":77})")));
  const json started = receive();
  CHECK(started["type"] == "started");
  CHECK(started["tick_rate"] == 40.0);
  CHECK(receive()["tick"] == 0);

  // Connection kept after an error; frames keep coming at the tick rate.
  ws.write(net::buffer(std::string(R"({"type":"act","code":-1})")));
  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t last = 0;
  bool saw_error = false;
  int frames = 0;
  while (frames < 12) {
    const json m = receive();
    if (m["type"] == "error") {
      CHECK(m["code"] == "bad_message");
      saw_error = true;
      continue;
    }
    CHECK(m["tick"].get<std::int64_t>() == last + 1);
    last = m["tick"];
    ++frames;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(saw_error);
  // 12 frames at 40 Hz span at least 11 intervals; allow one more of jitter.
  CHECK(elapsed >= 10.0 / 40);

  ws.close(websocket::close_code::normal);
  ws.next_layer().close();

  // The server writes the truncated log once it notices the disconnect.
  std::vector<std::string> ids;
  for (int i = 0; i < 200 && ids.empty(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ids = filter(corpus.path, [](const TrajectoryMeta&) { return true; }).ids;
  }
  REQUIRE(ids.size() == 1);
  const StoredTrajectory t = read_trajectory(corpus.path, ids[0]);
  CHECK(t.log.header.truncated);
  CHECK(t.log.header.player_kind == PlayerKind::Human);
  CHECK(t.log.actions.size() >= 12);
}

TEST_CASE("bind failure is reported") {
  ServeOptions o;
  o.port = 0;
  PlayServer first(o);
  o.port = first.port();
  CHECK_THROWS_AS(PlayServer{o}, IoError);
  o.address = "not-an-address";
  CHECK_THROWS_AS(PlayServer{o}, ConfigError);
}
