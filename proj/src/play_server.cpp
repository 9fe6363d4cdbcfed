#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tilecraft/errors.hpp"
#include "tilecraft/gateway.hpp"

namespace tilecraft {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

// Maps a request target onto static_root; nullopt for anything escaping it.
std::optional<std::filesystem::path> static_path(const std::filesystem::path& root, std::string_view target) {
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::filesystem::path rel = std::filesystem::path(std::string(target.substr(1))).lexically_normal();
  for (const auto& part : rel)
    if (part == "..") return std::nullopt;
  if (rel.empty() || target.back() == '/') rel /= "index.html";
  return root / rel;
}

}  // namespace

struct WsConnection;

struct PlayServer::Impl {
  ServeOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::signal_set signals{ioc, SIGINT, SIGTERM};
  SplitMix64 entropy{static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())};
  std::vector<std::weak_ptr<WsConnection>> sockets;
  bool stopping = false;

  void accept();
  void shutdown();
};

struct WsConnection : std::enable_shared_from_this<WsConnection> {
  PlayServer::Impl* server;
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer buffer;
  net::steady_timer timer;
  PlaySession session;
  std::chrono::steady_clock::duration period;
  std::chrono::steady_clock::time_point next_tick;
  std::deque<std::string> outbox;
  bool writing = false;
  bool closed = false;

  WsConnection(PlayServer::Impl* s, tcp::socket socket)
      : server(s),
        ws(std::move(socket)),
        timer(ws.get_executor()),
        session(server->options.corpus, server->options.tick_rate, server->entropy.next()),
        period(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / server->options.tick_rate))) {}

  void start(http::request<http::string_body> req) {
    ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws.text(true);
    ws.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->finish();
      self->read();
      self->next_tick = std::chrono::steady_clock::now() + self->period;
      self->schedule();
    });
  }

  void read() {
    ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const std::string text = beast::buffers_to_string(self->buffer.data());
      self->buffer.consume(self->buffer.size());
      const bool was_live = self->session.live();
      self->guard([&] {
        for (auto& reply : self->session.on_message(text)) self->send(std::move(reply));
      });
      // A fresh episode gets a full interval before its first tick.
      if (!was_live && self->session.live()) {
        self->next_tick = std::chrono::steady_clock::now() + self->period;
        self->timer.cancel();
      }
      self->read();
    });
  }

  void schedule() {
    timer.expires_at(next_tick);
    timer.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (self->closed) return;
      if (!ec) {
        self->guard([&] {
          if (auto obs = self->session.tick()) self->send(std::move(*obs));
        });
        self->next_tick += self->period;
        // Never burst to catch up after a stall.
        const auto now = std::chrono::steady_clock::now();
        if (self->next_tick < now) self->next_tick = now + self->period;
      }
      self->schedule();
    });
  }

  template <typename F>
  void guard(F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      std::cerr << "session " << session.session_id() << ": " << e.what() << '\n';
      send(error_message("internal", e.what()));
    }
  }

  void send(std::string msg) {
    if (closed) return;
    outbox.push_back(std::move(msg));
    if (!writing) write();
  }

  void write() {
    writing = true;
    ws.async_write(net::buffer(outbox.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->outbox.pop_front();
      if (self->outbox.empty())
        self->writing = false;
      else
        self->write();
    });
  }

  // Idempotent; writes a live episode as truncated.
  void finish() {
    if (closed) return;
    closed = true;
    timer.cancel();
    try {
      session.close();
    } catch (const std::exception& e) {
      std::cerr << "session " << session.session_id() << ": " << e.what() << '\n';
    }
    beast::error_code ec;
    beast::get_lowest_layer(ws).socket().close(ec);
  }
};

namespace {

struct HttpConnection : std::enable_shared_from_this<HttpConnection> {
  PlayServer::Impl* server;
  beast::tcp_stream stream;
  beast::flat_buffer buffer;
  http::request<http::string_body> req;

  HttpConnection(PlayServer::Impl* s, tcp::socket socket)
      : server(s), stream(std::move(socket)) {}

  void read() {
    req = {};
    stream.expires_after(std::chrono::seconds(30));
    http::async_read(stream, buffer, req, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        beast::error_code ignored;
        self->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->handle();
    });
  }

  void handle() {
    const std::string target(req.target());
    if (websocket::is_upgrade(req)) {
      if (target.substr(0, target.find('?')) == "/play") {
        stream.expires_never();
        auto ws = std::make_shared<WsConnection>(server, stream.release_socket());
        server->sockets.push_back(ws);
        ws->start(std::move(req));
        return;
      }
      return respond(http::status::not_found, "text/plain", "no websocket endpoint here\n");
    }
    if (req.method() != http::verb::get && req.method() != http::verb::head)
      return respond(http::status::method_not_allowed, "text/plain", "GET only\n");
    auto path = static_path(server->options.static_root, target);
    if (!path) return respond(http::status::bad_request, "text/plain", "bad path\n");
    std::ifstream in(*path, std::ios::binary);
    if (!std::filesystem::is_regular_file(*path) || !in)
      return respond(http::status::not_found, "text/plain", "not found\n");
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(*path), body.str());
  }

  void respond(http::status status, std::string_view type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req.version());
    res->set(http::field::server, "tilecraft");
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(req.keep_alive());
    if (req.method() == http::verb::head) {
      res->content_length(body.size());
    } else {
      res->body() = std::move(body);
      res->prepare_payload();
    }
    http::async_write(stream, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) return self->read();
      beast::error_code ignored;
      self->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }
};

}  // namespace

void PlayServer::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (stopping) return;
    if (!ec) std::make_shared<HttpConnection>(this, std::move(socket))->read();
    accept();
  });
}

void PlayServer::Impl::shutdown() {
  if (stopping) return;
  stopping = true;
  beast::error_code ec;
  acceptor.close(ec);
  signals.cancel(ec);
  for (auto& w : sockets)
    if (auto s = w.lock()) s->finish();
  sockets.clear();
  ioc.stop();
}

PlayServer::PlayServer(ServeOptions options) : impl_(std::make_unique<Impl>()) {
  if (!(options.tick_rate > 0)) throw ConfigError("tick rate must be positive");
  impl_->options = std::move(options);
  const auto& o = impl_->options;
  beast::error_code ec;
  const auto address = net::ip::make_address(o.address, ec);
  if (ec) throw ConfigError("bad bind address '" + o.address + "'");
  const tcp::endpoint endpoint(address, o.port);
  auto& a = impl_->acceptor;
  a.open(endpoint.protocol(), ec);
  if (!ec) a.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(endpoint, ec);
  if (!ec) a.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw IoError("cannot listen on " + o.address + ":" + std::to_string(o.port) + ": " + ec.message());
}

PlayServer::~PlayServer() = default;

std::uint16_t PlayServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void PlayServer::run() {
  impl_->signals.async_wait([impl = impl_.get()](beast::error_code ec, int) {
    if (!ec) impl->shutdown();
  });
  impl_->accept();
  impl_->ioc.run();
}

void PlayServer::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] { impl->shutdown(); });
}

}  // namespace tilecraft
