#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vip/sim.hpp"

namespace vip {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Session protocol without a transport. Every outgoing message is an object
/// {"type", "seq", "t", ...} with seq counting up from 1 over the endpoint's
/// lifetime. Message schema is documented in the README.
class ProtocolEndpoint {
 public:
  explicit ProtocolEndpoint(Session& session);

  /// Forget the client-side sequence; call on each new connection.
  void reset_client();

  /// Applies one client message and appends the replies. Throws
  /// ProtocolError on malformed input.
  void handle(std::string_view text, std::vector<Json>& out);

  /// Runs one frame and appends its events followed by a snapshot (every
  /// `snapshot_every` frames). At the end of a scripted session the audio
  /// path is flushed once and stepping stops.
  void step(std::vector<Json>& out);

  bool done() const;
  Json snapshot();
  Json error(std::string_view message);

  std::size_t snapshot_every = 1;

 private:
  Json envelope(std::string_view type, TimeMs t);
  void apply_config(const Json& body);

  Session& session_;
  std::uint64_t seq_ = 0;
  std::optional<std::uint64_t> client_seq_;
  std::vector<Json> pending_events_;
  bool flushed_ = false;
};

struct ServerOptions {
  std::uint16_t port = 0;
  std::string bind_address = "127.0.0.1";
  std::size_t snapshot_every = 1;
};

/// One client at a time over TCP. A connection that opens with an HTTP
/// upgrade request speaks WebSocket text frames; anything else speaks
/// newline-delimited JSON. Frames are paced at the world's frame rate while
/// a client is connected; with no client the session does not advance.
class SessionServer {
 public:
  SessionServer(Session& session, const ServerOptions& opts);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Serves until stop() is called.
  void run();
  void stop() noexcept { stop_ = true; }
  std::size_t frames_served() const noexcept { return frames_; }

 private:
  Session& session_;
  ProtocolEndpoint endpoint_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> frames_{0};
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(std::string_view key);

/// World for `serve` without a scenario: the default display-object pose,
/// no marker, no scripted taps and an effectively unbounded duration.
WorldState interactive_world();

}  // namespace vip
