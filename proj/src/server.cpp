#include "vip/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace vip {
namespace {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Idle:
      return "idle";
    case Phase::Touching:
      return "touching";
    case Phase::Dragging:
      return "dragging";
    case Phase::Resizing:
      return "resizing";
  }
  return "idle";
}

Point2 point_arg(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ProtocolError(std::string(what) + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double number_arg(const Json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number()) throw ProtocolError(std::string("missing number '") + key + "'");
  return body[key].get<double>();
}

}  // namespace

ProtocolEndpoint::ProtocolEndpoint(Session& session) : session_(session) {
  session_.set_sink([this](const Json& line) { pending_events_.push_back(line); });
}

void ProtocolEndpoint::reset_client() { client_seq_.reset(); }

Json ProtocolEndpoint::envelope(std::string_view type, TimeMs t) {
  Json j = Json::object();
  j["type"] = type;
  j["seq"] = ++seq_;
  j["t"] = t;
  return j;
}

bool ProtocolEndpoint::done() const { return flushed_; }

Json ProtocolEndpoint::snapshot() {
  const std::size_t n = session_.frames_done();
  Json j = envelope("snapshot", n == 0 ? 0.0 : session_.frame_time(n - 1));
  j["frame"] = n;
  j["session"] = Json::parse(save_session(session_.design()));
  j["selection"] = target_to_json(session_.design().selection);
  j["phase"] = phase_name(session_.engine().state().phase);
  if (const auto c = session_.marker().reported_centre()) {
    j["marker"] = Json::array({c->x, c->y});
  } else {
    j["marker"] = nullptr;
  }
  if (const auto q = session_.display_object().quad()) {
    Json corners = Json::array();
    for (const Point2& p : q->corners) corners.push_back(Json::array({p.x, p.y}));
    j["quad"] = corners;
  } else {
    j["quad"] = nullptr;
  }
  j["effects"] = session_.design().effects_log.size();
  j["done"] = flushed_;
  return j;
}

Json ProtocolEndpoint::error(std::string_view message) {
  Json j = envelope("error", session_.next_frame_time());
  j["message"] = message;
  return j;
}

void ProtocolEndpoint::apply_config(const Json& body) {
  WorldState& w = session_.world();
  for (const auto& [key, value] : body.items()) {
    if (key == "type" || key == "seq" || key == "t") continue;
    if (key == "marker_color") {
      if (!value.is_array() || value.size() != 3) throw ProtocolError("marker_color must be [h, s, v]");
      w.marker_colour = {value[0].get<int>(), value[1].get<int>(), value[2].get<int>()};
    } else if (key == "marker_radius") {
      if (!value.is_number() || value.get<double>() <= 0) throw ProtocolError("marker_radius must be positive");
      w.marker_radius = value.get<double>();
    } else if (key == "luma_sigma") {
      if (!value.is_number() || value.get<double>() < 0) throw ProtocolError("luma_sigma must be >= 0");
      w.noise.luma_sigma = value.get<double>();
    } else if (key == "audio_rms") {
      if (!value.is_number() || value.get<double>() < 0) throw ProtocolError("audio_rms must be >= 0");
      w.noise.audio_rms = value.get<double>();
    } else if (key == "illumination") {
      if (!value.is_number() || value.get<double>() < 0) throw ProtocolError("illumination must be >= 0");
      w.illumination = value.get<double>();
    } else if (key == "snapshot_every") {
      if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) throw ProtocolError("snapshot_every must be >= 1");
      snapshot_every = value.get<std::size_t>();
    } else {
      throw ProtocolError("unknown config key '" + key + "'");
    }
  }
}

void ProtocolEndpoint::handle(std::string_view text, std::vector<Json>& out) {
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!msg.is_object()) throw ProtocolError("message must be an object");
  if (!msg.contains("type") || !msg["type"].is_string()) throw ProtocolError("missing string 'type'");
  if (!msg.contains("seq") || !msg["seq"].is_number_unsigned()) throw ProtocolError("missing unsigned 'seq'");
  if (!msg.contains("t") || !msg["t"].is_number()) throw ProtocolError("missing number 't'");
  const auto seq = msg["seq"].get<std::uint64_t>();
  if (client_seq_ && seq <= *client_seq_) {
    throw ProtocolError("seq " + std::to_string(seq) + " does not follow " + std::to_string(*client_seq_));
  }

  const std::string type = msg["type"];
  WorldState& w = session_.world();
  const TimeMs now = session_.next_frame_time();
  try {
    if (type == "marker") {
      if (msg.contains("visible") && msg["visible"] == false) {
        w.marker_pos.jump_to(now, std::nullopt);
      } else {
        w.marker_pos.jump_to(now, Point2{number_arg(msg, "x"), number_arg(msg, "y")});
      }
    } else if (type == "tap") {
      // Audio up to the horizon is already filtered; the burst starts no
      // earlier than that.
      const TimeMs at = std::max(now, session_.audio_horizon());
      if (at > w.duration) throw ProtocolError("session has ended");
      w.taps.insert(std::upper_bound(w.taps.begin(), w.taps.end(), at), at);
    } else if (type == "pose") {
      if (msg.contains("visible") && msg["visible"] == false) {
        w.quad_pose.jump_to(now, std::nullopt);
      } else {
        if (!msg.contains("corners") || !msg["corners"].is_array() || msg["corners"].size() != 4) {
          throw ProtocolError("pose needs four corners");
        }
        Quad q;
        for (std::size_t i = 0; i < 4; ++i) q.corners[i] = point_arg(msg["corners"][i], "corner");
        w.quad_pose.jump_to(now, q);
      }
    } else if (type == "config") {
      apply_config(msg);
    } else if (type == "snapshot") {
      // Reply below.
    } else {
      throw ProtocolError("unknown message type '" + type + "'");
    }
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("bad field: ") + e.what());
  }
  client_seq_ = seq;

  Json ack = envelope("ack", now);
  ack["ack"] = seq;
  out.push_back(std::move(ack));
  if (type == "snapshot") out.push_back(snapshot());
}

void ProtocolEndpoint::step(std::vector<Json>& out) {
  if (flushed_) return;
  if (session_.finished()) {
    session_.finish();
    flushed_ = true;
  } else {
    session_.step_frame();
  }
  for (Json& line : pending_events_) {
    Json j = envelope("event", line.at("t").get<double>());
    j["event"] = std::move(line);
    out.push_back(std::move(j));
  }
  pending_events_.clear();
  if (flushed_ || session_.frames_done() % snapshot_every == 0) out.push_back(snapshot());
}

// ---------------------------------------------------------------------------
// Transport

std::string websocket_accept(std::string_view key) {
  const std::string in = std::string(key) + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(in.data()), in.size(), digest);
  unsigned char b64[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(b64, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(b64), static_cast<std::size_t>(n));
}

WorldState interactive_world() {
  WorldState w;
  w.duration = 24.0 * 3600.0 * 1000.0;
  w.quad_pose = QuadTrajectory({{0.0, Quad{{Point2{200, 100}, {560, 110}, {550, 380}, {210, 370}}}}});
  w.marker_pos = PointTrajectory({{0.0, {}, false}});
  return w;
}

namespace {

enum class Framing { Unknown, Lines, WebSocket };

class Connection {
 public:
  explicit Connection(int fd) : fd_(fd) {
    const int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~Connection() { close(); }

  int fd() const { return fd_; }
  bool open() const { return fd_ >= 0; }
  /// Framing settled and, for WebSocket, the handshake done.
  bool ready() const { return framing_ == Framing::Lines || upgraded_; }
  /// A client that stays silent is taken to speak lines.
  void assume_lines() {
    if (framing_ == Framing::Unknown) framing_ = Framing::Lines;
  }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  /// Reads what is available; returns complete messages. Throws
  /// ProtocolError on bad framing. Closes on EOF.
  std::vector<std::string> read_messages() {
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) {
      if (n < 0 && (errno == EAGAIN || errno == EINTR)) return {};
      close();
      return {};
    }
    in_.append(buf, static_cast<std::size_t>(n));
    std::vector<std::string> out;
    if (framing_ == Framing::Unknown) {
      if (in_.size() < 4) return out;
      framing_ = in_.compare(0, 4, "GET ") == 0 ? Framing::WebSocket : Framing::Lines;
    }
    if (framing_ == Framing::Lines) {
      std::size_t nl;
      while ((nl = in_.find('\n')) != std::string::npos) {
        std::string line = in_.substr(0, nl);
        in_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(std::move(line));
      }
      if (in_.size() > (1u << 20)) throw ProtocolError("line too long");
      return out;
    }
    if (!upgraded_) {
      const std::size_t end = in_.find("\r\n\r\n");
      if (end == std::string::npos) {
        if (in_.size() > 16384) throw ProtocolError("oversized handshake");
        return out;
      }
      handshake(in_.substr(0, end));
      in_.erase(0, end + 4);
      upgraded_ = true;
    }
    while (auto msg = next_frame()) out.push_back(std::move(*msg));
    return out;
  }

  void send(const Json& j) {
    if (framing_ == Framing::WebSocket && upgraded_) {
      write_frame(0x1, j.dump());
    } else {
      write_all(j.dump() + "\n");
    }
  }

  void send_close() {
    if (framing_ == Framing::WebSocket && upgraded_) write_frame(0x8, std::string("\x03\xea", 2));
  }

 private:
  void write_all(std::string_view bytes) {
    while (!bytes.empty() && fd_ >= 0) {
      const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        close();
        return;
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  void write_frame(std::uint8_t opcode, std::string_view payload) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | opcode));
    if (payload.size() < 126) {
      f.push_back(static_cast<char>(payload.size()));
    } else if (payload.size() < 65536) {
      f.push_back(static_cast<char>(126));
      f.push_back(static_cast<char>(payload.size() >> 8));
      f.push_back(static_cast<char>(payload.size() & 0xFF));
    } else {
      f.push_back(static_cast<char>(127));
      for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((payload.size() >> (8 * i)) & 0xFF));
    }
    f.append(payload);
    write_all(f);
  }

  void handshake(const std::string& head) {
    std::string key;
    bool upgrade = false;
    std::size_t pos = head.find("\r\n");
    while (pos != std::string::npos && pos < head.size()) {
      const std::size_t next = head.find("\r\n", pos + 2);
      const std::string line = head.substr(pos + 2, next == std::string::npos ? std::string::npos : next - pos - 2);
      pos = next;
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string name = line.substr(0, colon);
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      std::string value = line.substr(colon + 1);
      value.erase(0, value.find_first_not_of(' '));
      while (!value.empty() && value.back() == ' ') value.pop_back();
      if (name == "sec-websocket-key") key = value;
      if (name == "upgrade") {
        std::transform(value.begin(), value.end(), value.begin(), [](unsigned char c) { return std::tolower(c); });
        upgrade = value == "websocket";
      }
    }
    if (!upgrade || key.empty()) {
      write_all("HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
      throw ProtocolError("expected a WebSocket upgrade");
    }
    write_all("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
              "Sec-WebSocket-Accept: " +
              websocket_accept(key) + "\r\n\r\n");
  }

  std::optional<std::string> next_frame() {
    while (true) {
      if (in_.size() < 2) return std::nullopt;
      const auto b0 = static_cast<std::uint8_t>(in_[0]);
      const auto b1 = static_cast<std::uint8_t>(in_[1]);
      const bool fin = b0 & 0x80;
      const std::uint8_t opcode = b0 & 0x0F;
      if (!(b1 & 0x80)) throw ProtocolError("client frames must be masked");
      std::uint64_t len = b1 & 0x7F;
      std::size_t head = 2;
      if (len == 126) {
        if (in_.size() < 4) return std::nullopt;
        len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[2])) << 8) | static_cast<std::uint8_t>(in_[3]);
        head = 4;
      } else if (len == 127) {
        if (in_.size() < 10) return std::nullopt;
        len = 0;
        for (std::size_t i = 2; i < 10; ++i) len = (len << 8) | static_cast<std::uint8_t>(in_[i]);
        head = 10;
      }
      if (len > (1u << 20)) throw ProtocolError("frame too large");
      if (in_.size() < head + 4 + len) return std::nullopt;
      const std::string mask = in_.substr(head, 4);
      std::string payload = in_.substr(head + 4, static_cast<std::size_t>(len));
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);
      in_.erase(0, head + 4 + static_cast<std::size_t>(len));

      if (opcode == 0x8) {
        send_close();
        close();
        return std::nullopt;
      }
      if (opcode == 0x9) {
        write_frame(0xA, payload);
        continue;
      }
      if (opcode == 0xA) continue;
      if (opcode != 0x1 || !fin) throw ProtocolError("only unfragmented text frames are accepted");
      return payload;
    }
  }

  int fd_;
  std::string in_;
  Framing framing_ = Framing::Unknown;
  bool upgraded_ = false;
};

}  // namespace

SessionServer::SessionServer(Session& session, const ServerOptions& opts) : session_(session), endpoint_(session) {
  endpoint_.snapshot_every = std::max<std::size_t>(1, opts.snapshot_every);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw BindError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(opts.port);
  if (inet_pton(AF_INET, opts.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw BindError("bad bind address " + opts.bind_address);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 1) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw BindError("cannot bind port " + std::to_string(opts.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SessionServer::~SessionServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SessionServer::run() {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(1000.0 / session_.world_state().frame_rate));

  while (!stop_) {
    pollfd lp{listen_fd_, POLLIN, 0};
    if (::poll(&lp, 1, 50) <= 0 || !(lp.revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;

    Connection conn(fd);
    endpoint_.reset_client();
    std::vector<Json> out;
    bool greeted = false;
    const auto connected = Clock::now();
    auto deadline = connected + period;

    const auto flush = [&] {
      for (const Json& j : out) conn.send(j);
      out.clear();
    };

    while (!stop_ && conn.open()) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      const int timeout = greeted ? static_cast<int>(std::clamp<long long>(wait, 0, 50)) : 20;
      pollfd cp{conn.fd(), POLLIN, 0};
      if (::poll(&cp, 1, timeout) > 0 && (cp.revents & (POLLIN | POLLHUP))) {
        try {
          for (const std::string& m : conn.read_messages()) endpoint_.handle(m, out);
        } catch (const ProtocolError& e) {
          out.push_back(endpoint_.error(e.what()));
          flush();
          conn.send_close();
          conn.close();
          break;
        }
      }
      if (!conn.open()) break;
      // The greeting snapshot goes out once the framing is known; frames
      // start after it.
      if (!greeted) {
        if (!conn.ready() && Clock::now() - connected > std::chrono::milliseconds(200)) conn.assume_lines();
        if (!conn.ready()) continue;
        greeted = true;
        out.insert(out.begin(), endpoint_.snapshot());
        flush();
        deadline = Clock::now() + period;
      }
      if (Clock::now() >= deadline) {
        deadline += period;
        if (Clock::now() > deadline + 4 * period) deadline = Clock::now() + period;
        if (!endpoint_.done()) {
          endpoint_.step(out);
          ++frames_;
        }
      }
      if (conn.open()) flush();
    }
  }
}

}  // namespace vip
