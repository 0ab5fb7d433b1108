#include "gosc/remote.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <future>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "gosc/error.hpp"

namespace gosc {

using nlohmann::json;

namespace protocol {

json to_json(const Request& r) {
  if (r.kind == Request::Kind::Relevance) {
    return {{"id", r.id}, {"kind", "relevance"}, {"goal", r.goal}, {"step", r.step}, {"lang", r.lang}};
  }
  return {{"id", r.id},         {"kind", "order"},          {"goal", r.goal},
          {"step_a", r.step_a}, {"step_b", r.step_b}, {"lang", r.lang}};
}

Request request_from_json(const json& j) {
  Request r;
  try {
    r.id = j.at("id").get<std::int64_t>();
    const auto kind = j.at("kind").get<std::string>();
    r.goal = j.at("goal").get<std::string>();
    r.lang = j.value("lang", std::string());
    if (kind == "relevance") {
      r.kind = Request::Kind::Relevance;
      r.step = j.at("step").get<std::string>();
    } else if (kind == "order") {
      r.kind = Request::Kind::Order;
      r.step_a = j.at("step_a").get<std::string>();
      r.step_b = j.at("step_b").get<std::string>();
    } else {
      throw ProtocolError("unknown request kind \"" + kind + "\"");
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
  return r;
}

json to_json(const Response& r) { return {{"id", r.id}, {"score", r.score}}; }

json batch(std::span<const Request> requests) {
  json arr = json::array();
  for (const auto& r : requests) arr.push_back(to_json(r));
  return {{"requests", arr}};
}

std::vector<double> decode_scores(const json& reply, std::span<const Request> requests) {
  std::vector<json> entries;
  if (reply.is_object() && reply.contains("responses")) {
    if (!reply["responses"].is_array()) throw ProtocolError("\"responses\" is not an array");
    for (const auto& e : reply["responses"]) entries.push_back(e);
  } else if (reply.is_object() && reply.contains("id")) {
    entries.push_back(reply);
  } else {
    throw ProtocolError("reply is neither a response nor a batch of responses");
  }

  std::unordered_map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < requests.size(); ++i) slot.emplace(requests[i].id, i);

  std::vector<double> scores(requests.size(), 0.0);
  std::vector<bool> seen(requests.size(), false);
  for (const auto& e : entries) {
    if (!e.is_object() || !e.contains("id") || !e["id"].is_number_integer()) {
      throw ProtocolError("response without an integer id");
    }
    const auto id = e["id"].get<std::int64_t>();
    auto it = slot.find(id);
    if (it == slot.end()) throw ProtocolError("response for unknown id " + std::to_string(id));
    if (seen[it->second]) throw ProtocolError("duplicate response for id " + std::to_string(id));
    if (e.contains("error")) throw ProtocolError("scorer error for id " + std::to_string(id) + ": " + e["error"].dump());
    if (!e.contains("score") || !e["score"].is_number()) {
      throw ProtocolError("response " + std::to_string(id) + " has no numeric score");
    }
    const double s = e["score"].get<double>();
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw ProtocolError("response " + std::to_string(id) + " score outside [0, 1]");
    }
    scores[it->second] = s;
    seen[it->second] = true;
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!seen[i]) throw ProtocolError("missing response for id " + std::to_string(requests[i].id));
  }
  return scores;
}

}  // namespace protocol

namespace {

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string host, int port, std::string path, std::chrono::milliseconds timeout)
      : host_(std::move(host)), port_(port), path_(std::move(path)), timeout_(timeout) {}

  std::string roundtrip(const std::string& payload) override {
    httplib::Client cli(host_, port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    auto res = cli.Post(path_, payload, "application/json");
    if (!res) throw TransportError("HTTP " + host_ + ":" + std::to_string(port_) + ": " + httplib::to_string(res.error()));
    if (res->status >= 500) throw TransportError("HTTP status " + std::to_string(res->status));
    if (res->status != 200) throw ProtocolError("HTTP status " + std::to_string(res->status) + ": " + res->body);
    return res->body;
  }

  bool concurrent() const override { return true; }

 private:
  std::string host_;
  int port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

// Line-delimited exchange over a pair of file descriptors (a socket or the
// pipes of a spawned child).
class LineTransport : public Transport {
 public:
  LineTransport(int read_fd, int write_fd, pid_t child, std::chrono::milliseconds timeout)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child), timeout_(timeout) {}

  ~LineTransport() override {
    if (write_fd_ != read_fd_ && write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      int status = 0;
      ::waitpid(child_, &status, 0);
    }
  }

  std::string roundtrip(const std::string& payload) override {
    std::string out = payload;
    out.push_back('\n');
    std::size_t off = 0;
    while (off < out.size()) {
      ssize_t n = ::write(write_fd_, out.data() + off, out.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("write to scorer failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    return read_line();
  }

 private:
  std::string read_line() {
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      pollfd p{read_fd_, POLLIN, 0};
      int r = ::poll(&p, 1, static_cast<int>(timeout_.count()));
      if (r == 0) throw TransportError("scorer timed out");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      char buf[65536];
      ssize_t n = ::read(read_fd_, buf, sizeof buf);
      if (n == 0) throw TransportError("scorer closed the connection");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("read from scorer failed: ") + std::strerror(errno));
      }
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

std::unique_ptr<Transport> spawn(const std::string& command, std::chrono::milliseconds timeout) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw TransportError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed");
  }
  pid_t pid = ::fork();
  if (pid < 0) throw TransportError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<LineTransport>(from_child[0], to_child[1], pid, timeout);
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, const std::string& port,
                                       std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + port);
  return std::make_unique<LineTransport>(fd, fd, -1, timeout);
}

std::pair<std::string, std::string> split_host_port(const std::string& hp, const std::string& endpoint) {
  auto colon = hp.rfind(':');
  if (colon == std::string::npos || colon + 1 == hp.size()) {
    throw ParseError("endpoint", "expected host:port in \"" + endpoint + "\"");
  }
  return {hp.substr(0, colon), hp.substr(colon + 1)};
}

}  // namespace

std::unique_ptr<Transport> make_transport(const std::string& endpoint, std::chrono::milliseconds timeout) {
  // A dead peer must surface as a write error, not kill the process.
  ::signal(SIGPIPE, SIG_IGN);
  if (endpoint.rfind("stdio:", 0) == 0) return spawn(endpoint.substr(6), timeout);
  if (endpoint.rfind("tcp://", 0) == 0) {
    auto [host, port] = split_host_port(endpoint.substr(6), endpoint);
    return connect_tcp(host, port, timeout);
  }
  if (endpoint.rfind("http://", 0) == 0) {
    std::string rest = endpoint.substr(7);
    std::string path = "/score";
    if (auto slash = rest.find('/'); slash != std::string::npos) {
      path = rest.substr(slash);
      rest = rest.substr(0, slash);
    }
    auto [host, port] = split_host_port(rest, endpoint);
    int p = 0;
    try {
      p = std::stoi(port);
    } catch (const std::exception&) {
      throw ParseError("endpoint", "bad port in \"" + endpoint + "\"");
    }
    return std::make_unique<HttpTransport>(host, p, path, timeout);
  }
  throw ParseError("endpoint", "unsupported endpoint \"" + endpoint + "\" (use http://, tcp:// or stdio:)");
}

RemoteScorer::RemoteScorer(std::unique_ptr<Transport> transport, RemoteOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {
  if (options_.batch_size == 0) options_.batch_size = 1;
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

RemoteScorer::RemoteScorer(const std::string& endpoint, RemoteOptions options)
    : RemoteScorer(make_transport(endpoint, options.timeout), options) {}

RemoteScorer::~RemoteScorer() = default;

std::vector<double> RemoteScorer::send_chunk(std::span<const protocol::Request> chunk) const {
  const std::string payload =
      chunk.size() == 1 ? protocol::to_json(chunk.front()).dump() : protocol::batch(chunk).dump();
  auto delay = options_.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      std::string reply;
      if (transport_->concurrent()) {
        reply = transport_->roundtrip(payload);
      } else {
        std::lock_guard lock(wire_);
        reply = transport_->roundtrip(payload);
      }
      requests_sent_ += chunk.size();
      json parsed = json::parse(reply, nullptr, false);
      if (parsed.is_discarded()) throw ProtocolError("reply is not valid JSON");
      return protocol::decode_scores(parsed, chunk);
    } catch (const TransportError&) {
      if (attempt >= options_.retries) throw;
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

std::vector<double> RemoteScorer::send(std::vector<protocol::Request> requests) const {
  std::vector<std::span<const protocol::Request>> chunks;
  for (std::size_t i = 0; i < requests.size(); i += options_.batch_size) {
    const std::size_t n = std::min(options_.batch_size, requests.size() - i);
    chunks.emplace_back(requests.data() + i, n);
  }
  std::vector<double> out;
  out.reserve(requests.size());
  if (!transport_->concurrent() || options_.max_in_flight == 1 || chunks.size() == 1) {
    for (auto c : chunks) {
      auto s = send_chunk(c);
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  }
  // Waves of at most max_in_flight chunks; results are appended in chunk order.
  for (std::size_t i = 0; i < chunks.size(); i += options_.max_in_flight) {
    std::vector<std::future<std::vector<double>>> wave;
    for (std::size_t j = i; j < std::min(chunks.size(), i + options_.max_in_flight); ++j) {
      wave.push_back(std::async(std::launch::async, [this, c = chunks[j]] { return send_chunk(c); }));
    }
    for (auto& f : wave) {
      auto s = f.get();
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

double RemoteScorer::relevance(const std::string& goal, const std::string& step) const {
  return relevance_batch(goal, std::span<const std::string>(&step, 1)).front();
}

std::vector<double> RemoteScorer::relevance_batch(const std::string& goal, std::span<const std::string> steps) const {
  std::vector<protocol::Request> reqs;
  reqs.reserve(steps.size());
  for (const auto& s : steps) {
    protocol::Request r;
    r.id = next_id_++;
    r.kind = protocol::Request::Kind::Relevance;
    r.goal = goal;
    r.step = s;
    r.lang = options_.language;
    reqs.push_back(std::move(r));
  }
  return send(std::move(reqs));
}

double RemoteScorer::raw_order(const std::string& goal, const std::string& a, const std::string& b) const {
  StepPair p{a, b};
  return precedes_batch(goal, std::span<const StepPair>(&p, 1)).front();
}

double RemoteScorer::precedes(const std::string& goal, const std::string& first, const std::string& second) const {
  return raw_order(goal, first, second);
}

std::vector<double> RemoteScorer::precedes_batch(const std::string& goal, std::span<const StepPair> pairs) const {
  std::vector<protocol::Request> reqs;
  reqs.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    protocol::Request r;
    r.id = next_id_++;
    r.kind = protocol::Request::Kind::Order;
    r.goal = goal;
    r.step_a = a;
    r.step_b = b;
    r.lang = options_.language;
    reqs.push_back(std::move(r));
  }
  return send(std::move(reqs));
}

double validate_antisymmetry(const RemoteScorer& scorer, const std::string& goal, std::span<const StepPair> pairs,
                             double tolerance) {
  double worst = 0.0;
  for (const auto& [a, b] : pairs) {
    const double dev = std::abs(scorer.raw_order(goal, a, b) + scorer.raw_order(goal, b, a) - 1.0);
    worst = std::max(worst, dev);
    if (dev > tolerance) {
      throw ProtocolError("order scores not antisymmetric for (\"" + a + "\", \"" + b + "\"): deviation " +
                          std::to_string(dev));
    }
  }
  return worst;
}

}  // namespace gosc
