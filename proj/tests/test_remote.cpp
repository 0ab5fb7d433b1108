#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "fake_service.hpp"
#include "gosc/error.hpp"
#include "gosc/jsonl.hpp"
#include "gosc/pipeline.hpp"
#include "gosc/remote.hpp"
#include "synthetic.hpp"

using namespace gosc;
using nlohmann::json;

namespace {

const std::string kFixtures = GOSC_TEST_FIXTURES;
const std::string kFake = GOSC_FAKE_SCORER;

RemoteOptions fast_options() {
  RemoteOptions o;
  o.backoff = std::chrono::milliseconds(5);
  o.timeout = std::chrono::milliseconds(5000);
  return o;
}

RemoteScorer stdio_scorer(const std::string& mode, RemoteOptions o = fast_options()) {
  return RemoteScorer("stdio:" + kFake + " " + mode, o);
}

// In-process HTTP service answering with fake::answer; records the largest
// number of simultaneous requests.
class HttpService {
 public:
  explicit HttpService(std::string mode, int fail_first = 0) : mode_(std::move(mode)), fail_left_(fail_first) {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      if (fail_left_-- > 0) {
        res.status = 503;
        return;
      }
      const int now = ++active_;
      int seen = peak_.load();
      while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      ++calls_;
      res.set_content(fake::answer(req.body, mode_), "application/json");
      --active_;
    });
    server_.Post("/teapot", [](const httplib::Request&, httplib::Response& res) { res.status = 418; });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~HttpService() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int peak() const { return peak_.load(); }
  int calls() const { return calls_.load(); }

 private:
  std::string mode_;
  std::atomic<int> fail_left_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> calls_{0};
};

int unused_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("golden protocol files") {
  const auto requests = jsonl::read_file(kFixtures + "/protocol/requests.jsonl");
  const auto responses = jsonl::read_file(kFixtures + "/protocol/responses.jsonl");
  REQUIRE(requests.size() == responses.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    std::vector<protocol::Request> reqs;
    const json& doc = requests[i].value;
    if (doc.contains("requests")) {
      for (const auto& r : doc["requests"]) reqs.push_back(protocol::request_from_json(r));
      CHECK(protocol::batch(reqs) == doc);
    } else {
      reqs.push_back(protocol::request_from_json(doc));
      CHECK(protocol::to_json(reqs[0]) == doc);
    }
    const auto scores = protocol::decode_scores(responses[i].value, reqs);
    CHECK(scores.size() == reqs.size());
    for (double s : scores) CHECK((s >= 0.0 && s <= 1.0));

    // The fake service answers every golden request with matching ids.
    const auto reply = json::parse(fake::answer(doc.dump(), "normal"));
    CHECK(protocol::decode_scores(reply, reqs).size() == reqs.size());
    total += reqs.size();
  }
  CHECK(total == 7);
  const auto first = protocol::decode_scores(responses[3].value,
                                             std::vector<protocol::Request>{
                                                 protocol::request_from_json(requests[3].value["requests"][0]),
                                                 protocol::request_from_json(requests[3].value["requests"][1]),
                                                 protocol::request_from_json(requests[3].value["requests"][2])});
  CHECK(first == std::vector<double>{0.97, 0.02, 0.12});
}

TEST_CASE("decode_scores rejects malformed replies") {
  std::vector<protocol::Request> reqs(2);
  reqs[0].id = 10;
  reqs[1].id = 11;
  auto batch = [](json entries) { return json{{"responses", entries}}; };
  CHECK(protocol::decode_scores(batch({{{"id", 11}, {"score", 0.25}}, {{"id", 10}, {"score", 0.75}}}), reqs) ==
        std::vector<double>{0.75, 0.25});
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}}), reqs), ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}, {{"id", 10}, {"score", 0.5}}}), reqs),
                  ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}, {{"id", 99}, {"score", 0.5}}}), reqs),
                  ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}, {{"id", 11}, {"score", -0.1}}}), reqs),
                  ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}, {{"id", 11}, {"score", "0.1"}}}), reqs),
                  ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(batch({{{"id", 10}, {"score", 0.5}}, {{"id", 11}, {"error", "oom"}}}), reqs),
                  ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(json{{"scores", {0.1, 0.2}}}, reqs), ProtocolError);
  CHECK_THROWS_AS(protocol::decode_scores(json{{"responses", 3}}, reqs), ProtocolError);
  CHECK_THROWS_AS(protocol::request_from_json(json{{"id", 1}, {"kind", "rank"}, {"goal", "g"}}), ProtocolError);
  CHECK_THROWS_AS(protocol::request_from_json(json{{"id", 1}, {"kind", "order"}, {"goal", "g"}, {"step_a", "a"}}),
                  ProtocolError);
}

TEST_CASE("stdio scorer") {
  auto s = stdio_scorer("normal");
  const std::string goal = "Cook pasta";
  const std::vector<std::string> steps{"Boil water", "Add pasta", "Drain", "Serve"};
  const auto scores = s.relevance_batch(goal, steps);
  REQUIRE(scores.size() == 4);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(scores[i] == doctest::Approx(fake::hash_score(goal + "\x1f" + steps[i])));
  }
  CHECK(s.relevance(goal, "Drain") == scores[2]);
  CHECK(s.compare(goal, "a", "b") == 0.8);
  CHECK(s.compare(goal, "b", "a") == doctest::Approx(0.2));
  CHECK(s.raw_order(goal, "b", "a") == 0.2);

  const std::vector<StepPair> pairs{{"a", "b"}, {"c", "b"}, {"x", "y"}};
  CHECK(validate_antisymmetry(s, goal, pairs) < 1e-9);
}

TEST_CASE("stdio scorer failures") {
  const std::vector<StepPair> pairs{{"a", "b"}};
  CHECK_THROWS_AS(validate_antisymmetry(stdio_scorer("asymmetric"), "g", pairs), ProtocolError);
  CHECK_THROWS_AS(stdio_scorer("malformed").relevance("g", "s"), ProtocolError);
  CHECK_THROWS_AS(stdio_scorer("bad-score").relevance("g", "s"), ProtocolError);
  CHECK_THROWS_AS(stdio_scorer("error").relevance("g", "s"), ProtocolError);
  CHECK_THROWS_AS(stdio_scorer("drop").relevance_batch("g", std::vector<std::string>{"a", "b"}), ProtocolError);
  CHECK_THROWS_AS(stdio_scorer("exit").relevance("g", "s"), TransportError);
}

TEST_CASE("batching splits requests into chunks") {
  RemoteOptions o = fast_options();
  o.batch_size = 3;
  auto s = stdio_scorer("normal", o);
  std::vector<std::string> steps;
  for (int i = 0; i < 10; ++i) steps.push_back("step " + std::to_string(i));
  const auto scores = s.relevance_batch("g", steps);
  CHECK(scores.size() == 10);
  CHECK(s.requests_sent() == 10);
  CHECK(scores[9] == doctest::Approx(fake::hash_score("g\x1fstep 9")));
}

TEST_CASE("HTTP scorer honours the in-flight cap") {
  HttpService svc("normal");
  RemoteOptions o = fast_options();
  o.batch_size = 2;
  o.max_in_flight = 3;
  RemoteScorer s(svc.url(), o);
  std::vector<std::string> steps;
  for (int i = 0; i < 40; ++i) steps.push_back("step " + std::to_string(i));
  const auto scores = s.relevance_batch("g", steps);
  REQUIRE(scores.size() == 40);
  for (std::size_t i = 0; i < steps.size(); ++i) CHECK(scores[i] == doctest::Approx(fake::hash_score("g\x1f" + steps[i])));
  CHECK(svc.calls() == 20);
  CHECK(svc.peak() <= 3);
  CHECK(svc.peak() >= 1);
}

TEST_CASE("HTTP scorer drives the pipeline") {
  HttpService svc("normal");
  RemoteScorer s(svc.url("/score"), fast_options());
  const TaskInstance t = synth::task(30, 5, 4);
  const auto built = construct(t, s, s);
  CHECK(built.steps.size() == 5);
  CHECK(s.requests_sent() == 30 + 10);
}

TEST_CASE("transient HTTP failures are retried") {
  HttpService svc("normal", 2);
  RemoteScorer s(svc.url(), fast_options());
  CHECK(s.relevance("g", "s") == doctest::Approx(fake::hash_score("g\x1fs")));

  HttpService down("normal", 3);
  RemoteScorer t(down.url(), fast_options());
  CHECK_THROWS_AS(t.relevance("g", "s"), TransportError);
}

TEST_CASE("HTTP client errors are protocol errors") {
  HttpService svc("normal");
  RemoteScorer s(svc.url("/teapot"), fast_options());
  CHECK_THROWS_AS(s.relevance("g", "s"), ProtocolError);
}

TEST_CASE("unreachable endpoints raise transport errors") {
  const int port = unused_port();
  RemoteOptions o = fast_options();
  o.timeout = std::chrono::milliseconds(500);
  RemoteScorer http("http://127.0.0.1:" + std::to_string(port), o);
  CHECK_THROWS_AS(http.relevance("g", "s"), TransportError);
  CHECK_THROWS_AS(RemoteScorer("tcp://127.0.0.1:" + std::to_string(port), o).relevance("g", "s"), TransportError);
  CHECK_THROWS_AS(RemoteScorer("ftp://example", o), ParseError);
}

TEST_CASE("tcp scorer") {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(listener, 1) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);

  std::thread server([listener] {
    int fd = ::accept(listener, nullptr, nullptr);
    std::string buf;
    char chunk[4096];
    for (;;) {
      ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const std::string reply = fake::answer(buf.substr(0, nl), "normal") + "\n";
        buf.erase(0, nl + 1);
        (void)::write(fd, reply.data(), reply.size());
      }
    }
    ::close(fd);
  });

  {
    RemoteScorer s("tcp://127.0.0.1:" + std::to_string(port), fast_options());
    CHECK(s.relevance("g", "s") == doctest::Approx(fake::hash_score("g\x1fs")));
    CHECK(s.compare("g", "p", "q") == 0.8);
  }
  server.join();
  ::close(listener);
}
