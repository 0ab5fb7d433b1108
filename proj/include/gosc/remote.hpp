#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gosc/scorers.hpp"

namespace gosc {

// Wire protocol shared with external scorer services. One JSON document per
// line (stream transports) or per request body (HTTP):
//
//   {"id": 1, "kind": "relevance", "goal": "...", "step": "...", "lang": "en"}
//   {"id": 2, "kind": "order", "goal": "...", "step_a": "...", "step_b": "...", "lang": "en"}
//   -> {"id": 1, "score": 0.93}
//
// Batches wrap requests as {"requests": [...]} -> {"responses": [...]}.
// A service reports a per-request failure as {"id": n, "error": "..."}.
namespace protocol {

struct Request {
  std::int64_t id = 0;
  enum class Kind { Relevance, Order } kind = Kind::Relevance;
  std::string goal;
  std::string step;    // relevance
  std::string step_a;  // order
  std::string step_b;
  std::string lang;
};

struct Response {
  std::int64_t id = 0;
  double score = 0.0;
};

nlohmann::json to_json(const Request& r);
Request request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Response& r);

nlohmann::json batch(std::span<const Request> requests);

// Parses a batch (or single) response and returns scores aligned with
// `requests`. Throws ProtocolError on missing/duplicate/unknown ids,
// error entries, or scores that are not finite reals in [0, 1].
std::vector<double> decode_scores(const nlohmann::json& reply, std::span<const Request> requests);

}  // namespace protocol

// Sends one serialized document and returns the reply document.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string roundtrip(const std::string& payload) = 0;
  // True when concurrent roundtrip() calls may overlap on the wire.
  virtual bool concurrent() const { return false; }
};

// Endpoint forms:
//   http://host:port[/path]   POST, path defaults to /score
//   tcp://host:port           line-delimited socket
//   stdio:<shell command>     spawn and talk over stdin/stdout
std::unique_ptr<Transport> make_transport(const std::string& endpoint, std::chrono::milliseconds timeout);

struct RemoteOptions {
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::string language = "en";
  int retries = 2;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  std::chrono::milliseconds timeout{30000};
};

// Client for a remote scorer. Transport failures are retried `retries`
// times with exponential backoff, then surface as TransportError; malformed
// replies surface immediately as ProtocolError. Scores are never
// substituted.
class RemoteScorer : public RelevanceScorer, public OrderScorer {
 public:
  RemoteScorer(std::unique_ptr<Transport> transport, RemoteOptions options);
  RemoteScorer(const std::string& endpoint, RemoteOptions options);
  ~RemoteScorer() override;

  double relevance(const std::string& goal, const std::string& step) const override;
  std::vector<double> relevance_batch(const std::string& goal, std::span<const std::string> steps) const override;

  // Raw score for the orientation as given, bypassing canonicalization.
  double raw_order(const std::string& goal, const std::string& a, const std::string& b) const;

  std::size_t requests_sent() const { return requests_sent_.load(); }

 protected:
  double precedes(const std::string& goal, const std::string& first, const std::string& second) const override;
  std::vector<double> precedes_batch(const std::string& goal, std::span<const StepPair> pairs) const override;

 private:
  std::vector<double> send(std::vector<protocol::Request> requests) const;
  std::vector<double> send_chunk(std::span<const protocol::Request> chunk) const;

  std::unique_ptr<Transport> transport_;
  RemoteOptions options_;
  mutable std::atomic<std::int64_t> next_id_{1};
  mutable std::atomic<std::size_t> requests_sent_{0};
  mutable std::mutex wire_;
};

/// Queries both orientations of every pair and returns the largest
/// |p(a,b) + p(b,a) - 1|. Throws ProtocolError when it exceeds `tolerance`.
double validate_antisymmetry(const RemoteScorer& scorer, const std::string& goal, std::span<const StepPair> pairs,
                             double tolerance = 1e-6);

}  // namespace gosc
