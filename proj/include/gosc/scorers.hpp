#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gosc/corpus.hpp"

namespace gosc {

using StepPair = std::pair<std::string, std::string>;

// Goal-step relevance: confidence in [0, 1] that `step` is a step toward
// `goal`. Implementations are immutable after construction and may be
// called concurrently.
class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;

  virtual double relevance(const std::string& goal, const std::string& step) const = 0;

  // Default scores one at a time; remote scorers batch.
  virtual std::vector<double> relevance_batch(const std::string& goal, std::span<const std::string> steps) const;
};

// Pairwise step ordering: probability in [0, 1] that `a` happens before `b`.
//
// Only one orientation is ever scored. compare() forwards the pair to the
// implementation with its texts in byte order and derives the other
// orientation as 1 - p, so compare(a, b) + compare(b, a) == 1 for every
// implementation. Identical texts compare as 0.5.
class OrderScorer {
 public:
  virtual ~OrderScorer() = default;

  double compare(const std::string& goal, const std::string& a, const std::string& b) const;
  std::vector<double> compare_batch(const std::string& goal, std::span<const StepPair> pairs) const;

 protected:
  // Called with first < second (byte order).
  virtual double precedes(const std::string& goal, const std::string& first, const std::string& second) const = 0;
  virtual std::vector<double> precedes_batch(const std::string& goal, std::span<const StepPair> pairs) const;
};

// Throws unless `score` is finite and within [0, 1].
double checked_score(double score, const char* what);

// Scores 1.0 for gold steps and 0.0 otherwise.
class OracleRelevance : public RelevanceScorer {
 public:
  explicit OracleRelevance(const std::vector<std::string>& gold);
  double relevance(const std::string& goal, const std::string& step) const override;

 private:
  std::unordered_map<std::string, bool> gold_;
};

// Orders by index in a reference list; texts missing from it sort last.
class OracleOrderer : public OrderScorer {
 public:
  explicit OracleOrderer(const std::vector<std::string>& gold_order);

 protected:
  double precedes(const std::string& goal, const std::string& first, const std::string& second) const override;

 private:
  std::size_t position(const std::string& s) const;
  std::unordered_map<std::string, std::size_t> position_;
};

// Uniform scores derived from a hash of (seed, inputs): the same input pair
// always receives the same score.
class RandomScorer : public RelevanceScorer, public OrderScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  double relevance(const std::string& goal, const std::string& step) const override;

 protected:
  double precedes(const std::string& goal, const std::string& first, const std::string& second) const override;

 private:
  std::uint64_t seed_;
};

// TF-IDF cosine between goal and step. Each training script (goal plus all
// steps) is one document. Weights are tf * idf with the smoothed
// idf(t) = ln((1 + N) / (1 + df(t))) + 1, so all weights are positive and
// the cosine already lies in [0, 1].
class LexicalScorer : public RelevanceScorer {
 public:
  // Uses the train split when the corpus has one, else every script.
  static LexicalScorer build(const Corpus& corpus);

  double relevance(const std::string& goal, const std::string& step) const override;
  std::vector<double> relevance_batch(const std::string& goal, std::span<const std::string> steps) const override;

  double idf(const std::string& token) const;
  std::size_t num_documents() const { return num_docs_; }
  std::size_t vocabulary_size() const { return df_.size(); }

 private:
  using Vector = std::unordered_map<std::string, double>;
  Vector weigh(const std::string& text) const;
  static double cosine(const Vector& a, double norm_a, const Vector& b);

  std::size_t num_docs_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

// Native stand-in for a learned orderer. Each token keeps its mean
// normalized position index / (len - 1) over the ordered training scripts
// (scripts of length 1 carry no position information and are skipped). A
// step's position is the mean over its tokens, unseen tokens counting 0.5,
// and p(a before b) = logistic(scale * (pos(b) - pos(a))).
class PositionOrderer : public OrderScorer {
 public:
  static PositionOrderer build(const Corpus& corpus, double scale = 1.0);

  // Mean normalized position of a token, or nullopt if never seen.
  std::optional<double> token_position(const std::string& token) const;
  double step_position(const std::string& step) const;

 protected:
  double precedes(const std::string& goal, const std::string& first, const std::string& second) const override;

 private:
  struct Accum {
    double sum = 0.0;
    std::size_t count = 0;
  };
  double scale_ = 1.0;
  std::unordered_map<std::string, Accum> positions_;
};

enum class ScorerKind { LexicalTfidf, PositionStats, Random, Remote, Oracle };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Random;
  std::optional<std::uint64_t> seed;
  std::string endpoint;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::string language = "en";
  double position_scale = 1.0;
};

const char* to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(const std::string& s);

// Validates as it parses; errors name the offending field.
ScorerConfig scorer_config_from_json(const nlohmann::json& j, const std::string& field);
nlohmann::json to_json(const ScorerConfig& config);

}  // namespace gosc
