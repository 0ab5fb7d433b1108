#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gosc/corpus.hpp"
#include "gosc/scorers.hpp"
#include "gosc/task.hpp"

namespace gosc {

struct RankedCandidate {
  std::size_t index = 0;  // position in the task's candidate list
  std::string text;
  double score = 0.0;
};

enum class RetentionMode { TopL, Threshold };

inline constexpr double kDefaultThreshold = 0.95;
inline constexpr std::size_t kDefaultPrefilterK = 200;

struct ConstructedScript {
  std::string goal;
  RetentionMode mode = RetentionMode::TopL;
  std::vector<std::string> steps;
  std::vector<double> confidences;  // parallel to steps
  // Optional extras used for module-level evaluation: the head of the
  // relevance ranking, and the orderer's arrangement of the gold steps.
  std::vector<std::string> ranking;
  std::optional<std::vector<std::string>> gold_order;

  bool operator==(const ConstructedScript&) const = default;
};

struct RetrieveOptions {
  // Optional lexical pre-filter: only its top `prefilter_k` candidates are
  // sent to the relevance scorer. Off when null.
  const RelevanceScorer* prefilter = nullptr;
  std::size_t prefilter_k = kDefaultPrefilterK;
  std::size_t jobs = 1;
};

struct ConstructOptions {
  RetentionMode mode = RetentionMode::TopL;
  double threshold = kDefaultThreshold;
  RetrieveOptions retrieve;
  // Keep this many ranked texts in ConstructedScript::ranking (0 = none).
  std::size_t ranking_depth = 0;
  // Also order a seeded shuffle of the gold steps (ordered tasks only) so
  // the ordering module can be scored on its own.
  bool order_gold = false;
  std::uint64_t seed = 0;
};

/// Scores every candidate and sorts by score descending; ties keep the
/// original candidate order.
std::vector<RankedCandidate> retrieve_steps(const TaskInstance& task, const RelevanceScorer& scorer,
                                            const RetrieveOptions& options = {});

/// First l items. Throws when l == 0 or the ranking is shorter than l.
std::vector<RankedCandidate> take_top_l(const std::vector<RankedCandidate>& ranked, std::size_t l);

/// Every item scoring strictly above `threshold`, in rank order.
std::vector<RankedCandidate> take_above_threshold(const std::vector<RankedCandidate>& ranked,
                                                  double threshold = kDefaultThreshold);

/// Win-count ordering. `steps` must be in retrieval-rank order. Each
/// unordered pair is compared once; the predicted-first step gains a win
/// (half a win each on an exact 0.5). Returns the indices into `steps`
/// sorted by wins descending, ties by retrieval rank.
std::vector<std::size_t> order_steps(const std::string& goal, const std::vector<std::string>& steps,
                                     const OrderScorer& orderer, std::size_t jobs = 1);

/// Retrieve, retain (top-l or threshold), then order when the task is
/// ordered. Unordered tasks keep retrieval order.
ConstructedScript construct(const TaskInstance& task, const RelevanceScorer& relevance, const OrderScorer& orderer,
                            const ConstructOptions& options = {});

const char* to_string(RetentionMode mode);
RetentionMode retention_mode_from_string(const std::string& s);

nlohmann::json to_json(const ConstructedScript& script);
ConstructedScript constructed_from_json(const nlohmann::json& j);
std::vector<ConstructedScript> load_constructed(const std::string& path);
void save_constructed(const std::string& path, const std::vector<ConstructedScript>& scripts);

struct TrainingPair {
  enum class Label { Positive, Negative, AFirst, BFirst };
  std::string goal;
  std::vector<std::string> texts;  // 1 (inference) or 2 (ordering)
  Label label = Label::Positive;
};

const char* to_string(TrainingPair::Label label);
nlohmann::json to_json(const TrainingPair& pair);

inline constexpr std::size_t kNegativesPerScript = 50;

/// Per train-split script: one positive per step, then up to 50 negatives
/// drawn without replacement from steps of other train scripts in the same
/// category whose text is not one of the script's own steps.
std::vector<TrainingPair> emit_inference_training_data(const Corpus& corpus, std::uint64_t seed,
                                                       Warnings* warnings = nullptr,
                                                       std::size_t negatives = kNegativesPerScript);

/// Every pair of steps of every ordered train-split script, each once, in a
/// seeded-random orientation.
std::vector<TrainingPair> emit_ordering_training_data(const Corpus& corpus, std::uint64_t seed);

}  // namespace gosc
