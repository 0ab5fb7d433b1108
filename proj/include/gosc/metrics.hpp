#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gosc/pipeline.hpp"
#include "gosc/task.hpp"

// Evaluation metrics for constructed scripts. Step matching is exact text
// equality on canonical (trimmed, NFC) text. When a text occurs several
// times, matches consume gold occurrences one for one, so a repeated
// prediction is credited at most as often as the gold contains it.
namespace gosc::metrics {

/// Fraction of the l predicted steps found in the gold script.
/// Throws when |predicted| != l or l == 0.
double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, std::size_t l);

// Ordered-list intersection: items of `a` that also occur in `b`, in the
// order of `a`.
std::vector<std::string> ordered_intersection(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct PairCounts {
  std::size_t concordant = 0;
  std::size_t discordant = 0;
  std::size_t overlap = 0;  // m, the size of the intersection
};

// Concordant / discordant pairs between S∩T and T∩S.
PairCounts overlap_pair_counts(const std::vector<std::string>& s, const std::vector<std::string>& t);

enum class TauDenominator {
  LengthPairs,   // C(l, 2), the canonical form
  OverlapPairs,  // C(m, 2) over the m overlapping steps
};

/// Kendall's tau between predicted and gold orders over their overlap:
/// (NC - ND) / C(l, 2) by default. nullopt when undefined: l < 2, or m < 2
/// with the overlap denominator. Throws when |predicted| != l.
std::optional<double> script_tau(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                                 std::size_t l, TauDenominator denominator = TauDenominator::LengthPairs);

struct AtK {
  double value = 0.0;
  bool truncated = false;  // fewer than k ranked items; value uses |R| instead
};

/// Gold hits among the first k ranked items, divided by k.
AtK recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold, std::size_t k);

/// DCG over the top k with binary relevance, divided by the ideal DCG of
/// min(l, k) relevant items at the top. Throws on empty gold or k == 0.
AtK ndcg_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold, std::size_t k,
              std::size_t l);

/// Tau between the model's arrangement of the gold steps and the gold
/// order. Throws unless `model_order` is a permutation of `gold`, |gold| >= 2.
double ordering_tau(const std::vector<std::string>& model_order, const std::vector<std::string>& gold);

/// exp(-log_likelihood / token_count). Throws when token_count == 0.
double perplexity_aggregate(double log_likelihood, long long token_count);

struct EditMetrics {
  double correctness = 0.0;
  std::optional<double> completeness;  // absent without a gold script
  std::optional<double> orderliness;   // absent when fewer than 2 steps overlap
};

/// Ratios from a human-edited version of a constructed script. The edited
/// steps must be a sub-multiset of the generated ones. `gold_length` is
/// omitted when no reference exists.
EditMetrics edit_metrics(const std::vector<std::string>& generated, const std::vector<std::string>& edited,
                         std::optional<std::size_t> gold_length);

struct ScriptRecord {
  std::string goal;
  std::optional<double> accuracy;
  std::optional<double> tau;
  std::optional<double> ordering_tau;
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> ndcg;
};

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<ScriptRecord> scripts;
  // Means over scripts where the metric is defined; keys: "accuracy", "tau",
  // "ordering_tau", "recall@k", "ndcg@k".
  std::map<std::string, double> aggregate;
  std::map<std::string, std::size_t> evaluated;
  std::map<std::string, std::size_t> skipped;
};

struct EvalOptions {
  std::vector<std::size_t> ks{25, 50};
  TauDenominator tau_denominator = TauDenominator::LengthPairs;
};

/// Scores aligned lists of tasks and constructed scripts. Tau is computed
/// for ordered tasks only; recall/NDCG when the script carries a ranking;
/// ordering tau when it carries a gold arrangement. Throws on empty input,
/// mismatched lengths or mismatched goals.
MetricReport evaluate_run(const std::vector<TaskInstance>& tasks, const std::vector<ConstructedScript>& scripts,
                          const EvalOptions& options = {});

nlohmann::json to_json(const MetricReport& report);
// Plain-text table: retrieval and ordering module columns, then
// construction accuracy and tau.
std::string format_table(const MetricReport& report);

}  // namespace gosc::metrics
