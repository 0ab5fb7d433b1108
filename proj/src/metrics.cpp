#include "gosc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "gosc/error.hpp"

namespace gosc::metrics {

using nlohmann::json;

namespace {

using Counts = std::unordered_map<std::string, std::size_t>;

Counts count(const std::vector<std::string>& xs) {
  Counts c;
  for (const auto& x : xs) ++c[x];
  return c;
}

// Consumes one occurrence of x from c if available.
bool take(Counts& c, const std::string& x) {
  auto it = c.find(x);
  if (it == c.end() || it->second == 0) return false;
  --it->second;
  return true;
}

double pairs_of(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - 1) / 2.0; }

}  // namespace

double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, std::size_t l) {
  if (l == 0) throw Error("accuracy: l must be at least 1");
  if (predicted.size() != l) {
    throw Error("accuracy: predicted script has " + std::to_string(predicted.size()) + " steps, expected l = " +
                std::to_string(l));
  }
  Counts available = count(gold);
  std::size_t hits = 0;
  for (const auto& s : predicted) hits += take(available, s) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(l);
}

std::vector<std::string> ordered_intersection(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  Counts available = count(b);
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (take(available, x)) out.push_back(x);
  }
  return out;
}

PairCounts overlap_pair_counts(const std::vector<std::string>& s, const std::vector<std::string>& t) {
  const auto s_cap_t = ordered_intersection(s, t);
  const auto t_cap_s = ordered_intersection(t, s);

  // The k-th occurrence of a text in one list pairs with its k-th
  // occurrence in the other.
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < t_cap_s.size(); ++i) positions[t_cap_s[i]].push_back(i);
  std::unordered_map<std::string, std::size_t> used;
  std::vector<std::size_t> rank;
  rank.reserve(s_cap_t.size());
  for (const auto& x : s_cap_t) rank.push_back(positions[x][used[x]++]);

  PairCounts pc;
  pc.overlap = rank.size();
  for (std::size_t i = 0; i < rank.size(); ++i) {
    for (std::size_t j = i + 1; j < rank.size(); ++j) {
      if (rank[i] < rank[j]) {
        ++pc.concordant;
      } else {
        ++pc.discordant;
      }
    }
  }
  return pc;
}

std::optional<double> script_tau(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                                 std::size_t l, TauDenominator denominator) {
  if (predicted.size() != l) {
    throw Error("script_tau: predicted script has " + std::to_string(predicted.size()) + " steps, expected l = " +
                std::to_string(l));
  }
  if (l < 2) return std::nullopt;
  const auto pc = overlap_pair_counts(predicted, gold);
  const double diff = static_cast<double>(pc.concordant) - static_cast<double>(pc.discordant);
  if (denominator == TauDenominator::LengthPairs) return diff / pairs_of(l);
  if (pc.overlap < 2) return std::nullopt;
  return diff / pairs_of(pc.overlap);
}

AtK recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold, std::size_t k) {
  if (k == 0) throw Error("recall_at_k: k must be at least 1");
  const std::size_t n = std::min(k, ranked.size());
  Counts available = count(gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += take(available, ranked[i]) ? 1 : 0;
  AtK r;
  r.truncated = ranked.size() < k;
  if (n > 0) r.value = static_cast<double>(hits) / static_cast<double>(r.truncated ? n : k);
  return r;
}

AtK ndcg_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold, std::size_t k,
              std::size_t l) {
  if (gold.empty()) throw Error("ndcg_at_k: gold script is empty");
  if (k == 0) throw Error("ndcg_at_k: k must be at least 1");
  if (l == 0) throw Error("ndcg_at_k: l must be at least 1");
  Counts available = count(gold);
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (take(available, ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(l, k); ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return {dcg / ideal, ranked.size() < k};
}

double ordering_tau(const std::vector<std::string>& model_order, const std::vector<std::string>& gold) {
  if (gold.size() < 2) throw Error("ordering_tau: needs at least 2 gold steps");
  if (model_order.size() != gold.size() || count(model_order) != count(gold)) {
    throw Error("ordering_tau: model order is not a permutation of the gold steps");
  }
  const auto pc = overlap_pair_counts(model_order, gold);
  return (static_cast<double>(pc.concordant) - static_cast<double>(pc.discordant)) / pairs_of(gold.size());
}

double perplexity_aggregate(double log_likelihood, long long token_count) {
  if (token_count <= 0) throw Error("perplexity: token count must be positive");
  return std::exp(-log_likelihood / static_cast<double>(token_count));
}

EditMetrics edit_metrics(const std::vector<std::string>& generated, const std::vector<std::string>& edited,
                         std::optional<std::size_t> gold_length) {
  if (generated.empty()) throw Error("edit_metrics: generated script is empty");
  Counts available = count(generated);
  for (const auto& e : edited) {
    if (!take(available, e)) throw Error("edit_metrics: edited step not in the generated script: " + e);
  }
  EditMetrics m;
  m.correctness = static_cast<double>(edited.size()) / static_cast<double>(generated.size());
  if (gold_length) {
    if (*gold_length == 0) throw Error("edit_metrics: gold script is empty");
    m.completeness = static_cast<double>(edited.size()) / static_cast<double>(*gold_length);
  }
  const auto pc = overlap_pair_counts(edited, generated);
  if (pc.overlap >= 2) {
    m.orderliness =
        (static_cast<double>(pc.concordant) - static_cast<double>(pc.discordant)) / pairs_of(pc.overlap);
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::string at_key(const char* name, std::size_t k) { return std::string(name) + "@" + std::to_string(k); }

}  // namespace

MetricReport evaluate_run(const std::vector<TaskInstance>& tasks, const std::vector<ConstructedScript>& scripts,
                          const EvalOptions& options) {
  if (tasks.empty()) throw Error("evaluate_run: no tasks to evaluate");
  if (tasks.size() != scripts.size()) {
    throw Error("evaluate_run: " + std::to_string(tasks.size()) + " tasks but " + std::to_string(scripts.size()) +
                " constructed scripts");
  }
  for (auto k : options.ks) {
    if (k == 0) throw Error("evaluate_run: k must be at least 1");
  }

  MetricReport report;
  report.ks = options.ks;
  std::map<std::string, double> sums;
  auto record = [&](const std::string& key, std::optional<double> v) {
    if (v) {
      sums[key] += *v;
      ++report.evaluated[key];
    } else {
      ++report.skipped[key];
    }
    return v;
  };

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskInstance& task = tasks[i];
    const ConstructedScript& s = scripts[i];
    if (task.goal != s.goal) {
      throw Error("evaluate_run: row " + std::to_string(i + 1) + " goal mismatch (\"" + task.goal + "\" vs \"" +
                  s.goal + "\")");
    }
    ScriptRecord rec;
    rec.goal = task.goal;
    const bool full_length = s.steps.size() == task.length;
    rec.accuracy = record("accuracy", full_length ? std::optional(accuracy(s.steps, task.gold, task.length))
                                                  : std::nullopt);
    if (task.ordered) {
      rec.tau = record("tau", full_length ? script_tau(s.steps, task.gold, task.length, options.tau_denominator)
                                          : std::nullopt);
      rec.ordering_tau =
          record("ordering_tau", s.gold_order && task.gold.size() >= 2
                                     ? std::optional(ordering_tau(*s.gold_order, task.gold))
                                     : std::nullopt);
    }
    for (auto k : options.ks) {
      if (s.ranking.empty()) {
        record(at_key("recall", k), std::nullopt);
        record(at_key("ndcg", k), std::nullopt);
        continue;
      }
      rec.recall[k] = *record(at_key("recall", k), recall_at_k(s.ranking, task.gold, k).value);
      rec.ndcg[k] = *record(at_key("ndcg", k), ndcg_at_k(s.ranking, task.gold, k, task.length).value);
    }
    report.scripts.push_back(std::move(rec));
  }

  for (const auto& [key, n] : report.evaluated) report.aggregate[key] = sums[key] / static_cast<double>(n);
  return report;
}

json to_json(const MetricReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : report.scripts) {
    json recall = json::object();
    json ndcg = json::object();
    for (const auto& [k, v] : r.recall) recall[std::to_string(k)] = v;
    for (const auto& [k, v] : r.ndcg) ndcg[std::to_string(k)] = v;
    rows.push_back({{"goal", r.goal},
                    {"accuracy", opt(r.accuracy)},
                    {"tau", opt(r.tau)},
                    {"ordering_tau", opt(r.ordering_tau)},
                    {"recall", recall},
                    {"ndcg", ndcg}});
  }
  return {{"ks", report.ks},
          {"num_scripts", report.scripts.size()},
          {"aggregate", report.aggregate},
          {"evaluated", report.evaluated},
          {"skipped", report.skipped},
          {"scripts", rows}};
}

std::string format_table(const MetricReport& report) {
  std::vector<std::pair<std::string, std::string>> cols;
  for (auto k : report.ks) cols.emplace_back("Recall@" + std::to_string(k), at_key("recall", k));
  for (auto k : report.ks) cols.emplace_back("NDCG@" + std::to_string(k), at_key("ndcg", k));
  cols.emplace_back("Ordering tau", "ordering_tau");
  cols.emplace_back("Accuracy", "accuracy");
  cols.emplace_back("Tau", "tau");

  std::ostringstream head;
  std::ostringstream body;
  for (const auto& [title, key] : cols) {
    const std::size_t width = std::max<std::size_t>(title.size(), 8) + 2;
    char buf[64];
    auto it = report.aggregate.find(key);
    if (it == report.aggregate.end()) {
      std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(width), "-");
    } else {
      std::snprintf(buf, sizeof buf, "%*.4f", static_cast<int>(width), it->second);
    }
    head << std::string(width - title.size(), ' ') << title;
    body << buf;
  }
  std::ostringstream out;
  out << head.str() << '\n' << body.str() << '\n';
  out << "scripts: " << report.scripts.size() << '\n';
  return out.str();
}

}  // namespace gosc::metrics
