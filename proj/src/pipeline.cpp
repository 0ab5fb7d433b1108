#include "gosc/pipeline.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <numeric>
#include <unordered_set>

#include "gosc/error.hpp"
#include "gosc/jsonl.hpp"
#include "gosc/random.hpp"
#include "gosc/text.hpp"

namespace gosc {

using nlohmann::json;

namespace {

// Splits [0, n) into at most `jobs` contiguous ranges and runs fn on each.
// Results land in place, so output order never depends on scheduling.
template <typename Fn>
void for_chunks(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  jobs = std::min(jobs, n);
  const std::size_t per = (n + jobs - 1) / jobs;
  std::vector<std::future<void>> running;
  for (std::size_t b = 0; b < n; b += per) {
    running.push_back(std::async(std::launch::async, [&fn, b, e = std::min(n, b + per)] { fn(b, e); }));
  }
  for (auto& f : running) f.get();
}

std::vector<double> score_all(const RelevanceScorer& scorer, const std::string& goal,
                              const std::vector<std::string>& texts, std::size_t jobs) {
  std::vector<double> scores(texts.size());
  for_chunks(texts.size(), jobs, [&](std::size_t b, std::size_t e) {
    auto part = scorer.relevance_batch(goal, std::span<const std::string>(texts.data() + b, e - b));
    if (part.size() != e - b) throw Error("relevance batch returned the wrong number of scores");
    for (std::size_t i = b; i < e; ++i) scores[i] = checked_score(part[i - b], "relevance");
  });
  return scores;
}

void sort_ranked(std::vector<RankedCandidate>& ranked) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
}

}  // namespace

std::vector<RankedCandidate> retrieve_steps(const TaskInstance& task, const RelevanceScorer& scorer,
                                            const RetrieveOptions& options) {
  std::vector<std::size_t> keep(task.candidates.size());
  std::iota(keep.begin(), keep.end(), 0);

  if (options.prefilter && task.candidates.size() > options.prefilter_k) {
    std::vector<std::string> texts;
    texts.reserve(task.candidates.size());
    for (const auto& c : task.candidates) texts.push_back(c.text);
    const auto lexical = score_all(*options.prefilter, task.goal, texts, options.jobs);
    std::vector<RankedCandidate> pre;
    pre.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) pre.push_back({i, {}, lexical[i]});
    sort_ranked(pre);
    pre.resize(options.prefilter_k);
    keep.clear();
    for (const auto& p : pre) keep.push_back(p.index);
    std::sort(keep.begin(), keep.end());
  }

  std::vector<std::string> texts;
  texts.reserve(keep.size());
  for (std::size_t i : keep) texts.push_back(task.candidates[i].text);
  const auto scores = score_all(scorer, task.goal, texts, options.jobs);

  std::vector<RankedCandidate> ranked;
  ranked.reserve(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) ranked.push_back({keep[k], std::move(texts[k]), scores[k]});
  sort_ranked(ranked);
  return ranked;
}

std::vector<RankedCandidate> take_top_l(const std::vector<RankedCandidate>& ranked, std::size_t l) {
  if (l == 0) throw Error("take_top_l: l must be at least 1");
  if (ranked.size() < l) {
    throw Error("take_top_l: candidate pool of " + std::to_string(ranked.size()) + " is smaller than l = " +
                std::to_string(l));
  }
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(l)};
}

std::vector<RankedCandidate> take_above_threshold(const std::vector<RankedCandidate>& ranked, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("threshold must lie in [0, 1]");
  std::vector<RankedCandidate> out;
  for (const auto& r : ranked) {
    if (r.score > threshold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> order_steps(const std::string& goal, const std::vector<std::string>& steps,
                                     const OrderScorer& orderer, std::size_t jobs) {
  const std::size_t m = steps.size();
  if (m == 0) throw Error("order_steps: no steps to order");

  std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
  std::vector<StepPair> pairs;
  index_pairs.reserve(m * (m - 1) / 2);
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      index_pairs.emplace_back(i, j);
      pairs.emplace_back(steps[i], steps[j]);
    }
  }

  std::vector<double> verdicts(pairs.size());
  for_chunks(pairs.size(), jobs, [&](std::size_t b, std::size_t e) {
    auto part = orderer.compare_batch(goal, std::span<const StepPair>(pairs.data() + b, e - b));
    std::copy(part.begin(), part.end(), verdicts.begin() + static_cast<std::ptrdiff_t>(b));
  });

  // Wins are counted in halves so that exact ties stay integral.
  std::vector<std::size_t> half_wins(m, 0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = index_pairs[p];
    const double v = verdicts[p];
    if (v > 0.5) {
      half_wins[i] += 2;
    } else if (v < 0.5) {
      half_wins[j] += 2;
    } else {
      ++half_wins[i];
      ++half_wins[j];
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return half_wins[a] > half_wins[b]; });
  return order;
}

ConstructedScript construct(const TaskInstance& task, const RelevanceScorer& relevance, const OrderScorer& orderer,
                            const ConstructOptions& options) {
  const auto ranked = retrieve_steps(task, relevance, options.retrieve);
  const auto kept = options.mode == RetentionMode::TopL ? take_top_l(ranked, task.length)
                                                        : take_above_threshold(ranked, options.threshold);

  ConstructedScript out;
  out.goal = task.goal;
  out.mode = options.mode;

  std::vector<std::string> texts;
  texts.reserve(kept.size());
  for (const auto& k : kept) texts.push_back(k.text);

  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  if (task.ordered && !kept.empty()) order = order_steps(task.goal, texts, orderer, options.retrieve.jobs);

  for (std::size_t i : order) {
    out.steps.push_back(kept[i].text);
    out.confidences.push_back(kept[i].score);
  }

  for (std::size_t i = 0; i < std::min(options.ranking_depth, ranked.size()); ++i) {
    out.ranking.push_back(ranked[i].text);
  }

  if (options.order_gold && task.ordered && !task.gold.empty()) {
    std::vector<std::string> shuffled = task.gold;
    Rng rng(text::mix64(options.seed) ^ text::fnv1a(task.goal));
    rng.shuffle(std::span<std::string>(shuffled));
    std::vector<std::string> arranged;
    for (std::size_t i : order_steps(task.goal, shuffled, orderer, options.retrieve.jobs)) {
      arranged.push_back(shuffled[i]);
    }
    out.gold_order = std::move(arranged);
  }
  return out;
}

const char* to_string(RetentionMode mode) { return mode == RetentionMode::TopL ? "top-l" : "threshold"; }

RetentionMode retention_mode_from_string(const std::string& s) {
  if (s == "top-l") return RetentionMode::TopL;
  if (s == "threshold") return RetentionMode::Threshold;
  throw ParseError("mode", "expected \"top-l\" or \"threshold\", got \"" + s + "\"");
}

json to_json(const ConstructedScript& script) {
  json steps = json::array();
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    steps.push_back({{"text", script.steps[i]}, {"confidence", script.confidences[i]}});
  }
  json j = {{"goal", script.goal}, {"mode", to_string(script.mode)}, {"steps", steps}};
  if (!script.ranking.empty()) j["ranking"] = script.ranking;
  if (script.gold_order) j["gold_order"] = *script.gold_order;
  return j;
}

ConstructedScript constructed_from_json(const json& j) {
  ConstructedScript s;
  try {
    s.goal = j.at("goal").get<std::string>();
    s.mode = retention_mode_from_string(j.at("mode").get<std::string>());
    for (const auto& st : j.at("steps")) {
      s.steps.push_back(st.at("text").get<std::string>());
      s.confidences.push_back(st.at("confidence").get<double>());
    }
    if (j.contains("ranking")) s.ranking = j["ranking"].get<std::vector<std::string>>();
    if (j.contains("gold_order")) s.gold_order = j["gold_order"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("constructed script", e.what());
  }
  return s;
}

std::vector<ConstructedScript> load_constructed(const std::string& path) {
  std::vector<ConstructedScript> out;
  for (const auto& line : jsonl::read_file(path)) {
    try {
      out.push_back(constructed_from_json(line.value));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line.number), e.what());
    }
  }
  return out;
}

void save_constructed(const std::string& path, const std::vector<ConstructedScript>& scripts) {
  std::vector<json> lines;
  lines.reserve(scripts.size());
  for (const auto& s : scripts) lines.push_back(to_json(s));
  jsonl::write_file(path, lines);
}

// ---------------------------------------------------------------------------

const char* to_string(TrainingPair::Label label) {
  switch (label) {
    case TrainingPair::Label::Positive: return "positive";
    case TrainingPair::Label::Negative: return "negative";
    case TrainingPair::Label::AFirst: return "a-first";
    case TrainingPair::Label::BFirst: return "b-first";
  }
  return "?";
}

json to_json(const TrainingPair& pair) {
  if (pair.texts.size() == 1) {
    return {{"goal", pair.goal}, {"step", pair.texts[0]}, {"label", to_string(pair.label)}};
  }
  return {{"goal", pair.goal},
          {"step_a", pair.texts.at(0)},
          {"step_b", pair.texts.at(1)},
          {"label", to_string(pair.label)}};
}

namespace {

std::vector<std::size_t> train_indices(const Corpus& corpus) {
  if (!corpus.has_split()) throw Error("corpus has no split; run split first");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.split_of(corpus.scripts()[i].id) == Split::Train) out.push_back(i);
  }
  return out;
}

struct StepRef {
  std::size_t script;
  std::size_t step;
};

}  // namespace

std::vector<TrainingPair> emit_inference_training_data(const Corpus& corpus, std::uint64_t seed, Warnings* warnings,
                                                       std::size_t negatives) {
  const auto train = train_indices(corpus);
  const auto& scripts = corpus.scripts();
  std::map<std::string, std::vector<StepRef>> by_category;
  for (std::size_t i : train) {
    for (std::size_t k = 0; k < scripts[i].steps.size(); ++k) by_category[scripts[i].category].push_back({i, k});
  }

  Rng rng(seed);
  std::vector<TrainingPair> out;
  for (std::size_t i : train) {
    const Script& s = scripts[i];
    for (const auto& step : s.steps) out.push_back({s.goal, {step}, TrainingPair::Label::Positive});

    const std::unordered_set<std::string> own(s.steps.begin(), s.steps.end());
    const auto& pool = by_category[s.category];
    auto eligible = [&](const StepRef& r) { return r.script != i && !own.count(scripts[r.script].steps[r.step]); };

    std::vector<std::size_t> picked;
    // Large pools: rejection sampling. Falls back to enumeration when the
    // pool turns out to be mostly ineligible.
    if (pool.size() > 4 * negatives) {
      std::unordered_set<std::size_t> chosen;
      for (std::size_t attempts = 0; picked.size() < negatives && attempts < 64 * negatives; ++attempts) {
        const std::size_t r = rng.below(pool.size());
        if (eligible(pool[r]) && chosen.insert(r).second) picked.push_back(r);
      }
      if (picked.size() < negatives) picked.clear();
    }
    if (picked.empty()) {
      std::vector<std::size_t> all;
      for (std::size_t r = 0; r < pool.size(); ++r) {
        if (eligible(pool[r])) all.push_back(r);
      }
      const std::size_t take = std::min(negatives, all.size());
      for (std::size_t k = 0; k < take; ++k) std::swap(all[k], all[k + rng.below(all.size() - k)]);
      all.resize(take);
      picked = std::move(all);
      if (take < negatives && warnings) {
        warnings->push_back("script " + s.id + ": only " + std::to_string(take) + " negatives available");
      }
    }
    for (std::size_t r : picked) {
      out.push_back({s.goal, {scripts[pool[r].script].steps[pool[r].step]}, TrainingPair::Label::Negative});
    }
  }
  return out;
}

std::vector<TrainingPair> emit_ordering_training_data(const Corpus& corpus, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingPair> out;
  for (std::size_t i : train_indices(corpus)) {
    const Script& s = corpus.scripts()[i];
    if (!s.ordered) continue;
    for (std::size_t a = 0; a < s.steps.size(); ++a) {
      for (std::size_t b = a + 1; b < s.steps.size(); ++b) {
        if (rng.next() & 1) {
          out.push_back({s.goal, {s.steps[b], s.steps[a]}, TrainingPair::Label::BFirst});
        } else {
          out.push_back({s.goal, {s.steps[a], s.steps[b]}, TrainingPair::Label::AFirst});
        }
      }
    }
  }
  return out;
}

}  // namespace gosc
