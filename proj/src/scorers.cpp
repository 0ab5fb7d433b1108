#include "gosc/scorers.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "gosc/error.hpp"
#include "gosc/text.hpp"

namespace gosc {

using nlohmann::json;

double checked_score(double score, const char* what) {
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    throw Error(std::string(what) + " score outside [0, 1]: " + std::to_string(score));
  }
  return score;
}

std::vector<double> RelevanceScorer::relevance_batch(const std::string& goal, std::span<const std::string> steps) const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(relevance(goal, s));
  return out;
}

double OrderScorer::compare(const std::string& goal, const std::string& a, const std::string& b) const {
  if (a == b) return 0.5;
  if (a < b) return checked_score(precedes(goal, a, b), "order");
  return 1.0 - checked_score(precedes(goal, b, a), "order");
}

std::vector<double> OrderScorer::compare_batch(const std::string& goal, std::span<const StepPair> pairs) const {
  std::vector<StepPair> canonical;
  std::vector<std::size_t> slot(pairs.size(), SIZE_MAX);
  canonical.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    if (a == b) continue;
    slot[i] = canonical.size();
    canonical.emplace_back(a < b ? StepPair{a, b} : StepPair{b, a});
  }
  std::vector<double> raw = precedes_batch(goal, canonical);
  if (raw.size() != canonical.size()) throw Error("order batch returned the wrong number of scores");

  std::vector<double> out(pairs.size(), 0.5);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (slot[i] == SIZE_MAX) continue;
    double p = checked_score(raw[slot[i]], "order");
    out[i] = pairs[i].first < pairs[i].second ? p : 1.0 - p;
  }
  return out;
}

std::vector<double> OrderScorer::precedes_batch(const std::string& goal, std::span<const StepPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back(precedes(goal, a, b));
  return out;
}

// ---------------------------------------------------------------------------

OracleRelevance::OracleRelevance(const std::vector<std::string>& gold) {
  for (const auto& g : gold) gold_.emplace(g, true);
}

double OracleRelevance::relevance(const std::string&, const std::string& step) const {
  return gold_.count(step) ? 1.0 : 0.0;
}

OracleOrderer::OracleOrderer(const std::vector<std::string>& gold_order) {
  for (std::size_t i = 0; i < gold_order.size(); ++i) position_.emplace(gold_order[i], i);
}

std::size_t OracleOrderer::position(const std::string& s) const {
  auto it = position_.find(s);
  return it == position_.end() ? SIZE_MAX : it->second;
}

double OracleOrderer::precedes(const std::string&, const std::string& first, const std::string& second) const {
  const std::size_t a = position(first);
  const std::size_t b = position(second);
  if (a == b) return 0.5;
  return a < b ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kSep("\x1f", 1);

double unit_from_hash(std::uint64_t h) { return static_cast<double>(text::mix64(h) >> 11) * 0x1.0p-53; }

}  // namespace

double RandomScorer::relevance(const std::string& goal, const std::string& step) const {
  std::uint64_t h = text::mix64(seed_);
  h = text::fnv1a("relevance", h);
  h = text::fnv1a(kSep, text::fnv1a(goal, h));
  h = text::fnv1a(step, h);
  return unit_from_hash(h);
}

double RandomScorer::precedes(const std::string& goal, const std::string& first, const std::string& second) const {
  std::uint64_t h = text::mix64(seed_);
  h = text::fnv1a("order", h);
  h = text::fnv1a(kSep, text::fnv1a(goal, h));
  h = text::fnv1a(kSep, text::fnv1a(first, h));
  h = text::fnv1a(second, h);
  return unit_from_hash(h);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<const Script*> training_scripts(const Corpus& corpus) {
  std::vector<const Script*> out;
  for (const auto& s : corpus.scripts()) {
    if (!corpus.has_split() || corpus.split_of(s.id) == Split::Train) out.push_back(&s);
  }
  return out;
}

}  // namespace

LexicalScorer LexicalScorer::build(const Corpus& corpus) {
  LexicalScorer sc;
  for (const Script* s : training_scripts(corpus)) {
    std::set<std::string> terms;
    for (auto& t : text::tokenize(s->goal)) terms.insert(std::move(t));
    for (const auto& step : s->steps) {
      for (auto& t : text::tokenize(step)) terms.insert(std::move(t));
    }
    for (const auto& t : terms) ++sc.df_[t];
    ++sc.num_docs_;
  }
  if (sc.num_docs_ == 0) throw Error("lexical scorer: training corpus is empty");
  if (sc.df_.empty()) throw Error("lexical scorer: training corpus has an empty vocabulary");
  return sc;
}

double LexicalScorer::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(num_docs_)) / (1.0 + df)) + 1.0;
}

LexicalScorer::Vector LexicalScorer::weigh(const std::string& s) const {
  Vector v;
  for (const auto& t : text::tokenize(s)) v[t] += 1.0;
  for (auto& [t, w] : v) w *= idf(t);
  return v;
}

double LexicalScorer::cosine(const Vector& a, double norm_a, const Vector& b) {
  if (norm_a == 0.0) return 0.0;
  double dot = 0.0;
  double nb = 0.0;
  for (const auto& [t, w] : b) {
    nb += w * w;
    auto it = a.find(t);
    if (it != a.end()) dot += it->second * w;
  }
  if (nb == 0.0) return 0.0;
  double c = dot / (norm_a * std::sqrt(nb));
  return std::min(1.0, std::max(0.0, c));
}

double LexicalScorer::relevance(const std::string& goal, const std::string& step) const {
  const Vector g = weigh(goal);
  double ng = 0.0;
  for (const auto& [t, w] : g) ng += w * w;
  return cosine(g, std::sqrt(ng), weigh(step));
}

std::vector<double> LexicalScorer::relevance_batch(const std::string& goal, std::span<const std::string> steps) const {
  const Vector g = weigh(goal);
  double ng = 0.0;
  for (const auto& [t, w] : g) ng += w * w;
  ng = std::sqrt(ng);
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(cosine(g, ng, weigh(s)));
  return out;
}

// ---------------------------------------------------------------------------

PositionOrderer PositionOrderer::build(const Corpus& corpus, double scale) {
  PositionOrderer po;
  po.scale_ = scale;
  std::size_t used = 0;
  for (const Script* s : training_scripts(corpus)) {
    if (!s->ordered || s->steps.size() < 2) continue;
    ++used;
    const double denom = static_cast<double>(s->steps.size() - 1);
    for (std::size_t i = 0; i < s->steps.size(); ++i) {
      const double pos = static_cast<double>(i) / denom;
      for (const auto& t : text::tokenize(s->steps[i])) {
        auto& acc = po.positions_[t];
        acc.sum += pos;
        ++acc.count;
      }
    }
  }
  if (used == 0) throw Error("position orderer: training corpus has no ordered scripts with two or more steps");
  return po;
}

std::optional<double> PositionOrderer::token_position(const std::string& token) const {
  auto it = positions_.find(token);
  if (it == positions_.end()) return std::nullopt;
  return it->second.sum / static_cast<double>(it->second.count);
}

double PositionOrderer::step_position(const std::string& step) const {
  const auto tokens = text::tokenize(step);
  if (tokens.empty()) return 0.5;
  double sum = 0.0;
  for (const auto& t : tokens) sum += token_position(t).value_or(0.5);
  return sum / static_cast<double>(tokens.size());
}

double PositionOrderer::precedes(const std::string&, const std::string& first, const std::string& second) const {
  const double x = scale_ * (step_position(second) - step_position(first));
  return 1.0 / (1.0 + std::exp(-x));
}

// ---------------------------------------------------------------------------

const char* to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::LexicalTfidf: return "lexical-tfidf";
    case ScorerKind::PositionStats: return "position-stats";
    case ScorerKind::Random: return "random";
    case ScorerKind::Remote: return "remote";
    case ScorerKind::Oracle: return "oracle";
  }
  return "?";
}

ScorerKind scorer_kind_from_string(const std::string& s) {
  for (auto k : {ScorerKind::LexicalTfidf, ScorerKind::PositionStats, ScorerKind::Random, ScorerKind::Remote,
                 ScorerKind::Oracle}) {
    if (s == to_string(k)) return k;
  }
  throw ParseError("kind", "unknown scorer kind \"" + s + "\"");
}

ScorerConfig scorer_config_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) throw ParseError(field, "expected an object");
  ScorerConfig c;
  try {
    if (!j.contains("kind")) throw ParseError(field + ".kind", "missing");
    try {
      c.kind = scorer_kind_from_string(j.at("kind").get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(field + ".kind", e.what());
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.endpoint = j.value("endpoint", std::string());
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.language = j.value("language", c.language);
    c.position_scale = j.value("scale", c.position_scale);
  } catch (const json::exception& e) {
    throw ParseError(field, e.what());
  }
  if (c.kind == ScorerKind::Random && !c.seed) throw ParseError(field + ".seed", "required for a random scorer");
  if (c.kind == ScorerKind::Remote && c.endpoint.empty()) {
    throw ParseError(field + ".endpoint", "required for a remote scorer");
  }
  if (c.batch_size == 0) throw ParseError(field + ".batch_size", "must be positive");
  if (c.max_in_flight == 0) throw ParseError(field + ".max_in_flight", "must be positive");
  return c;
}

json to_json(const ScorerConfig& c) {
  json j = {{"kind", to_string(c.kind)}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.kind == ScorerKind::Remote) {
    j["endpoint"] = c.endpoint;
    j["batch_size"] = c.batch_size;
    j["max_in_flight"] = c.max_in_flight;
    j["language"] = c.language;
  }
  if (c.kind == ScorerKind::PositionStats) j["scale"] = c.position_scale;
  return j;
}

}  // namespace gosc
