// Acceptance checks for the core library. Prints one PASS/FAIL line per
// criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gosc/corpus.hpp"
#include "gosc/events.hpp"
#include "gosc/metrics.hpp"
#include "gosc/pipeline.hpp"
#include "gosc/random.hpp"
#include "gosc/scorers.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace gosc;
namespace fs = std::filesystem;
using Steps = std::vector<std::string>;

namespace {

const std::string kFixtures = GOSC_TEST_FIXTURES;

struct Failure {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// --- metric / oracle equivalence --------------------------------------------

long long g_compared = 0;

void compare_metrics(const Steps& s, const Steps& t, const Steps& ranking, std::size_t l) {
  auto fail = [&](const char* m) {
    std::string a;
    for (const auto& x : s) a += x + " ";
    return std::string(m) + " differs on S=[" + a + "]";
  };
  expect(metrics::accuracy(s, t, l) == oracle::accuracy(s, t).value(), fail("accuracy"));
  if (l >= 2) {
    expect(*metrics::script_tau(s, t, l) == oracle::tau(s, t, static_cast<long long>(l)).value(), fail("script_tau"));
  }
  for (std::size_t k = 1; k <= ranking.size(); ++k) {
    expect(metrics::recall_at_k(ranking, t, k).value == oracle::recall(ranking, t, k).value(), fail("recall_at_k"));
    const double a = metrics::ndcg_at_k(ranking, t, k, l).value;
    const double b = oracle::ndcg(ranking, t, k, l);
    expect(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)), fail("ndcg_at_k"));
  }
  ++g_compared;
}

void metric_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t l = 1; l <= 5; ++l) {
    Steps pool;
    for (std::size_t i = 0; i < l + 2; ++i) pool.push_back(std::string(1, static_cast<char>('a' + i)));
    const Steps gold(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(l));
    // Every ordered choice of l of the l+2 letters.
    std::vector<bool> mask(pool.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(l), true);
    do {
      Steps s;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (mask[i]) s.push_back(pool[i]);
      }
      do {
        compare_metrics(s, gold, s, l);
      } while (std::next_permutation(s.begin(), s.end()));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    if (l >= 2) {
      Steps perm = gold;
      do {
        expect(metrics::ordering_tau(perm, gold) == oracle::tau(perm, gold, static_cast<long long>(l)).value(),
               "ordering_tau differs");
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t l = 1 + rng.below(50);
    const std::size_t alphabet = l + rng.below(2 * l + 1);
    Steps gold;
    Steps pred;
    for (std::size_t i = 0; i < l; ++i) gold.push_back("w" + std::to_string(rng.below(alphabet)));
    for (std::size_t i = 0; i < l; ++i) pred.push_back("w" + std::to_string(rng.below(alphabet)));
    Steps ranking = pred;
    for (std::size_t i = rng.below(30); i > 0; --i) ranking.push_back("w" + std::to_string(rng.below(alphabet)));
    compare_metrics(pred, gold, ranking, l);
    if (l >= 2) {
      Steps perm = gold;
      rng.shuffle(std::span<std::string>(perm));
      expect(metrics::ordering_tau(perm, gold) == oracle::tau(perm, gold, static_cast<long long>(l)).value(),
             "ordering_tau differs");
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  expect(secs < 60.0, "took " + num(secs) + " s");
  std::printf("  %lld instances in %.2f s\n", g_compared, secs);
}

void ndcg_example() {
  const double v = metrics::ndcg_at_k({"hit1", "miss", "hit2"}, {"hit1", "hit2"}, 3, 2).value;
  std::printf("  ndcg = %.6f\n", v);
  expect(std::abs(v - 0.9197) <= 1e-4, "ndcg = " + num(v));
}

// --- pipeline -----------------------------------------------------------------

void oracle_pipeline() {
  double acc = 0.0;
  double tau = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const std::size_t l = 2 + rng.below(12);
    const TaskInstance t = synth::task(l + 20 + rng.below(200), l, 1000 + i);
    OracleRelevance rel(t.gold);
    OracleOrderer ord(t.gold);
    const auto s = construct(t, rel, ord);
    acc += metrics::accuracy(s.steps, t.gold, t.length);
    tau += *metrics::script_tau(s.steps, t.gold, t.length);
  }
  std::printf("  mean accuracy %.6f, mean tau %.6f\n", acc / 100, tau / 100);
  expect(acc / 100 == 1.0 && tau / 100 == 1.0, "accuracy " + num(acc / 100) + ", tau " + num(tau / 100));
}

void random_baseline() {
  RandomScorer random(2718);
  double acc = 0.0;
  double tau = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const TaskInstance t = synth::task(100, 10, static_cast<std::uint64_t>(i));
    const auto s = construct(t, random, random);
    acc += metrics::accuracy(s.steps, t.gold, t.length);
    tau += *metrics::script_tau(s.steps, t.gold, t.length);
  }
  acc /= trials;
  tau /= trials;
  std::printf("  mean accuracy %.4f (expected 0.10), mean tau %.4f\n", acc, tau);
  expect(std::abs(acc - 0.10) <= 0.01, "accuracy " + num(acc));
  expect(std::abs(tau) <= 0.02, "tau " + num(tau));
}

class CyclicOrderer : public OrderScorer {
 protected:
  double precedes(const std::string&, const std::string& a, const std::string& b) const override {
    // x beats y, y beats z, z beats x
    static const std::set<std::pair<std::string, std::string>> wins{{"x", "y"}, {"y", "z"}, {"z", "x"}};
    return wins.count({a, b}) ? 1.0 : 0.0;
  }
};

void ordering_aggregation() {
  std::size_t checked = 0;
  for (std::size_t n = 2; n <= 8; ++n) {
    Steps gold;
    for (std::size_t i = 0; i < n; ++i) gold.push_back("step " + std::to_string(i));
    OracleOrderer orderer(gold);
    Steps perm = gold;
    do {
      Steps out;
      for (std::size_t i : order_steps("g", perm, orderer)) out.push_back(perm[i]);
      expect(out == gold, "size " + std::to_string(n) + " permutation not recovered");
      ++checked;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  CyclicOrderer cyc;
  Steps cycle{"x", "y", "z"};
  do {
    for (int rep = 0; rep < 2; ++rep) {
      expect(order_steps("g", cycle, cyc) == std::vector<std::size_t>{0, 1, 2}, "3-cycle not in retrieval order");
    }
  } while (std::next_permutation(cycle.begin(), cycle.end()));
  std::printf("  %zu permutations recovered; 3-cycle keeps retrieval order\n", checked);
}

// --- corpus -------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void corpus_pipeline() {
  const Corpus c = load_corpus(kFixtures + "/restaurant.jsonl", "en");
  expect(c.size() == 1, "restaurant fixture: " + std::to_string(c.size()) + " scripts");
  const Script& s = c.scripts().front();
  expect(s.goal == "Eat at a Sit Down Restaurant", "goal \"" + s.goal + "\"");
  expect(s.category == "FOOD AND ENTERTAINING", "category \"" + s.category + "\"");
  expect(s.ordered, "not ordered");
  expect(s.language == "en", "language");
  expect(s.steps == Steps{"Order drinks first.", "Ask about daily specials.",
                          "Look over the menu and place your food order."},
         "steps");
  expect(s.sections.size() == 1 && s.sections[0].header == "Ordering Out", "sections");

  const fs::path dir = fs::temp_directory_path() / ("gosc-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  for (int run = 0; run < 2; ++run) {
    Corpus big = synth::corpus(200, 5, 3);
    split_corpus(big, 42);
    save_split_manifest((dir / ("split" + std::to_string(run) + ".jsonl")).string(), big);
  }
  const bool same = slurp(dir / "split0.jsonl") == slurp(dir / "split1.jsonl");
  fs::remove_all(dir);
  expect(same, "split manifests differ between runs");

  for (std::size_t n : {10u, 11u, 100u, 1234u}) {
    Corpus cn = synth::corpus(n, 4, n);
    split_corpus(cn, 7);
    std::size_t test = 0;
    for (const auto& [id, sp] : cn.split()) test += sp == Split::Test;
    const auto expected = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    expect(test == expected, "N=" + std::to_string(n) + ": " + std::to_string(test) + " test scripts");
    expect(cn.split().size() == n, "split not exhaustive");
    std::printf("  N=%zu -> %zu test\n", n, test);
  }
}

void training_emission() {
  Corpus c = synth::corpus(50, 3, 8);
  for (std::size_t i = 44; i < 50; ++i) c.mutable_scripts()[i].category = "RARE";
  split_corpus(c, 8);
  const auto pairs = emit_inference_training_data(c, 8);
  const auto& scripts = c.scripts();

  std::map<std::string, std::size_t> neg;
  std::map<std::string, std::size_t> pos;
  std::map<std::string, const Script*> by_goal;
  for (const auto& s : scripts) by_goal[s.goal] = &s;
  for (const auto& p : pairs) {
    const Script& s = *by_goal.at(p.goal);
    const bool own = std::find(s.steps.begin(), s.steps.end(), p.texts[0]) != s.steps.end();
    if (p.label == TrainingPair::Label::Positive) {
      ++pos[p.goal];
      expect(own, "positive outside the script");
    } else {
      ++neg[p.goal];
      expect(!own, "negative overlaps a positive of " + s.id);
    }
  }
  std::size_t capped = 0;
  std::size_t short_pool = 0;
  for (const auto& s : scripts) {
    if (c.split_of(s.id) != Split::Train) continue;
    std::size_t available = 0;
    std::unordered_set<std::string> own(s.steps.begin(), s.steps.end());
    for (const auto& o : scripts) {
      if (&o == &s || o.category != s.category || c.split_of(o.id) != Split::Train) continue;
      for (const auto& t : o.steps) available += own.count(t) ? 0 : 1;
    }
    const std::size_t want = std::min<std::size_t>(50, available);
    expect(neg[s.goal] == want, s.id + ": " + std::to_string(neg[s.goal]) + " negatives, expected " +
                                    std::to_string(want));
    expect(pos[s.goal] == s.steps.size(), s.id + ": positives");
    (want == 50 ? capped : short_pool) += 1;
  }

  const auto ordering = emit_ordering_training_data(c, 8);
  std::map<std::string, std::size_t> npairs;
  for (const auto& p : ordering) ++npairs[p.goal];
  for (const auto& s : scripts) {
    const std::size_t n = s.steps.size();
    const std::size_t expected = c.split_of(s.id) == Split::Train && s.ordered ? n * (n - 1) / 2 : 0;
    expect(npairs[s.goal] == expected, s.id + ": ordering pairs");
  }
  std::printf("  %zu scripts with 50 negatives, %zu with a smaller pool; %zu ordering pairs\n", capped, short_pool,
              ordering.size());
  expect(capped > 0 && short_pool > 0, "fixture does not exercise both negative regimes");
}

// Goals "<verb> <noun>"; gold steps mention the noun, distractors draw from
// a disjoint vocabulary.
void lexical_utility() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(31);
  auto word = [&](const char* prefix, std::size_t n) { return prefix + std::to_string(rng.below(n)); };

  std::vector<Script> train;
  for (int i = 0; i < 300; ++i) {
    const std::string noun = word("noun", 500);
    Steps steps;
    for (int k = 0; k < 6; ++k) steps.push_back(word("verb", 40) + " the " + noun + " " + word("adv", 30));
    train.push_back(synth::script("tr" + std::to_string(i), word("verb", 40) + " " + noun, steps));
  }
  const Corpus corpus("en", train);
  const auto lex = LexicalScorer::build(corpus);
  RandomScorer random(5);

  double lex_acc = 0.0;
  double rnd_acc = 0.0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const std::string noun = "noun" + std::to_string(i);
    TaskInstance t;
    t.goal = "assemble " + noun;
    t.ordered = true;
    t.language = "en";
    t.length = 8;
    for (int k = 0; k < 8; ++k) {
      t.gold.push_back(word("verb", 40) + " " + noun + " part " + std::to_string(k));
    }
    for (const auto& g : t.gold) t.candidates.push_back({g, "gold", "C"});
    for (int k = 0; k < 92; ++k) t.candidates.push_back({word("filler", 800) + " " + word("adv", 30), "d", "C"});
    rng.shuffle(std::span<CandidateStep>(t.candidates));
    lex_acc += metrics::accuracy(construct(t, lex, random).steps, t.gold, 8);
    rnd_acc += metrics::accuracy(construct(t, random, random).steps, t.gold, 8);
  }
  lex_acc /= trials;
  rnd_acc /= trials;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("  lexical accuracy %.4f, random %.4f (l/|C| = 0.08), %.2f s\n", lex_acc, rnd_acc, secs);
  expect(lex_acc >= 0.95, "lexical accuracy " + num(lex_acc));
  expect(std::abs(rnd_acc - 0.08) < 0.03, "random accuracy " + num(rnd_acc));
  expect(secs < 60.0, "took " + num(secs) + " s");
}

// --- events ---------------------------------------------------------------------

void template_instantiation() {
  const auto ontology = events::load_ontology(kFixtures + "/ontology.jsonl");
  const events::EventInstance e{"ArtifactExistence.DamageDestroy.Damage", "damaged",
                                {{"Damager", "a bomber"}, {"Artifact", "the building"}}, "doc"};
  const auto text = events::instantiate_template(e, ontology);
  std::printf("  \"%s\"\n", text.c_str());
  expect(text == "A bomber damaged the building using some instrument", "got \"" + text + "\"");

  std::vector<CandidateStep> pool;
  for (int i = 0; i < 300; ++i) pool.push_back({"event " + std::to_string(i), "d", "T"});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomScorer r(seed);
    std::size_t prev = SIZE_MAX;
    for (double theta : {0.5, 0.9, 0.95, 1.0}) {
      const auto n = events::construct_narrative("goal", pool, r, r, theta);
      expect(n.script.steps.size() <= prev, "size grew at theta " + num(theta));
      prev = n.script.steps.size();
    }
    expect(prev == 0, "theta 1.0 kept steps");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria{
      {"metric-oracle equivalence", metric_oracle_equivalence},
      {"ndcg worked example", ndcg_example},
      {"oracle pipeline", oracle_pipeline},
      {"random baseline analytics", random_baseline},
      {"ordering aggregation", ordering_aggregation},
      {"corpus pipeline", corpus_pipeline},
      {"training-data emission", training_emission},
      {"lexical scorer utility", lexical_utility},
      {"template instantiation and threshold monotonicity", template_instantiation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    std::string why;
    try {
      check();
    } catch (const Failure& f) {
      why = f.what;
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::printf("PASS %s\n", name);
    } else {
      std::printf("FAIL %s: %s\n", name, why.c_str());
      ++failed;
    }
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
