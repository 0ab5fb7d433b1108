#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "gosc/corpus.hpp"
#include "gosc/random.hpp"
#include "synthetic.hpp"

using namespace gosc;
using nlohmann::json;

namespace {

json restaurant_record() {
  return json::parse(R"({
    "title": "Eat at a Sit Down Restaurant",
    "category": "FOOD AND ENTERTAINING",
    "ordered": true,
    "sections": [{"section": "Ordering Out",
                  "steps": ["Order drinks first.", "Ask about daily specials.",
                            "Look over the menu and place your food order."]}]})");
}

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "gosc_test_corpus";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("restaurant record parses to the expected script") {
  Script s = parse_article(restaurant_record());
  CHECK(s.goal == "Eat at a Sit Down Restaurant");
  CHECK(s.category == "FOOD AND ENTERTAINING");
  CHECK(s.ordered);
  REQUIRE(s.steps.size() == 3);
  CHECK(s.steps[0] == "Order drinks first.");
  CHECK(s.sections.size() == 1);
  CHECK(s.sections[0].header == "Ordering Out");
  CHECK(s.id == derive_script_id("en", "Eat at a Sit Down Restaurant"));
}

TEST_CASE("parse_article strips the how-to prefix and flattens sections in order") {
  json r = {{"title", "How to Draw Santa Claus"},
            {"category", "ARTS"},
            {"ordered", false},
            {"sections", json::array({{{"section", "A"}, {"steps", {"a1", "a2"}}},
                                      {{"section", "B"}, {"steps", {"b1", " b2 ", "b3"}}}})}};
  Script s = parse_article(r);
  CHECK(s.goal == "Draw Santa Claus");
  CHECK(s.steps == std::vector<std::string>{"a1", "a2", "b1", "b2", "b3"});
  CHECK(s.sections[0].steps.size() + s.sections[1].steps.size() == s.steps.size());
}

TEST_CASE("parse_article keeps duplicate steps and drops steps equal to the goal") {
  json r = {{"title", "Wash"}, {"sections", json::array({{{"section", ""}, {"steps", {"Rinse", "Wash", "Rinse"}}}})}};
  Script s = parse_article(r);
  CHECK(s.steps == std::vector<std::string>{"Rinse", "Rinse"});
  CHECK_FALSE(s.ordered);
  CHECK(s.category.empty());
}

TEST_CASE("parse_article accepts the Python-style ordered literal") {
  json r = restaurant_record();
  r["ordered"] = "True";
  CHECK(parse_article(r).ordered);
  r["ordered"] = 3;
  CHECK_THROWS_AS(parse_article(r), ParseError);
}

TEST_CASE("malformed records name the field") {
  json no_title = restaurant_record();
  no_title.erase("title");
  try {
    parse_article(no_title);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.field() == "title");
  }

  json no_steps = restaurant_record();
  no_steps["sections"] = json::array({{{"section", "x"}, {"steps", json::array()}}});
  try {
    parse_article(no_steps);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.field() == "sections");
  }

  json bad_sections = restaurant_record();
  bad_sections["sections"] = "nope";
  CHECK_THROWS_AS(parse_article(bad_sections), ParseError);
}

TEST_CASE("parse is idempotent on its serialized output") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    json r = {{"title", (trial % 2 ? "How to " : "") + std::string("Goal ") + std::to_string(trial)},
              {"category", "C" + std::to_string(trial % 3)},
              {"ordered", trial % 3 == 0}};
    json sections = json::array();
    const auto nsec = 1 + rng.below(3);
    for (std::size_t i = 0; i < nsec; ++i) {
      json steps = json::array();
      for (std::size_t k = 0; k < 1 + rng.below(4); ++k) steps.push_back("  step " + std::to_string(rng.below(6)) + " ");
      sections.push_back({{"section", "S" + std::to_string(i)}, {"steps", steps}});
    }
    r["sections"] = sections;
    Script once = parse_article(r);
    Script twice = parse_article(to_json(once));
    CHECK(once == twice);
    std::size_t total = 0;
    for (const auto& s : once.sections) total += s.steps.size();
    CHECK(total == once.steps.size());
  }
}

TEST_CASE("label projection copies linked English labels and defaults to unordered") {
  std::map<std::string, Corpus> corpora;
  corpora.emplace("en", Corpus("en", {synth::script("en1", "A", {"x"}, "C", true),
                                      synth::script("en2", "B", {"y"}, "C", false)}));
  corpora.emplace("es", Corpus("es", {synth::script("es1", "A", {"x"}, "C", false),
                                      synth::script("es2", "B", {"y"}, "C", true),
                                      synth::script("es3", "C", {"z"}, "C", true)}));
  corpora.emplace("zh", Corpus("zh", {synth::script("zh1", "A", {"x"}, "C", true)}));
  const std::vector<CrossLanguageLink> links{{"es1", "en1"}, {"es2", "en2"}, {"es3", "missing"}};

  Warnings w = project_ordered_labels(corpora, links);
  CHECK(corpora.at("es").scripts()[0].ordered);
  CHECK_FALSE(corpora.at("es").scripts()[1].ordered);
  CHECK_FALSE(corpora.at("es").scripts()[2].ordered);
  CHECK_FALSE(corpora.at("zh").scripts()[0].ordered);
  CHECK(corpora.at("en").scripts()[0].ordered);
  CHECK_FALSE(corpora.at("en").scripts()[1].ordered);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("missing") != std::string::npos);
}

TEST_CASE("link files reject a source linked to two English ids") {
  auto path = temp_path("links.jsonl");
  {
    std::ofstream out(path);
    out << R"({"source_id": "a", "english_id": "x"})" << '\n' << R"({"source_id": "a", "english_id": "y"})" << '\n';
  }
  CHECK_THROWS_AS(load_links(path), ParseError);
}

TEST_CASE("split holds out round(N/10) scripts deterministically") {
  for (std::size_t n : {10u, 11u, 15u, 100u, 1234u}) {
    Corpus a = synth::corpus(n);
    Corpus b = synth::corpus(n);
    split_corpus(a, 7);
    split_corpus(b, 7);
    CHECK(a.split() == b.split());
    std::size_t test = 0;
    for (const auto& [id, s] : a.split()) test += s == Split::Test;
    CHECK(test == (n + 5) / 10);
    CHECK(a.split().size() == n);
  }
  Corpus c = synth::corpus(100);
  split_corpus(c, 8);
  Corpus d = synth::corpus(100);
  split_corpus(d, 7);
  CHECK(c.split() != d.split());
}

TEST_CASE("split partitions the id set for any seed") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Corpus c = synth::corpus(37, 3, seed);
    split_corpus(c, seed);
    std::set<std::string> ids;
    for (const auto& s : c.scripts()) ids.insert(s.id);
    std::set<std::string> covered;
    for (const auto& [id, s] : c.split()) covered.insert(id);
    CHECK(ids == covered);
  }
}

TEST_CASE("split rejects corpora under 10 scripts") {
  Corpus c = synth::corpus(5);
  CHECK_THROWS_AS(split_corpus(c, 1), Error);
}

TEST_CASE("split manifest round-trips") {
  Corpus c = synth::corpus(30);
  split_corpus(c, 3);
  auto path = temp_path("split.jsonl");
  save_split_manifest(path, c);
  Corpus d = synth::corpus(30);
  load_split_manifest(path, d);
  CHECK(d.split() == c.split());
}

TEST_CASE("corpus stats") {
  Script s = synth::script("a", "g", {"1", "2", "3", "4"});
  s.sections = {{"x", {"1", "2"}}, {"y", {"3", "4"}}};
  auto st = corpus_stats(Corpus("en", {s}));
  CHECK(st.num_scripts == 1);
  CHECK(st.num_ordered == 1);
  CHECK(st.avg_steps == 4.0);
  CHECK(st.avg_sections == 2.0);
  CHECK_FALSE(st.empty);

  auto empty = corpus_stats(Corpus());
  CHECK(empty.empty);
  CHECK(empty.num_scripts == 0);
  CHECK(empty.avg_steps == 0.0);
}

TEST_CASE("duplicate ids are rejected") {
  CHECK_THROWS_AS(Corpus("en", {synth::script("a", "g", {"x"}), synth::script("a", "h", {"y"})}), Error);
}

TEST_CASE("load_corpus reports malformed lines with their numbers") {
  auto path = temp_path("mixed.jsonl");
  {
    std::ofstream out(path);
    out << restaurant_record().dump() << '\n';
    out << "{not json\n";
    out << R"({"category": "X", "sections": []})" << '\n';
  }
  std::vector<std::string> errors;
  Corpus c = load_corpus(path, "en", &errors);
  CHECK(c.size() == 1);
  REQUIRE(errors.size() == 2);
  CHECK(errors[0].rfind("line 2", 0) == 0);
  CHECK(errors[1].rfind("line 3", 0) == 0);
  CHECK(errors[1].find("title") != std::string::npos);
  CHECK_THROWS_AS(load_corpus(path, "en"), ParseError);
}

TEST_CASE("whole-file array form is accepted") {
  auto path = temp_path("array.json");
  {
    std::ofstream out(path);
    out << json::array({restaurant_record()}).dump(2);
  }
  CHECK(load_corpus(path, "en").size() == 1);
}
