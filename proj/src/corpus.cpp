#include "gosc/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "gosc/jsonl.hpp"
#include "gosc/random.hpp"
#include "gosc/text.hpp"

namespace gosc {

using nlohmann::json;

const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ParseError("split", "expected \"train\" or \"test\", got \"" + s + "\"");
}

Corpus::Corpus(std::string language, std::vector<Script> scripts)
    : language_(std::move(language)), scripts_(std::move(scripts)) {
  for (std::size_t i = 0; i < scripts_.size(); ++i) {
    auto [it, inserted] = index_.emplace(scripts_[i].id, i);
    if (!inserted) throw Error("duplicate script id " + scripts_[i].id);
  }
}

std::optional<std::size_t> Corpus::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Split Corpus::split_of(const std::string& id) const {
  if (split_.empty()) throw Error("corpus has no split assigned");
  auto it = split_.find(id);
  if (it == split_.end()) throw Error("script " + id + " missing from split");
  return it->second;
}

void Corpus::set_split(std::map<std::string, Split> split) {
  for (const auto& s : scripts_) {
    if (!split.count(s.id)) throw Error("split does not cover script " + s.id);
  }
  if (split.size() != scripts_.size()) throw Error("split names ids that are not in the corpus");
  split_ = std::move(split);
}

std::string derive_script_id(const std::string& language, const std::string& title) {
  std::uint64_t h = text::fnv1a(language);
  h = text::fnv1a(std::string_view("\x1f", 1), h);
  h = text::fnv1a(title, h);
  return language + "-" + text::hex64(h);
}

namespace {

std::string required_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) throw ParseError(field, "missing");
  if (!it->is_string()) throw ParseError(field, "expected a string");
  return it->get<std::string>();
}

std::string optional_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(field, "expected a string");
  return it->get<std::string>();
}

bool parse_ordered(const json& record) {
  auto it = record.find("ordered");
  if (it == record.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  // Dumps written from Python sometimes carry the literal as a string.
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
  }
  throw ParseError("ordered", "expected a boolean");
}

}  // namespace

Script parse_article(const json& record, const std::string& default_language) {
  if (!record.is_object()) throw ParseError("record", "expected an object");

  Script s;
  s.language = optional_string(record, "language");
  if (s.language.empty()) s.language = default_language;

  std::string title;
  if (record.contains("goal")) {
    s.goal = text::canonical(required_string(record, "goal"));
    title = optional_string(record, "title");
    if (title.empty()) title = s.goal;
  } else {
    title = text::canonical(required_string(record, "title"));
    s.goal = text::canonical(text::strip_how_to(title));
  }
  if (s.goal.empty()) throw ParseError("title", "empty goal");

  s.category = text::canonical(optional_string(record, "category"));
  s.ordered = parse_ordered(record);

  auto secs = record.find("sections");
  if (secs == record.end()) throw ParseError("sections", "missing");
  if (!secs->is_array()) throw ParseError("sections", "expected an array");
  for (std::size_t i = 0; i < secs->size(); ++i) {
    const json& sec = (*secs)[i];
    const std::string where = "sections[" + std::to_string(i) + "]";
    if (!sec.is_object()) throw ParseError(where, "expected an object");
    Section section;
    section.header = text::canonical(optional_string(sec, "section"));
    auto steps = sec.find("steps");
    if (steps == sec.end()) throw ParseError(where + ".steps", "missing");
    if (!steps->is_array()) throw ParseError(where + ".steps", "expected an array");
    for (const json& st : *steps) {
      if (!st.is_string()) throw ParseError(where + ".steps", "expected strings");
      std::string step = text::canonical(st.get<std::string>());
      if (step.empty() || step == s.goal) continue;
      section.steps.push_back(step);
      s.steps.push_back(std::move(step));
    }
    s.sections.push_back(std::move(section));
  }
  if (s.steps.empty()) throw ParseError("sections", "script has no steps");

  s.id = optional_string(record, "id");
  if (s.id.empty()) s.id = derive_script_id(s.language, title);
  return s;
}

json to_json(const Script& script) {
  json sections = json::array();
  for (const auto& sec : script.sections) {
    sections.push_back({{"section", sec.header}, {"steps", sec.steps}});
  }
  return {{"id", script.id},         {"language", script.language}, {"goal", script.goal},
          {"title", script.goal},    {"category", script.category}, {"ordered", script.ordered},
          {"sections", sections}};
}

Corpus load_corpus(const std::string& path, const std::string& language, std::vector<std::string>* errors) {
  std::vector<Script> scripts;
  std::set<std::string> seen;
  for (auto& line : jsonl::read_file(path, errors)) {
    try {
      Script s = parse_article(line.value, language);
      if (!seen.insert(s.id).second) throw ParseError("id", "duplicate script id " + s.id);
      scripts.push_back(std::move(s));
    } catch (const ParseError& e) {
      std::string msg = "line " + std::to_string(line.number) + ": " + e.what();
      if (!errors) throw ParseError("line " + std::to_string(line.number), e.what());
      errors->push_back(std::move(msg));
    }
  }
  return Corpus(language, std::move(scripts));
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::vector<json> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus.scripts()) lines.push_back(to_json(s));
  jsonl::write_file(path, lines);
}

std::vector<CrossLanguageLink> load_links(const std::string& path) {
  std::vector<CrossLanguageLink> links;
  std::map<std::string, std::string> seen;
  for (const auto& line : jsonl::read_file(path)) {
    const std::string where = "line " + std::to_string(line.number);
    CrossLanguageLink link;
    try {
      link.source_id = required_string(line.value, "source_id");
      link.english_id = required_string(line.value, "english_id");
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
    auto [it, inserted] = seen.emplace(link.source_id, link.english_id);
    if (!inserted && it->second != link.english_id) {
      throw ParseError(where, "source id " + link.source_id + " linked to two English ids");
    }
    if (inserted) links.push_back(std::move(link));
  }
  return links;
}

Warnings project_ordered_labels(std::map<std::string, Corpus>& corpora, const std::vector<CrossLanguageLink>& links) {
  Warnings warnings;
  auto en = corpora.find("en");
  if (en == corpora.end()) throw Error("label projection needs an English corpus keyed \"en\"");

  std::unordered_map<std::string, std::string> link_of;
  for (const auto& l : links) link_of.emplace(l.source_id, l.english_id);

  for (auto& [lang, corpus] : corpora) {
    if (lang == "en") continue;
    for (auto& s : corpus.mutable_scripts()) {
      s.ordered = false;
      auto l = link_of.find(s.id);
      if (l == link_of.end()) continue;
      if (auto idx = en->second.find(l->second)) {
        s.ordered = en->second.scripts()[*idx].ordered;
      } else {
        warnings.push_back("script " + s.id + " links to unknown English id " + l->second);
      }
    }
  }
  return warnings;
}

void split_corpus(Corpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n < 10) throw Error("split needs at least 10 scripts, corpus has " + std::to_string(n));
  const std::size_t n_test = (n + 5) / 10;  // round(0.1 * n), halves up

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::map<std::string, Split> split;
  for (std::size_t i = 0; i < n; ++i) {
    split[corpus.scripts()[order[i]].id] = i < n_test ? Split::Test : Split::Train;
  }
  corpus.set_split(std::move(split));
}

void save_split_manifest(const std::string& path, const Corpus& corpus) {
  std::vector<json> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus.scripts()) {
    lines.push_back({{"id", s.id}, {"split", to_string(corpus.split_of(s.id))}});
  }
  jsonl::write_file(path, lines);
}

void load_split_manifest(const std::string& path, Corpus& corpus) {
  std::map<std::string, Split> split;
  for (const auto& line : jsonl::read_file(path)) {
    const std::string where = "line " + std::to_string(line.number);
    try {
      auto id = required_string(line.value, "id");
      auto sp = split_from_string(required_string(line.value, "split"));
      if (!split.emplace(id, sp).second) throw ParseError("id", "duplicate id " + id);
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
  }
  corpus.set_split(std::move(split));
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats st;
  st.num_scripts = corpus.size();
  if (corpus.empty()) return st;
  st.empty = false;
  std::size_t sections = 0;
  std::size_t steps = 0;
  for (const auto& s : corpus.scripts()) {
    st.num_ordered += s.ordered ? 1 : 0;
    sections += s.sections.size();
    steps += s.steps.size();
  }
  st.avg_sections = static_cast<double>(sections) / static_cast<double>(st.num_scripts);
  st.avg_steps = static_cast<double>(steps) / static_cast<double>(st.num_scripts);
  return st;
}

json to_json(const CorpusStats& stats) {
  return {{"num_scripts", stats.num_scripts},
          {"num_ordered", stats.num_ordered},
          {"avg_sections", stats.avg_sections},
          {"avg_steps", stats.avg_steps},
          {"empty", stats.empty}};
}

}  // namespace gosc
