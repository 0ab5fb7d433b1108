#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gosc/error.hpp"

namespace gosc {

struct Section {
  std::string header;
  std::vector<std::string> steps;
  bool operator==(const Section&) const = default;
};

// One goal-oriented script: a goal plus its (flattened) steps.
struct Script {
  std::string id;
  std::string language;
  std::string goal;
  std::string category;
  bool ordered = false;
  std::vector<Section> sections;
  std::vector<std::string> steps;  // concatenation of sections[i].steps

  bool operator==(const Script&) const = default;
};

enum class Split { Train, Test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string language, std::vector<Script> scripts);

  const std::string& language() const { return language_; }
  const std::vector<Script>& scripts() const { return scripts_; }
  std::vector<Script>& mutable_scripts() { return scripts_; }
  std::size_t size() const { return scripts_.size(); }
  bool empty() const { return scripts_.empty(); }

  // Index of a script by id, or nullopt.
  std::optional<std::size_t> find(const std::string& id) const;

  bool has_split() const { return !split_.empty(); }
  const std::map<std::string, Split>& split() const { return split_; }
  // Throws if no split has been assigned or the id is unknown.
  Split split_of(const std::string& id) const;
  void set_split(std::map<std::string, Split> split);

 private:
  std::string language_;
  std::vector<Script> scripts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, Split> split_;
};

struct CrossLanguageLink {
  std::string source_id;
  std::string english_id;
};

struct CorpusStats {
  std::size_t num_scripts = 0;
  std::size_t num_ordered = 0;
  double avg_sections = 0.0;
  double avg_steps = 0.0;
  bool empty = true;
};

/// Builds a Script from one article record ({title, category, ordered,
/// sections: [{section, steps}]}, plus optional id / language / goal).
/// Texts are trimmed and NFC-normalized; a leading "How to " is stripped
/// from the title. Steps identical to the goal are dropped. Throws
/// ParseError naming the field when the record is malformed.
Script parse_article(const nlohmann::json& record, const std::string& default_language = "en");

/// Serialized form accepted back by parse_article (carries an explicit goal
/// and id, so re-parsing is the identity).
nlohmann::json to_json(const Script& script);

// Stable id derived from (language, title) when the record has none.
std::string derive_script_id(const std::string& language, const std::string& title);

/// Parses a whole corpus file. With `errors` set, malformed records are
/// reported there ("line N: field: reason") and skipped; otherwise the first
/// one throws. Duplicate ids are always an error.
Corpus load_corpus(const std::string& path, const std::string& language, std::vector<std::string>* errors = nullptr);
void save_corpus(const std::string& path, const Corpus& corpus);

std::vector<CrossLanguageLink> load_links(const std::string& path);

/// Copies English ordered labels onto linked scripts of every other
/// language; unlinked scripts become unordered. The corpus keyed "en" is
/// left untouched. Links to unknown English ids produce a warning.
Warnings project_ordered_labels(std::map<std::string, Corpus>& corpora, const std::vector<CrossLanguageLink>& links);

/// Marks round(N/10) scripts as test via a seeded shuffle. Requires N >= 10.
void split_corpus(Corpus& corpus, std::uint64_t seed);

void save_split_manifest(const std::string& path, const Corpus& corpus);
void load_split_manifest(const std::string& path, Corpus& corpus);

CorpusStats corpus_stats(const Corpus& corpus);
nlohmann::json to_json(const CorpusStats& stats);

}  // namespace gosc
