#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "gosc/corpus.hpp"
#include "gosc/error.hpp"

namespace gosc {

struct CandidateStep {
  std::string text;
  std::string source_id;
  std::string category;

  bool operator==(const CandidateStep&) const = default;
};

// A Retrieval-setting problem: pick `length` steps for `goal` out of
// `candidates` and order them; `gold` is the reference script.
struct TaskInstance {
  std::string goal;
  std::size_t length = 0;
  std::vector<CandidateStep> candidates;
  std::vector<std::string> gold;
  bool ordered = false;
  std::string language;
  std::string category;

  bool operator==(const TaskInstance&) const = default;
};

struct EsdScenario {
  std::string name;
  std::vector<std::vector<std::string>> esds;
};

enum class EsdPool { Representatives, AllEsds };

/// Throws gosc::Error unless length == |gold| >= 1 and every gold text is
/// present in candidates (as a multiset).
void validate(const TaskInstance& task);

/// Candidate pool = steps of every test-split script in the same category,
/// including the target's own. An empty category pools over all test
/// scripts and records a warning.
TaskInstance build_retrieval_task(const Script& script, const Corpus& corpus, Warnings* warnings = nullptr);

/// One task per test-split script, in corpus order. Indexes categories once.
std::vector<TaskInstance> build_retrieval_tasks(const Corpus& corpus, Warnings* warnings = nullptr);

/// Representative script = longest ESD (first on ties); the pool is the
/// union of all representatives (or of every ESD, per `pool`).
TaskInstance convert_esd(const EsdScenario& scenario, const std::vector<EsdScenario>& all, EsdPool pool = EsdPool::Representatives);
std::vector<TaskInstance> convert_esd_corpus(const std::vector<EsdScenario>& all, EsdPool pool = EsdPool::Representatives);

// Groups {scenario, esd} lines by scenario, in order of first appearance.
std::vector<EsdScenario> load_esd(const std::string& path);

nlohmann::json to_json(const CandidateStep& c);
CandidateStep candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& j);

std::vector<TaskInstance> load_tasks(const std::string& path);
void save_tasks(const std::string& path, const std::vector<TaskInstance>& tasks);

}  // namespace gosc
