#include "gosc/task.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "gosc/jsonl.hpp"
#include "gosc/text.hpp"

namespace gosc {

using nlohmann::json;

namespace {

// Appends a script's steps to the pool. Each script contributes every step
// occurrence exactly once, so repeated step texts within one script stay
// distinct candidates (the gold multiset must remain covered).
void add_script_steps(std::vector<CandidateStep>& pool, const Script& s) {
  for (const auto& step : s.steps) pool.push_back({step, s.id, s.category});
}

TaskInstance make_task(const Script& script, std::vector<CandidateStep> pool) {
  TaskInstance t;
  t.goal = script.goal;
  t.length = script.steps.size();
  t.candidates = std::move(pool);
  t.gold = script.steps;
  t.ordered = script.ordered;
  t.language = script.language;
  t.category = script.category;
  return t;
}

std::vector<std::size_t> test_indices(const Corpus& corpus) {
  if (!corpus.has_split()) throw Error("corpus has no split; run split first");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.split_of(corpus.scripts()[i].id) == Split::Test) out.push_back(i);
  }
  return out;
}

}  // namespace

void validate(const TaskInstance& task) {
  if (task.length == 0) throw Error("task \"" + task.goal + "\": length must be >= 1");
  if (task.length != task.gold.size()) throw Error("task \"" + task.goal + "\": length differs from gold size");
  std::unordered_map<std::string, std::size_t> available;
  for (const auto& c : task.candidates) {
    if (c.text.empty()) throw Error("task \"" + task.goal + "\": empty candidate text");
    ++available[c.text];
  }
  for (const auto& g : task.gold) {
    auto it = available.find(g);
    if (it == available.end() || it->second == 0) {
      throw Error("task \"" + task.goal + "\": gold step missing from candidates: " + g);
    }
    --it->second;
  }
}

TaskInstance build_retrieval_task(const Script& script, const Corpus& corpus, Warnings* warnings) {
  if (corpus.split_of(script.id) != Split::Test) {
    throw Error("script " + script.id + " is not in the test split");
  }
  std::vector<CandidateStep> pool;
  const bool pool_all = script.category.empty();
  if (pool_all && warnings) {
    warnings->push_back("script " + script.id + " has no category; pooling over all test scripts");
  }
  for (std::size_t i : test_indices(corpus)) {
    const Script& s = corpus.scripts()[i];
    if (pool_all || s.category == script.category) add_script_steps(pool, s);
  }
  return make_task(script, std::move(pool));
}

std::vector<TaskInstance> build_retrieval_tasks(const Corpus& corpus, Warnings* warnings) {
  const auto tests = test_indices(corpus);
  std::map<std::string, std::vector<CandidateStep>> by_category;
  std::vector<CandidateStep> everything;
  for (std::size_t i : tests) {
    const Script& s = corpus.scripts()[i];
    add_script_steps(by_category[s.category], s);
    add_script_steps(everything, s);
  }
  std::vector<TaskInstance> tasks;
  tasks.reserve(tests.size());
  for (std::size_t i : tests) {
    const Script& s = corpus.scripts()[i];
    if (s.category.empty()) {
      if (warnings) warnings->push_back("script " + s.id + " has no category; pooling over all test scripts");
      tasks.push_back(make_task(s, everything));
    } else {
      tasks.push_back(make_task(s, by_category[s.category]));
    }
  }
  return tasks;
}

namespace {

const std::vector<std::string>& representative(const EsdScenario& sc) {
  if (sc.esds.empty()) throw Error("scenario \"" + sc.name + "\" has no ESDs");
  const std::vector<std::string>* best = &sc.esds.front();
  for (const auto& esd : sc.esds) {
    if (esd.size() > best->size()) best = &esd;
  }
  return *best;
}

}  // namespace

TaskInstance convert_esd(const EsdScenario& scenario, const std::vector<EsdScenario>& all, EsdPool pool) {
  const auto& gold = representative(scenario);
  if (gold.empty()) throw Error("scenario \"" + scenario.name + "\": longest ESD is empty");

  TaskInstance t;
  t.goal = scenario.name;
  t.gold = gold;
  t.length = gold.size();
  t.ordered = true;
  t.language = "en";
  for (const auto& sc : all) {
    if (pool == EsdPool::Representatives) {
      for (const auto& step : representative(sc)) t.candidates.push_back({step, sc.name, ""});
    } else {
      for (std::size_t e = 0; e < sc.esds.size(); ++e) {
        const std::string source = sc.name + "#" + std::to_string(e);
        for (const auto& step : sc.esds[e]) t.candidates.push_back({step, source, ""});
      }
    }
  }
  return t;
}

std::vector<TaskInstance> convert_esd_corpus(const std::vector<EsdScenario>& all, EsdPool pool) {
  std::vector<TaskInstance> out;
  out.reserve(all.size());
  for (const auto& sc : all) out.push_back(convert_esd(sc, all, pool));
  return out;
}

std::vector<EsdScenario> load_esd(const std::string& path) {
  std::vector<EsdScenario> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& line : jsonl::read_file(path)) {
    const std::string where = "line " + std::to_string(line.number);
    const json& v = line.value;
    if (!v.is_object() || !v.contains("scenario") || !v["scenario"].is_string()) {
      throw ParseError(where, "scenario: missing or not a string");
    }
    if (!v.contains("esd") || !v["esd"].is_array()) throw ParseError(where, "esd: missing or not an array");
    std::vector<std::string> steps;
    for (const auto& s : v["esd"]) {
      if (!s.is_string()) throw ParseError(where, "esd: expected strings");
      // Verbatim apart from the canonical trim + NFC every stored text gets.
      std::string step = text::canonical(s.get<std::string>());
      if (!step.empty()) steps.push_back(std::move(step));
    }
    const std::string name = text::canonical(v["scenario"].get<std::string>());
    auto [it, inserted] = index.emplace(name, out.size());
    if (inserted) out.push_back({name, {}});
    out[it->second].esds.push_back(std::move(steps));
  }
  return out;
}

json to_json(const CandidateStep& c) {
  return {{"text", c.text}, {"source_id", c.source_id}, {"category", c.category}};
}

CandidateStep candidate_from_json(const json& j) {
  CandidateStep c;
  try {
    c.text = j.at("text").get<std::string>();
    c.source_id = j.value("source_id", std::string());
    c.category = j.value("category", std::string());
  } catch (const json::exception& e) {
    throw ParseError("candidates", e.what());
  }
  return c;
}

json to_json(const TaskInstance& task) {
  json cands = json::array();
  for (const auto& c : task.candidates) cands.push_back(to_json(c));
  return {{"goal", task.goal},         {"l", task.length},         {"ordered", task.ordered},
          {"language", task.language}, {"category", task.category}, {"gold", task.gold},
          {"candidates", cands}};
}

TaskInstance task_from_json(const json& j) {
  TaskInstance t;
  try {
    t.goal = j.at("goal").get<std::string>();
    t.length = j.at("l").get<std::size_t>();
    t.ordered = j.at("ordered").get<bool>();
    t.language = j.value("language", std::string());
    t.category = j.value("category", std::string());
    t.gold = j.at("gold").get<std::vector<std::string>>();
    for (const auto& c : j.at("candidates")) t.candidates.push_back(candidate_from_json(c));
  } catch (const json::exception& e) {
    throw ParseError("task", e.what());
  }
  validate(t);
  return t;
}

std::vector<TaskInstance> load_tasks(const std::string& path) {
  std::vector<TaskInstance> out;
  for (const auto& line : jsonl::read_file(path)) {
    try {
      out.push_back(task_from_json(line.value));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line.number), e.what());
    }
  }
  return out;
}

void save_tasks(const std::string& path, const std::vector<TaskInstance>& tasks) {
  std::vector<json> lines;
  lines.reserve(tasks.size());
  for (const auto& t : tasks) lines.push_back(to_json(t));
  jsonl::write_file(path, lines);
}

}  // namespace gosc
