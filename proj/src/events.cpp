#include "gosc/events.hpp"

#include <regex>
#include <tuple>
#include <set>

#include "gosc/error.hpp"
#include "gosc/jsonl.hpp"
#include "gosc/text.hpp"

namespace gosc::events {

using nlohmann::json;

namespace {

const std::regex& slot_marker() {
  static const std::regex re("<arg([0-9]+)>");
  return re;
}

}  // namespace

Ontology::Ontology(std::vector<OntologyTemplate> templates) {
  for (auto& t : templates) {
    if (t.event_type.empty()) throw ParseError("event_type", "empty");
    std::set<int> slots;
    for (const auto& r : t.roles) {
      if (r.placeholder.empty()) throw ParseError(t.event_type + ".roles." + r.name, "empty placeholder");
      if (!slots.insert(r.slot).second) {
        throw ParseError(t.event_type + ".roles", "slot " + std::to_string(r.slot) + " assigned twice");
      }
    }
    for (std::sregex_iterator it(t.text.begin(), t.text.end(), slot_marker()), end; it != end; ++it) {
      const int slot = std::stoi((*it)[1].str());
      if (!slots.count(slot)) {
        throw ParseError(t.event_type + ".template", "slot <arg" + std::to_string(slot) + "> has no role");
      }
    }
    const std::string key = t.event_type;
    if (!templates_.emplace(key, std::move(t)).second) throw ParseError("event_type", "duplicate " + key);
  }
}

const OntologyTemplate& Ontology::at(const std::string& event_type) const {
  auto it = templates_.find(event_type);
  if (it == templates_.end()) throw Error("unknown event type \"" + event_type + "\"");
  return it->second;
}

Ontology ontology_from_json(const std::vector<json>& records) {
  std::vector<OntologyTemplate> templates;
  for (const auto& r : records) {
    OntologyTemplate t;
    try {
      t.event_type = r.at("event_type").get<std::string>();
      t.text = r.at("template").get<std::string>();
      for (const auto& role : r.at("roles")) {
        t.roles.push_back({role.at("name").get<std::string>(), role.at("slot").get<int>(),
                           role.at("placeholder").get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw ParseError("ontology", e.what());
    }
    templates.push_back(std::move(t));
  }
  return Ontology(std::move(templates));
}

Ontology load_ontology(const std::string& path) {
  std::vector<json> records;
  for (auto& line : jsonl::read_file(path)) records.push_back(std::move(line.value));
  return ontology_from_json(records);
}

EventInstance event_from_json(const json& j) {
  EventInstance e;
  try {
    e.event_type = j.at("event_type").get<std::string>();
    e.trigger = j.value("trigger", std::string());
    e.doc_id = j.value("doc_id", std::string());
    if (j.contains("arguments")) {
      for (const auto& [role, value] : j.at("arguments").items()) {
        if (!value.is_null()) e.arguments[role] = value.get<std::string>();
      }
    }
  } catch (const json::exception& ex) {
    throw ParseError("event", ex.what());
  }
  return e;
}

std::vector<EventInstance> load_events(const std::string& path, const Ontology& ontology) {
  std::vector<EventInstance> out;
  for (const auto& line : jsonl::read_file(path)) {
    const std::string where = "line " + std::to_string(line.number);
    EventInstance e;
    try {
      e = event_from_json(line.value);
    } catch (const ParseError& err) {
      throw ParseError(where, err.what());
    }
    if (!ontology.contains(e.event_type)) throw ParseError(where, "unknown event type \"" + e.event_type + "\"");
    out.push_back(std::move(e));
  }
  return out;
}

std::string instantiate_template(const EventInstance& event, const Ontology& ontology) {
  const OntologyTemplate& t = ontology.at(event.event_type);
  std::map<int, std::string> fill;
  for (const auto& role : t.roles) {
    auto it = event.arguments.find(role.name);
    std::string value = it == event.arguments.end() ? std::string() : text::canonical(it->second);
    fill[role.slot] = value.empty() ? role.placeholder : value;
  }

  std::string out;
  auto last = t.text.cbegin();
  for (std::sregex_iterator it(t.text.begin(), t.text.end(), slot_marker()), end; it != end; ++it) {
    out.append(last, (*it)[0].first);
    out += fill.at(std::stoi((*it)[1].str()));
    last = (*it)[0].second;
  }
  out.append(last, t.text.cend());
  return text::sentence_case(text::canonical(out));
}

std::vector<CandidateStep> build_event_pool(const std::vector<EventInstance>& events, const Ontology& ontology) {
  std::vector<CandidateStep> pool;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& e : events) {
    CandidateStep c{instantiate_template(e, ontology), e.doc_id, e.event_type};
    if (seen.emplace(c.text, c.source_id, c.category).second) pool.push_back(std::move(c));
  }
  return pool;
}

NarrativeScript construct_narrative(const std::string& goal, const std::vector<CandidateStep>& pool,
                                    const RelevanceScorer& relevance, const OrderScorer& orderer, double threshold,
                                    std::size_t jobs) {
  TaskInstance task;
  task.goal = goal;
  task.candidates = pool;
  task.ordered = true;

  RetrieveOptions ro;
  ro.jobs = jobs;
  const auto kept = take_above_threshold(retrieve_steps(task, relevance, ro), threshold);

  NarrativeScript n;
  n.script.goal = goal;
  n.script.mode = RetentionMode::Threshold;
  n.empty = kept.empty();
  if (n.empty) return n;

  std::vector<std::string> texts;
  for (const auto& k : kept) texts.push_back(k.text);
  for (std::size_t i : order_steps(goal, texts, orderer, jobs)) {
    n.script.steps.push_back(kept[i].text);
    n.script.confidences.push_back(kept[i].score);
    n.event_types.push_back(pool[kept[i].index].category);
  }
  return n;
}

json to_json(const NarrativeScript& n) {
  json j = gosc::to_json(n.script);
  for (std::size_t i = 0; i < n.event_types.size(); ++i) j["steps"][i]["event_type"] = n.event_types[i];
  j["empty"] = n.empty;
  return j;
}

}  // namespace gosc::events
