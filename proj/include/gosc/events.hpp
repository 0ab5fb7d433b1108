#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gosc/pipeline.hpp"
#include "gosc/scorers.hpp"
#include "gosc/task.hpp"

namespace gosc::events {

struct EventInstance {
  std::string event_type;
  std::string trigger;
  std::map<std::string, std::string> arguments;  // role name -> text, may be sparse
  std::string doc_id;
};

struct Role {
  std::string name;
  int slot = 0;             // the N in "<argN>"
  std::string placeholder;  // used when the argument is missing
};

// Template text uses numbered markers, e.g. "<arg1> damaged <arg2> using
// <arg3> instrument".
struct OntologyTemplate {
  std::string event_type;
  std::string text;
  std::vector<Role> roles;
};

class Ontology {
 public:
  Ontology() = default;
  // Throws unless every slot marker in each template has a role with a
  // non-empty placeholder.
  explicit Ontology(std::vector<OntologyTemplate> templates);

  const OntologyTemplate& at(const std::string& event_type) const;
  bool contains(const std::string& event_type) const { return templates_.count(event_type) > 0; }
  std::size_t size() const { return templates_.size(); }

 private:
  std::map<std::string, OntologyTemplate> templates_;
};

Ontology ontology_from_json(const std::vector<nlohmann::json>& records);
Ontology load_ontology(const std::string& path);

EventInstance event_from_json(const nlohmann::json& j);
// Every event type must be present in `ontology`.
std::vector<EventInstance> load_events(const std::string& path, const Ontology& ontology);

/// Fills each slot with the extracted argument, or the role's placeholder
/// when absent, then upper-cases the first letter. Unknown event types
/// throw, naming the type.
std::string instantiate_template(const EventInstance& event, const Ontology& ontology);

/// One candidate per event: text = instantiated template, source_id =
/// document id, category = event type. Exact duplicates collapse.
std::vector<CandidateStep> build_event_pool(const std::vector<EventInstance>& events, const Ontology& ontology);

struct NarrativeScript {
  ConstructedScript script;
  std::vector<std::string> event_types;  // parallel to script.steps
  bool empty = false;                    // nothing scored above the threshold
};

/// Keeps pool steps scoring above `threshold`, then win-count orders them.
NarrativeScript construct_narrative(const std::string& goal, const std::vector<CandidateStep>& pool,
                                    const RelevanceScorer& relevance, const OrderScorer& orderer,
                                    double threshold = kDefaultThreshold, std::size_t jobs = 1);

nlohmann::json to_json(const NarrativeScript& n);

}  // namespace gosc::events
