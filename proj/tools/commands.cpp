#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gosc/corpus.hpp"
#include "gosc/error.hpp"
#include "gosc/events.hpp"
#include "gosc/jsonl.hpp"
#include "gosc/metrics.hpp"
#include "gosc/pipeline.hpp"
#include "gosc/remote.hpp"
#include "gosc/scorers.hpp"
#include "gosc/task.hpp"

namespace gosc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Effective configuration of one command: the --config file with any
// flags layered on top. Accessors validate and name the offending field.
class RunConfig {
 public:
  explicit RunConfig(json j) : j_(std::move(j)) {}

  const json& raw() const { return j_; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

  std::string string(const std::string& key) const {
    require(key);
    if (!j_[key].is_string()) throw ParseError(key, "expected a string");
    return j_[key].get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  // An input path that must exist.
  std::string input(const std::string& key) const {
    auto p = string(key);
    if (!fs::exists(p)) throw ParseError(key, "no such file: " + p);
    return p;
  }

  std::uint64_t seed() const { return unsigned_int("seed"); }

  std::uint64_t unsigned_int(const std::string& key) const {
    require(key);
    if (!j_[key].is_number_unsigned()) throw ParseError(key, "expected a non-negative integer");
    return j_[key].get<std::uint64_t>();
  }
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? unsigned_int(key) : fallback;
  }

  double real_or(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_number()) throw ParseError(key, "expected a number");
    return j_[key].get<double>();
  }

  bool flag(const std::string& key) const {
    if (!has(key)) return false;
    if (!j_[key].is_boolean()) throw ParseError(key, "expected a boolean");
    return j_[key].get<bool>();
  }

  std::vector<std::size_t> ks() const {
    if (!has("ks")) return {25, 50};
    if (!j_["ks"].is_array()) throw ParseError("ks", "expected an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& k : j_["ks"]) {
      if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) {
        throw ParseError("ks", "expected an array of positive integers");
      }
      out.push_back(k.get<std::size_t>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    require(key);
    if (j_[key].is_string()) return {j_[key].get<std::string>()};
    if (!j_[key].is_array()) throw ParseError(key, "expected a string or an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j_[key]) {
      if (!v.is_string()) throw ParseError(key, "expected strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  ScorerConfig scorer(const std::string& key) const {
    require(key);
    json sc = j_[key];
    if (sc.is_string()) sc = json{{"kind", sc}};
    if (sc.is_object() && !sc.contains("seed") && sc.value("kind", "") == "random" && has("seed")) {
      sc["seed"] = seed();
    }
    if (sc.is_object() && sc.value("kind", "") == "remote") {
      if (const char* env = std::getenv(kEndpointEnv); env && *env) sc["endpoint"] = env;
    }
    return scorer_config_from_json(sc, key);
  }

  fs::path out_dir() const { return string_or("out", "."); }

 private:
  void require(const std::string& key) const {
    if (!has(key)) throw ParseError(key, "missing (set it in the config file or with a flag)");
  }
  json j_;
};

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

void freeze_config(const RunConfig& cfg, const std::string& command) {
  json frozen = cfg.raw();
  frozen["command"] = command;
  write_text(cfg.out_dir() / "config.json", frozen.dump(2) + "\n");
}

Corpus load_split_corpus(const RunConfig& cfg) {
  Corpus corpus = load_corpus(cfg.input("corpus"), cfg.string_or("language", "en"));
  load_split_manifest(cfg.input("split"), corpus);
  return corpus;
}

void print_warnings(std::ostream& err, const Warnings& w) {
  for (const auto& line : w) err << "warning: " << line << '\n';
}

// Scorers for one run. Oracle scorers depend on the task's gold script, so
// they are made per task by the accessors below.
class Scorers {
 public:
  Scorers(const RunConfig& cfg, const Corpus* train) {
    rel_cfg_ = cfg.scorer("relevance");
    ord_cfg_ = cfg.scorer("ordering");
    if (rel_cfg_.kind == ScorerKind::PositionStats) {
      throw ParseError("relevance.kind", "position-stats is an ordering scorer");
    }
    if (ord_cfg_.kind == ScorerKind::LexicalTfidf) {
      throw ParseError("ordering.kind", "lexical-tfidf is a relevance scorer");
    }
    auto need_train = [&](const char* field) -> const Corpus& {
      if (!train) throw ParseError(field, "this scorer needs a training corpus (set corpus and split)");
      return *train;
    };

    std::shared_ptr<RemoteScorer> shared_remote;
    auto remote = [&](const ScorerConfig& c) {
      RemoteOptions o;
      o.batch_size = c.batch_size;
      o.max_in_flight = c.max_in_flight;
      o.language = c.language;
      if (shared_remote && shared_endpoint_ == c.endpoint) return shared_remote;
      shared_remote = std::make_shared<RemoteScorer>(c.endpoint, o);
      shared_endpoint_ = c.endpoint;
      return shared_remote;
    };

    switch (rel_cfg_.kind) {
      case ScorerKind::LexicalTfidf:
        relevance_ = std::make_shared<LexicalScorer>(LexicalScorer::build(need_train("relevance")));
        break;
      case ScorerKind::Random: relevance_ = std::make_shared<RandomScorer>(*rel_cfg_.seed); break;
      case ScorerKind::Remote: relevance_ = remote(rel_cfg_); break;
      default: break;
    }
    switch (ord_cfg_.kind) {
      case ScorerKind::PositionStats:
        ordering_ = std::make_shared<PositionOrderer>(PositionOrderer::build(need_train("ordering"), ord_cfg_.position_scale));
        break;
      case ScorerKind::Random: ordering_ = std::make_shared<RandomScorer>(*ord_cfg_.seed); break;
      case ScorerKind::Remote: ordering_ = remote(ord_cfg_); break;
      default: break;
    }
  }

  bool needs_gold() const { return !relevance_ || !ordering_; }

  template <typename Fn>
  auto with(const std::vector<std::string>& gold, Fn&& fn) const {
    std::optional<OracleRelevance> orel;
    std::optional<OracleOrderer> oord;
    const RelevanceScorer* r = relevance_.get();
    const OrderScorer* o = ordering_.get();
    if (!r) r = &orel.emplace(gold);
    if (!o) o = &oord.emplace(gold);
    return fn(*r, *o);
  }

  const RelevanceScorer* relevance() const { return relevance_.get(); }
  const OrderScorer* ordering() const { return ordering_.get(); }

 private:
  ScorerConfig rel_cfg_;
  ScorerConfig ord_cfg_;
  std::string shared_endpoint_;
  std::shared_ptr<RelevanceScorer> relevance_;
  std::shared_ptr<OrderScorer> ordering_;
};

// --- commands --------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::string language = cfg.string_or("language", "en");
  const std::string input = cfg.input("input");
  std::vector<std::string> errors;
  Corpus corpus = load_corpus(input, language, &errors);
  for (const auto& e : errors) err << input << ": " << e << '\n';
  if (!errors.empty() && !cfg.flag("lenient")) {
    err << errors.size() << " malformed record(s); rerun with --lenient to skip them\n";
    return 1;
  }
  if (corpus.empty()) {
    err << input << ": no scripts\n";
    return 1;
  }

  if (cfg.has("links")) {
    std::map<std::string, Corpus> corpora;
    corpora.emplace("en", load_corpus(cfg.input("english"), "en"));
    corpora.emplace(language, std::move(corpus));
    print_warnings(err, project_ordered_labels(corpora, load_links(cfg.input("links"))));
    corpus = std::move(corpora.at(language));
  }

  const auto dir = cfg.out_dir();
  save_corpus((dir / "corpus.jsonl").string(), corpus);
  const json stats = to_json(corpus_stats(corpus));
  write_text(dir / "stats.json", stats.dump(2) + "\n");
  freeze_config(cfg, "ingest");
  out << stats.dump(2) << '\n';
  return 0;
}

int cmd_split(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  Corpus corpus = load_corpus(cfg.input("corpus"), cfg.string_or("language", "en"));
  split_corpus(corpus, cfg.seed());
  save_split_manifest((cfg.out_dir() / "split.jsonl").string(), corpus);
  freeze_config(cfg, "split");
  std::size_t test = 0;
  for (const auto& [id, s] : corpus.split()) test += s == Split::Test ? 1 : 0;
  out << "train " << corpus.size() - test << ", test " << test << '\n';
  return 0;
}

int cmd_build_tasks(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_split_corpus(cfg);
  Warnings w;
  const auto tasks = build_retrieval_tasks(corpus, &w);
  print_warnings(err, w);
  save_tasks((cfg.out_dir() / "tasks.jsonl").string(), tasks);
  freeze_config(cfg, "build-tasks");
  out << tasks.size() << " tasks\n";
  return 0;
}

int cmd_emit_training(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_split_corpus(cfg);
  Warnings w;
  const auto inference = emit_inference_training_data(corpus, cfg.seed(), &w);
  const auto ordering = emit_ordering_training_data(corpus, cfg.seed());
  print_warnings(err, w);
  std::vector<json> a;
  std::vector<json> b;
  for (const auto& p : inference) a.push_back(to_json(p));
  for (const auto& p : ordering) b.push_back(to_json(p));
  jsonl::write_file(cfg.out_dir() / "inference.jsonl", a);
  jsonl::write_file(cfg.out_dir() / "ordering.jsonl", b);
  freeze_config(cfg, "emit-training");
  out << a.size() << " inference pairs, " << b.size() << " ordering pairs\n";
  return 0;
}

std::optional<Corpus> optional_train_corpus(const RunConfig& cfg) {
  if (!cfg.has("corpus")) return std::nullopt;
  if (cfg.has("split")) return load_split_corpus(cfg);
  return load_corpus(cfg.input("corpus"), cfg.string_or("language", "en"));
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto tasks = load_tasks(cfg.input("tasks"));
  const auto train = optional_train_corpus(cfg);
  const Scorers scorers(cfg, train ? &*train : nullptr);

  ConstructOptions opts;
  opts.mode = retention_mode_from_string(cfg.string_or("mode", "top-l"));
  opts.threshold = cfg.real_or("threshold", kDefaultThreshold);
  opts.retrieve.jobs = cfg.unsigned_or("jobs", 1);
  opts.seed = cfg.seed();
  opts.order_gold = true;
  const auto ks = cfg.ks();
  opts.ranking_depth = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());

  std::optional<LexicalScorer> prefilter;
  if (cfg.has("prefilter_k")) {
    if (!train) throw ParseError("prefilter_k", "the lexical pre-filter needs a training corpus");
    prefilter = LexicalScorer::build(*train);
    opts.retrieve.prefilter = &*prefilter;
    opts.retrieve.prefilter_k = cfg.unsigned_int("prefilter_k");
  }

  std::vector<ConstructedScript> results;
  results.reserve(tasks.size());
  for (const auto& t : tasks) {
    results.push_back(scorers.with(t.gold, [&](const RelevanceScorer& r, const OrderScorer& o) {
      return construct(t, r, o, opts);
    }));
  }
  save_constructed((cfg.out_dir() / "constructed.jsonl").string(), results);
  freeze_config(cfg, "run");
  out << results.size() << " scripts constructed\n";
  return 0;
}

metrics::TauDenominator tau_denominator(const RunConfig& cfg) {
  const auto v = cfg.string_or("tau_denominator", "length");
  if (v == "length") return metrics::TauDenominator::LengthPairs;
  if (v == "overlap") return metrics::TauDenominator::OverlapPairs;
  throw ParseError("tau_denominator", "expected \"length\" or \"overlap\"");
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  metrics::EvalOptions opts;
  opts.ks = cfg.ks();
  opts.tau_denominator = tau_denominator(cfg);
  const auto tasks = load_tasks(cfg.input("tasks"));
  const auto run = load_constructed(cfg.input("run"));
  const auto report = metrics::evaluate_run(tasks, run, opts);
  const auto table = metrics::format_table(report);
  write_text(cfg.out_dir() / "report.json", metrics::to_json(report).dump(2) + "\n");
  write_text(cfg.out_dir() / "report.txt", table);
  freeze_config(cfg, "eval");
  out << table;
  return 0;
}

int cmd_convert_esd(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto scenarios = load_esd(cfg.input("input"));
  const auto pool_name = cfg.string_or("pool", "representatives");
  EsdPool pool;
  if (pool_name == "representatives") {
    pool = EsdPool::Representatives;
  } else if (pool_name == "all") {
    pool = EsdPool::AllEsds;
  } else {
    throw ParseError("pool", "expected \"representatives\" or \"all\"");
  }
  const auto tasks = convert_esd_corpus(scenarios, pool);
  save_tasks((cfg.out_dir() / "tasks.jsonl").string(), tasks);
  freeze_config(cfg, "convert-esd");
  out << tasks.size() << " tasks from " << scenarios.size() << " scenarios\n";
  return 0;
}

int cmd_events(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto ontology = events::load_ontology(cfg.input("ontology"));
  const auto evs = events::load_events(cfg.input("events"), ontology);
  const auto pool = events::build_event_pool(evs, ontology);
  const auto train = optional_train_corpus(cfg);
  const Scorers scorers(cfg, train ? &*train : nullptr);
  if (scorers.needs_gold()) throw ParseError("relevance", "oracle scorers need a gold script; none exists here");
  const double theta = cfg.real_or("threshold", kDefaultThreshold);
  const std::size_t jobs = cfg.unsigned_or("jobs", 1);

  std::vector<json> lines;
  for (const auto& goal : cfg.strings("goal")) {
    auto n = events::construct_narrative(goal, pool, *scorers.relevance(), *scorers.ordering(), theta, jobs);
    if (n.empty) err << "warning: no event scored above " << theta << " for \"" << goal << "\"\n";
    lines.push_back(events::to_json(n));
  }
  jsonl::write_file(cfg.out_dir() / "narratives.jsonl", lines);
  freeze_config(cfg, "events");
  out << pool.size() << " pool steps, " << lines.size() << " narrative(s)\n";
  return 0;
}

// --- argument plumbing -----------------------------------------------------

enum class Kind { String, Unsigned, Real, UnsignedList, StringList, Flag, ScorerKindName };

struct Binding {
  std::string key;
  Kind kind;
  std::string value;
  std::vector<std::string> values;
  bool set = false;
  CLI::Option* option = nullptr;
};

json convert(const Binding& b) {
  auto as_unsigned = [&](const std::string& s) -> json {
    try {
      std::size_t used = 0;
      auto v = std::stoull(s, &used);
      if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(b.key, "expected a non-negative integer, got \"" + s + "\"");
    }
  };
  switch (b.kind) {
    case Kind::String: return b.value;
    case Kind::Unsigned: return as_unsigned(b.value);
    case Kind::Real:
      try {
        return std::stod(b.value);
      } catch (const std::exception&) {
        throw ParseError(b.key, "expected a number, got \"" + b.value + "\"");
      }
    case Kind::UnsignedList: {
      json arr = json::array();
      for (const auto& v : b.values) arr.push_back(as_unsigned(v));
      return arr;
    }
    case Kind::StringList: return b.values;
    case Kind::Flag: return true;
    case Kind::ScorerKindName: return b.value;
  }
  return nullptr;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goal-oriented script construction: corpora, tasks, retrieve-then-order pipeline, evaluation", "gosc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::unique_ptr<Binding>> bindings;
  auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, Kind kind, const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->key = key;
    b->kind = kind;
    if (kind == Kind::Flag) {
      b->option = sub->add_flag(flag, b->set, help);
    } else if (kind == Kind::UnsignedList || kind == Kind::StringList) {
      b->option = sub->add_option(flag, b->values, help);
    } else {
      b->option = sub->add_option(flag, b->value, help);
    }
    bindings.push_back(std::move(b));
  };

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its fields");
  bind(&app, "--seed", "seed", Kind::Unsigned, "Seed for every random choice");
  bind(&app, "--jobs", "jobs", Kind::Unsigned, "Parallel scoring jobs");
  bind(&app, "--out", "out", Kind::String, "Output directory");

  std::map<std::string, std::function<int(const RunConfig&, std::ostream&, std::ostream&)>> handlers;

  auto* ingest = app.add_subcommand("ingest", "Parse and validate an article dump; write corpus + stats");
  bind(ingest, "--input", "input", Kind::String, "Line-delimited article records");
  bind(ingest, "--language", "language", Kind::String, "ISO-639-1 code");
  bind(ingest, "--links", "links", Kind::String, "Cross-language link file (enables label projection)");
  bind(ingest, "--english", "english", Kind::String, "Ingested English corpus to project labels from");
  bind(ingest, "--lenient", "lenient", Kind::Flag, "Skip malformed records instead of failing");
  handlers["ingest"] = cmd_ingest;

  auto* split = app.add_subcommand("split", "Seeded 90/10 train/test split manifest");
  bind(split, "--corpus", "corpus", Kind::String, "Ingested corpus");
  handlers["split"] = cmd_split;

  auto* build = app.add_subcommand("build-tasks", "Retrieval task instances for the test split");
  bind(build, "--corpus", "corpus", Kind::String, "Ingested corpus");
  bind(build, "--split", "split", Kind::String, "Split manifest");
  handlers["build-tasks"] = cmd_build_tasks;

  auto* emit = app.add_subcommand("emit-training", "Training pairs for external relevance and ordering scorers");
  bind(emit, "--corpus", "corpus", Kind::String, "Ingested corpus");
  bind(emit, "--split", "split", Kind::String, "Split manifest");
  handlers["emit-training"] = cmd_emit_training;

  auto* runc = app.add_subcommand("run", "Construct scripts for task instances");
  bind(runc, "--tasks", "tasks", Kind::String, "Task instances");
  bind(runc, "--corpus", "corpus", Kind::String, "Training corpus for native scorers");
  bind(runc, "--split", "split", Kind::String, "Split manifest for the training corpus");
  bind(runc, "--relevance", "relevance", Kind::ScorerKindName, "lexical-tfidf | random | remote | oracle");
  bind(runc, "--ordering", "ordering", Kind::ScorerKindName, "position-stats | random | remote | oracle");
  bind(runc, "--mode", "mode", Kind::String, "top-l | threshold");
  bind(runc, "--threshold", "threshold", Kind::Real, "Retention threshold (threshold mode)");
  bind(runc, "--prefilter-k", "prefilter_k", Kind::Unsigned, "Enable the lexical pre-filter keeping K candidates");
  bind(runc, "--ks", "ks", Kind::UnsignedList, "Ranking depth to keep for recall/NDCG");
  handlers["run"] = cmd_run;

  auto* evalc = app.add_subcommand("eval", "Score constructed scripts against their tasks");
  bind(evalc, "--tasks", "tasks", Kind::String, "Task instances");
  bind(evalc, "--run", "run", Kind::String, "Constructed scripts");
  bind(evalc, "--ks", "ks", Kind::UnsignedList, "Cutoffs for recall/NDCG");
  bind(evalc, "--tau-denominator", "tau_denominator", Kind::String, "length | overlap");
  handlers["eval"] = cmd_eval;

  auto* esd = app.add_subcommand("convert-esd", "Task instances from an event-sequence-description corpus");
  bind(esd, "--input", "input", Kind::String, "Line-delimited {scenario, esd}");
  bind(esd, "--pool", "pool", Kind::String, "representatives | all");
  handlers["convert-esd"] = cmd_convert_esd;

  auto* ev = app.add_subcommand("events", "Narrative scripts from extracted events");
  bind(ev, "--ontology", "ontology", Kind::String, "Ontology templates");
  bind(ev, "--events", "events", Kind::String, "Line-delimited event instances");
  bind(ev, "--goal", "goal", Kind::StringList, "Goal(s) to construct");
  bind(ev, "--corpus", "corpus", Kind::String, "Training corpus for native scorers");
  bind(ev, "--split", "split", Kind::String, "Split manifest for the training corpus");
  bind(ev, "--relevance", "relevance", Kind::ScorerKindName, "lexical-tfidf | random | remote");
  bind(ev, "--ordering", "ordering", Kind::ScorerKindName, "position-stats | random | remote");
  bind(ev, "--threshold", "threshold", Kind::Real, "Retention threshold (default 0.95)");
  handlers["events"] = cmd_events;

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    json effective = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ParseError("config", "cannot open " + config_path);
      effective = json::parse(in, nullptr, false);
      if (effective.is_discarded() || !effective.is_object()) throw ParseError("config", "not a JSON object");
    }
    for (const auto& b : bindings) {
      if (b->option->count() == 0) continue;
      if (b->kind == Kind::ScorerKindName) {
        if (!effective[b->key].is_object()) effective[b->key] = json::object();
        effective[b->key]["kind"] = b->value;
      } else {
        effective[b->key] = convert(*b);
      }
    }
    const auto* sub = app.get_subcommands().front();
    return handlers.at(sub->get_name())(RunConfig(std::move(effective)), out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gosc::cli
