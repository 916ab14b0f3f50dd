// nlisa command-line tool: answer, benchmark, sample, build-cache, oracle-check.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlisa/nlisa.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlisa;

namespace {

struct RunConfig {
  std::string kg_full;
  std::string kg_observed;
  std::string provider = "exact";  // exact | calibrated
  double epsilon = 0.0;
  std::string exact_graph = "observed";  // graph the exact provider reads: observed | full
  std::string score_file;
  std::string cache_file;
  std::string relation_tail_file;
  std::string calibration = "log_scale";  // log_scale | ratio_of_sums
  std::string tnorm = "product";
  std::optional<std::size_t> k_x;  // absent: every entity
  std::optional<std::size_t> k_y;
  std::size_t block_size = 512;
  std::uint64_t seed = 0;
  std::string out_dir = "run";
  std::string templates;
  std::vector<std::string> types;  // empty: every supported template
  std::size_t queries_per_template = 10;
  std::string dataset;
  unsigned workers = 0;  // 0: every available core
  bool global_rankings = false;
  std::string global_rankings_file;  // precomputed rankings, JSON lines
  std::size_t top_n = 10;
  bool witnesses = false;
  std::size_t qps_repetitions = 3;
};

template <typename T>
void opt_to_json(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"kg_full", c.kg_full},
           {"kg_observed", c.kg_observed},
           {"provider", c.provider},
           {"epsilon", c.epsilon},
           {"exact_graph", c.exact_graph},
           {"score_file", c.score_file},
           {"cache_file", c.cache_file},
           {"relation_tail_file", c.relation_tail_file},
           {"calibration", c.calibration},
           {"tnorm", c.tnorm},
           {"block_size", c.block_size},
           {"seed", c.seed},
           {"out_dir", c.out_dir},
           {"templates", c.templates},
           {"types", c.types},
           {"queries_per_template", c.queries_per_template},
           {"dataset", c.dataset},
           {"workers", c.workers},
           {"global_rankings", c.global_rankings},
           {"global_rankings_file", c.global_rankings_file},
           {"top_n", c.top_n},
           {"witnesses", c.witnesses},
           {"qps_repetitions", c.qps_repetitions}};
  opt_to_json(j, "k_x", c.k_x);
  opt_to_json(j, "k_y", c.k_y);
}

template <typename T>
void read_key(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

template <typename T>
void read_key(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    field.reset();
  else
    field = j.at(key).get<T>();
}

void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  static const std::set<std::string> known = {
      "kg_full",  "kg_observed", "provider",        "epsilon",   "exact_graph",
      "score_file", "cache_file", "relation_tail_file", "calibration", "tnorm",
      "k_x",      "k_y",         "block_size",      "seed",      "out_dir",
      "templates", "types",      "queries_per_template", "dataset", "workers",
      "global_rankings", "global_rankings_file", "top_n", "witnesses",      "qps_repetitions"};
  for (auto& [k, v] : j.items())
    if (!known.count(k)) throw ParseError("unknown config key '" + k + "'", 0);
  read_key(j, "kg_full", c.kg_full);
  read_key(j, "kg_observed", c.kg_observed);
  read_key(j, "provider", c.provider);
  read_key(j, "epsilon", c.epsilon);
  read_key(j, "exact_graph", c.exact_graph);
  read_key(j, "score_file", c.score_file);
  read_key(j, "cache_file", c.cache_file);
  read_key(j, "relation_tail_file", c.relation_tail_file);
  read_key(j, "calibration", c.calibration);
  read_key(j, "tnorm", c.tnorm);
  read_key(j, "k_x", c.k_x);
  read_key(j, "k_y", c.k_y);
  read_key(j, "block_size", c.block_size);
  read_key(j, "seed", c.seed);
  read_key(j, "out_dir", c.out_dir);
  read_key(j, "templates", c.templates);
  read_key(j, "types", c.types);
  read_key(j, "queries_per_template", c.queries_per_template);
  read_key(j, "dataset", c.dataset);
  read_key(j, "workers", c.workers);
  read_key(j, "global_rankings", c.global_rankings);
  read_key(j, "global_rankings_file", c.global_rankings_file);
  read_key(j, "top_n", c.top_n);
  read_key(j, "witnesses", c.witnesses);
  read_key(j, "qps_repetitions", c.qps_repetitions);
}

void validate(const RunConfig& c) {
  if (c.provider != "exact" && c.provider != "calibrated")
    throw ParseError("provider must be 'exact' or 'calibrated'", 0);
  if (c.exact_graph != "observed" && c.exact_graph != "full")
    throw ParseError("exact_graph must be 'observed' or 'full'", 0);
  if (c.calibration != "log_scale" && c.calibration != "ratio_of_sums")
    throw ParseError("calibration must be 'log_scale' or 'ratio_of_sums'", 0);
  if ((c.k_x && *c.k_x == 0) || (c.k_y && *c.k_y == 0)) throw ParseError("k_x and k_y must be at least 1", 0);
  if (c.block_size == 0) throw ParseError("block_size must be at least 1", 0);
  if (c.qps_repetitions == 0) throw ParseError("qps_repetitions must be at least 1", 0);
  try {
    parse_tnorm(c.tnorm);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
}

// Command-line values; set ones replace the config file's.
struct Overrides {
  std::optional<std::string> kg_full, kg_observed, provider, exact_graph, score_file, cache_file, relation_tail_file,
      calibration, tnorm, out_dir, templates, dataset, global_rankings_file;
  std::optional<double> epsilon;
  std::optional<std::size_t> k_x, k_y, block_size, queries_per_template, top_n, qps_repetitions;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::vector<std::string> types;
  bool global_rankings = false, witnesses = false;

  void apply(RunConfig& c) const {
    auto set = [](auto& field, const auto& v) {
      if (v) field = *v;
    };
    set(c.kg_full, kg_full);
    set(c.kg_observed, kg_observed);
    set(c.provider, provider);
    set(c.exact_graph, exact_graph);
    set(c.score_file, score_file);
    set(c.cache_file, cache_file);
    set(c.relation_tail_file, relation_tail_file);
    set(c.calibration, calibration);
    set(c.tnorm, tnorm);
    set(c.out_dir, out_dir);
    set(c.templates, templates);
    set(c.dataset, dataset);
    set(c.global_rankings_file, global_rankings_file);
    set(c.epsilon, epsilon);
    if (k_x) c.k_x = *k_x;
    if (k_y) c.k_y = *k_y;
    set(c.block_size, block_size);
    set(c.queries_per_template, queries_per_template);
    set(c.top_n, top_n);
    set(c.qps_repetitions, qps_repetitions);
    set(c.seed, seed);
    set(c.workers, workers);
    if (!types.empty()) c.types = types;
    if (global_rankings) c.global_rankings = true;
    if (witnesses) c.witnesses = true;
  }
};

void add_common(CLI::App* cmd, Overrides& o, std::string& config_path) {
  cmd->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--kg-full", o.kg_full, "Full triple file (TSV)");
  cmd->add_option("--kg-observed", o.kg_observed, "Observed triple file (TSV)");
  cmd->add_option("--provider", o.provider, "exact or calibrated");
  cmd->add_option("--epsilon", o.epsilon, "Noise floor of the exact provider");
  cmd->add_option("--exact-graph", o.exact_graph, "Graph read by the exact provider: observed or full");
  cmd->add_option("--score-file", o.score_file, "Raw score file");
  cmd->add_option("--cache-file", o.cache_file, "Normalizer cache file");
  cmd->add_option("--relation-tail-file", o.relation_tail_file, "Relation-tail table");
  cmd->add_option("--calibration", o.calibration, "log_scale or ratio_of_sums");
  cmd->add_option("--tnorm", o.tnorm, "godel, product or lukasiewicz");
  cmd->add_option("--k-x", o.k_x, "Domain size of existential variables");
  cmd->add_option("--k-y", o.k_y, "Domain size of the free variable");
  cmd->add_option("--block-size", o.block_size, "Free-variable block size");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--workers", o.workers, "Engine threads (0 = all cores)");
  cmd->add_option("--out-dir", o.out_dir, "Run directory");
  cmd->add_flag("--global-rankings", o.global_rankings, "Cut domains with global rankings");
  cmd->add_option("--global-rankings-file", o.global_rankings_file, "Precomputed global rankings (JSON lines)");
}

// ---------------------------------------------------------------------------

KnowledgeGraph read_graph(const std::string& path, SymbolMode mode = SymbolMode::create, Symbols symbols = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_triples(in, mode, std::move(symbols));
}

struct Graphs {
  std::optional<KnowledgeGraph> full;
  std::optional<KnowledgeGraph> observed;

  // Graph that formulas and answer ids refer to.
  const KnowledgeGraph& main() const { return observed ? *observed : *full; }
};

// Observed graph shares the full graph's symbol table when both are given.
Graphs load_graphs(const RunConfig& c, bool need_full) {
  Graphs g;
  if (!c.kg_full.empty()) g.full = read_graph(c.kg_full);
  if (!c.kg_observed.empty())
    g.observed = g.full ? read_graph(c.kg_observed, SymbolMode::strict, g.full->symbols()) : read_graph(c.kg_observed);
  if (need_full && !g.full) throw DataError("kg_full is required");
  if (!g.full && !g.observed) throw DataError("kg_observed or kg_full is required");
  return g;
}

std::unique_ptr<TruthProvider> make_provider(const RunConfig& c, const Graphs& g) {
  if (c.provider == "exact") {
    if (c.exact_graph == "full" && !g.full) throw DataError("exact_graph 'full' needs kg_full");
    return std::make_unique<ExactProvider>(c.exact_graph == "full" ? *g.full : g.main(), c.epsilon);
  }
  if (c.score_file.empty()) throw DataError("calibrated provider needs score_file");
  if (!fs::exists(c.score_file)) throw DataError("score file not found: " + c.score_file);
  CalibrationOptions opts;
  opts.mode = c.calibration == "ratio_of_sums" ? Calibration::ratio_of_sums : Calibration::log_scale;
  return build_cache(g.main(), c.score_file, c.cache_file, c.relation_tail_file, opts);
}

SearchOptions search_options(const RunConfig& c, std::size_t n) {
  SearchOptions o;
  o.k_x = std::min(c.k_x.value_or(n), n);
  o.k_y = std::min(c.k_y.value_or(n), n);
  o.engine.kind = parse_tnorm(c.tnorm);
  o.engine.block_size = c.block_size;
  o.engine.workers = c.workers;
  return o;
}

unsigned resolved_workers(unsigned w) { return w != 0 ? w : std::max(1u, std::thread::hardware_concurrency()); }

std::vector<QueryTemplate> read_templates(const std::string& path) {
  if (path.empty()) throw DataError("templates is required");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_catalog(in);
}

std::vector<QueryInstance> read_dataset(const std::string& path) {
  if (path.empty()) throw DataError("dataset is required");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_instances(in);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

fs::path run_dir(const RunConfig& c) {
  fs::path d(c.out_dir);
  fs::create_directories(d);
  return d;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c, const KnowledgeGraph& g) {
  json m;
  m["command"] = command;
  m["config"] = c;
  m["entities"] = g.num_entities();
  m["base_relations"] = g.num_base_relations();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Resolved copy with k_x, k_y and workers made explicit.
RunConfig resolve(RunConfig c, std::size_t n) {
  c.k_x = std::min(c.k_x.value_or(n), n);
  c.k_y = std::min(c.k_y.value_or(n), n);
  c.workers = resolved_workers(c.workers);
  return c;
}

// ---------------------------------------------------------------------------

int cmd_answer(RunConfig c, const std::string& formula) {
  auto g = load_graphs(c, false);
  const auto& kg = g.main();
  c = resolve(c, kg.num_entities());
  auto p = make_provider(c, g);
  auto f = parse_formula(formula, kg);
  auto opts = search_options(c, kg.num_entities());
  opts.engine.record_witnesses = c.witnesses;
  std::optional<SearchGlobalScorer> gs;
  if (c.global_rankings) gs.emplace(*p, *c.k_x, opts.engine.kind);
  auto r = answer_formula(f, *p, opts, gs ? &*gs : nullptr);

  std::vector<std::size_t> order(r.domain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return r.scores[a] > r.scores[b]; });
  order.resize(std::min(order.size(), c.top_n));
  const auto& sym = kg.symbols();
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    auto i = order[rank];
    std::cout << rank + 1 << '\t' << sym.entity_name(r.domain[i]) << '\t' << num(r.scores[i]);
    if (c.witnesses && !r.witnesses.empty()) {
      std::cout << '\t';
      for (std::size_t v = 0; v < r.witness_variables.size(); ++v)
        std::cout << (v ? "," : "") << r.witness_variables[v] << '=' << sym.entity_name(r.witnesses[i][v]);
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_build_cache(RunConfig c, const std::string& output) {
  auto g = load_graphs(c, false);
  const auto& kg = g.main();
  if (c.score_file.empty()) throw DataError("score_file is required");
  if (!fs::exists(c.score_file)) throw DataError("score file not found: " + c.score_file);
  std::string target = output.empty() ? c.cache_file : output;
  if (target.empty()) throw DataError("no cache output path (cache_file or --output)");
  c.cache_file.clear();
  c.provider = "calibrated";
  auto p = make_provider(c, g);
  std::ofstream out(target, std::ios::binary);
  if (!out) throw DataError("cannot write " + target);
  write_cache(out, dynamic_cast<const CalibratedProvider&>(*p), kg);
  std::cout << "cache " << target << ": " << kg.num_entities() << " entities x " << kg.num_base_relations()
            << " relations\n";
  return 0;
}

int cmd_sample(RunConfig c) {
  auto g = load_graphs(c, true);
  if (!g.observed) throw DataError("kg_observed is required");
  auto catalog = read_templates(c.templates);
  std::vector<const QueryTemplate*> chosen;
  if (c.types.empty()) {
    for (const auto& t : catalog) chosen.push_back(&t);
  } else {
    for (const auto& name : c.types) {
      auto t = find_template(catalog, name);
      if (!t) throw DataError("unknown template '" + name + "'");
      chosen.push_back(t);
    }
  }
  std::vector<QueryInstance> all;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    try {
      auto qs = sample_queries(*chosen[i], *g.observed, *g.full, c.queries_per_template, c.seed + i);
      all.insert(all.end(), qs.begin(), qs.end());
    } catch (const UnsupportedQuery& e) {
      if (!c.types.empty()) throw;
      std::cerr << "skipping " << chosen[i]->name << ": " << e.what() << '\n';
    }
  }
  auto dir = run_dir(c);
  std::ostringstream out;
  write_instances(out, all);
  write_text(dir / "queries.jsonl", out.str());
  write_manifest(dir, "sample", resolve(c, g.full->num_entities()), *g.full);
  std::cout << all.size() << " queries written to " << (dir / "queries.jsonl").string() << '\n';
  return 0;
}

// Oracle ranking of one formula: per-conjunct brute force joined by the
// t-conorm.
std::vector<double> oracle_scores(const EFO1Formula& f, const TruthProvider& p, TNormKind kind) {
  std::vector<double> out;
  for (const auto& q : f.conjuncts) {
    auto bf = brute_force(q, p, kind);
    if (out.empty())
      out = bf.optimum;
    else
      for (std::size_t e = 0; e < out.size(); ++e) out[e] = tconorm(out[e], bf.optimum[e], kind);
  }
  return out;
}

int cmd_benchmark(RunConfig c, bool oracle_check) {
  auto g = load_graphs(c, false);
  const auto& kg = g.main();
  auto instances = read_dataset(c.dataset);
  if (instances.empty()) throw DataError("dataset is empty");
  auto p = make_provider(c, g);
  const auto n = kg.num_entities();
  auto opts = search_options(c, n);
  std::optional<SearchGlobalScorer> gs;
  if (c.global_rankings) gs.emplace(*p, opts.k_x, opts.engine.kind);
  std::function<const GlobalScorer*(const QueryInstance&)> global;
  std::optional<PrecomputedRankings> pre;
  std::map<std::string, PrecomputedScorer> pre_scorers;
  if (!c.global_rankings_file.empty()) {
    std::ifstream in(c.global_rankings_file);
    if (!in) throw DataError("cannot open " + c.global_rankings_file);
    pre = PrecomputedRankings::load(in, n);
    for (const auto& inst : instances) pre_scorers.emplace(inst.id, PrecomputedScorer(*pre, inst.id));
    global = [&](const QueryInstance& q) -> const GlobalScorer* { return &pre_scorers.at(q.id); };
  } else if (gs) {
    global = [&](const QueryInstance&) -> const GlobalScorer* { return &*gs; };
  }

  std::vector<EFO1Formula> formulas;
  for (const auto& inst : instances) formulas.push_back(parse_formula(inst.formula, kg));
  auto outcomes = evaluate(instances, kg, *p, opts, global);
  auto report = report_of(outcomes);

  auto dir = run_dir(c);
  auto resolved = resolve(c, n);
  write_manifest(dir, oracle_check ? "benchmark --oracle-check" : "benchmark", resolved, kg);
  auto metrics = report.to_json();
  metrics["domain"] = {{"k_x", opts.k_x}, {"k_y", opts.k_y}, {"entities", n}};
  metrics["queries"] = instances.size();
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "metrics.txt", report.to_table());

  std::ostringstream tsv;
  tsv << "id\ttype\tmrr\thit@1\thit@3\thit@10";
  if (oracle_check) tsv << "\toracle_mrr\toracle_max_gap\toracle_agree";
  tsv << '\n';
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    tsv << o.id << '\t' << o.type << '\t' << num(o.m.mrr) << '\t' << num(o.m.hit1) << '\t' << num(o.m.hit3) << '\t'
        << num(o.m.hit10);
    if (oracle_check) {
      std::vector<double> oracle;
      try {
        oracle = oracle_scores(formulas[i], *p, opts.engine.kind);
      } catch (const std::length_error&) {
        throw DataError("--oracle-check needs a tiny graph; brute force over query " + o.id + " is too large");
      }
      auto engine = answer_formula(formulas[i], *p, opts, global ? global(instances[i]) : nullptr).dense(n);
      double gap = 0.0;
      for (std::size_t e = 0; e < n; ++e) gap = std::max(gap, std::abs(oracle[e] - engine[e]));
      auto rr = score_ranking(oracle, instances[i]);
      tsv << '\t' << num(summarize(rr).mrr) << '\t' << num(gap) << '\t' << (gap <= 1e-9 ? 1 : 0);
    }
    tsv << '\n';
  }
  write_text(dir / "queries.tsv", tsv.str());

  // Throughput, single-threaded over the queries of each type.
  std::map<std::string, std::vector<std::size_t>> by_type;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!by_type.count(instances[i].type)) order.push_back(instances[i].type);
    by_type[instances[i].type].push_back(i);
  }
  json timing;
  timing["repetitions"] = c.qps_repetitions;
  timing["workers"] = resolved.workers;
  double total_qps = 0.0;
  for (const auto& t : order) {
    std::vector<QueryInstance> subset;
    for (auto i : by_type[t]) subset.push_back(instances[i]);
    std::map<std::string, const EFO1Formula*> parsed;
    for (auto i : by_type[t]) parsed[instances[i].id] = &formulas[i];
    double qps = measure_qps(
        [&](const QueryInstance& q) { answer_formula(*parsed[q.id], *p, opts, global ? global(q) : nullptr); },
        subset, c.qps_repetitions);
    timing["qps"][t] = qps;
    total_qps += qps;
  }
  timing["qps_average"] = total_qps / static_cast<double>(order.size());
  write_text(dir / "timing.json", timing.dump(2) + "\n");

  std::cout << report.to_table();
  std::cout << "run directory: " << dir.string() << '\n';
  return 0;
}

// Classical answers by brute force over the exact provider against the
// traversal search, plus the engine's scores against the brute-force optimum.
int cmd_oracle_check(RunConfig c) {
  auto g = load_graphs(c, false);
  const auto& kg = g.main();
  const auto& truth_graph = g.full ? *g.full : kg;
  auto instances = read_dataset(c.dataset);
  auto p = make_provider(c, g);
  ExactProvider exact(truth_graph, 0.0);
  const auto n = kg.num_entities();
  auto opts = search_options(c, n);
  std::ostringstream tsv;
  tsv << "id\ttype\ttraversal_answers\tbrute_force_answers\tanswers_agree\tengine_max_excess\tengine_exact\n";
  std::size_t disagreements = 0;
  for (const auto& inst : instances) {
    auto f = parse_formula(inst.formula, kg);
    std::set<EntityId> bf;
    try {
      auto opt = oracle_scores(f, exact, TNormKind::Product);
      for (EntityId e = 0; e < n; ++e)
        if (opt[e] == 1.0) bf.insert(e);
      auto oracle = oracle_scores(f, *p, opts.engine.kind);
      auto engine = answer_formula(f, *p, opts).dense(n);
      double excess = 0.0, gap = 0.0;
      for (EntityId e = 0; e < n; ++e) {
        excess = std::max(excess, engine[e] - oracle[e]);
        gap = std::max(gap, std::abs(engine[e] - oracle[e]));
      }
      auto trav = traversal_answers(f, truth_graph);
      bool agree = trav == bf && excess <= 1e-9;
      disagreements += !agree;
      tsv << inst.id << '\t' << inst.type << '\t' << trav.size() << '\t' << bf.size() << '\t' << (trav == bf ? 1 : 0)
          << '\t' << num(std::max(excess, 0.0)) << '\t' << (gap <= 1e-9 ? 1 : 0) << '\n';
    } catch (const std::length_error&) {
      throw DataError("oracle-check needs a tiny graph; brute force over query " + inst.id + " is too large");
    }
  }
  auto dir = run_dir(c);
  write_manifest(dir, "oracle-check", resolve(c, n), kg);
  write_text(dir / "oracle.tsv", tsv.str());
  std::cout << instances.size() - disagreements << "/" << instances.size() << " queries agree\n";
  return disagreements == 0 ? 0 : 1;
}

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  try {
    c = j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad config value: ") + e.what(), 0);
  }
  // relative paths are taken from the config file's directory
  auto base = fs::absolute(path).parent_path();
  for (auto* f : {&c.kg_full, &c.kg_observed, &c.score_file, &c.cache_file, &c.relation_tail_file, &c.templates,
                  &c.dataset, &c.out_dir, &c.global_rankings_file})
    if (!f->empty() && fs::path(*f).is_relative()) *f = (base / *f).lexically_normal().string();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-symbolic query answering over knowledge graphs"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;

  auto* answer = app.add_subcommand("answer", "Answer one formula and print the top answers");
  std::string formula;
  answer->add_option("formula", formula, "EFO1 formula over the free variable y")->required();
  answer->add_option("--top-n", o.top_n, "Number of answers to print");
  answer->add_flag("--witnesses", o.witnesses, "Print witness assignments");
  add_common(answer, o, config_path);

  auto* bench = app.add_subcommand("benchmark", "Score a query dataset and write a report");
  bool oracle_check = false;
  bench->add_option("--dataset", o.dataset, "Query instances (JSON lines)");
  bench->add_option("--qps-repetitions", o.qps_repetitions, "Timed passes per query type");
  bench->add_flag("--oracle-check", oracle_check, "Add brute-force oracle columns per query");
  add_common(bench, o, config_path);

  auto* sample = app.add_subcommand("sample", "Sample query instances from templates");
  sample->add_option("--templates", o.templates, "Template catalog");
  sample->add_option("--types", o.types, "Templates to sample (default: all)");
  sample->add_option("-n,--queries-per-template", o.queries_per_template, "Instances per template");
  add_common(sample, o, config_path);

  auto* cache = app.add_subcommand("build-cache", "Precompute the calibration normalizers");
  std::string cache_out;
  cache->add_option("-o,--output", cache_out, "Cache file to write");
  add_common(cache, o, config_path);

  auto* check = app.add_subcommand("oracle-check", "Compare engine and oracles on a small dataset");
  check->add_option("--dataset", o.dataset, "Query instances (JSON lines)");
  add_common(check, o, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto c = load_config(config_path);
    o.apply(c);
    validate(c);
    if (*answer) return cmd_answer(c, formula);
    if (*bench) return cmd_benchmark(c, oracle_check);
    if (*sample) return cmd_sample(c);
    if (*cache) return cmd_build_cache(c, cache_out);
    if (*check) return cmd_oracle_check(c);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
