#include "recognn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace recognn {

using json = nlohmann::json;

std::string to_string(MiningMode m) {
  switch (m) {
    case MiningMode::graph: return "graph";
    case MiningMode::random_grouping: return "random_grouping";
    case MiningMode::no_mining_whole_tuple: return "no_mining_whole_tuple";
    case MiningMode::no_mining_per_attribute: return "no_mining_per_attribute";
  }
  return "?";
}

MiningMode parse_mining_mode(const std::string& s) {
  for (auto m : {MiningMode::graph, MiningMode::random_grouping, MiningMode::no_mining_whole_tuple,
                 MiningMode::no_mining_per_attribute})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown mining mode: " + s);
}

// ---------------------------------------------------------------------------
// config

namespace {

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw ConfigError("unknown config key: " + (where.empty() ? k : where + "." + k));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  allow_keys(j, "", {"version", "dataset", "descriptor", "out", "seed", "join", "coreset", "encoder",
                     "stage1", "subtables", "similarity", "split", "stage2"});
  PipelineConfig c;
  int version = kVersion;
  read(j, "version", version, "");
  if (version != kVersion) throw ConfigError("unsupported config version " + std::to_string(version));
  read(j, "dataset", c.dataset, "");
  read(j, "descriptor", c.descriptor, "");
  read(j, "out", c.out, "");
  read(j, "seed", c.seed, "");

  const auto& jj = section(j, "join");
  allow_keys(jj, "join", {"alpha", "beta"});
  read(jj, "alpha", c.join.alpha, "join");
  read(jj, "beta", c.join.beta, "join");

  const auto& jc = section(j, "coreset");
  allow_keys(jc, "coreset", {"samples", "cap"});
  if (jc.contains("samples")) {
    const auto& s = jc.at("samples");
    if (s.is_number_unsigned()) c.coreset_samples = s.get<std::size_t>();
    else if (s.is_number_float()) c.coreset_samples = s.get<double>();
    else throw ConfigError("coreset.samples must be a count or a fraction");
  }
  read(jc, "cap", c.link_cap, "coreset");

  const auto& je = section(j, "encoder");
  allow_keys(je, "encoder", {"d_num", "d_cat", "d_text", "d_out"});
  read(je, "d_num", c.encoder.d_num, "encoder");
  read(je, "d_cat", c.encoder.d_cat, "encoder");
  read(je, "d_text", c.encoder.d_text, "encoder");
  read(je, "d_out", c.encoder.d_out, "encoder");

  const auto& j1 = section(j, "stage1");
  allow_keys(j1, "stage1", {"d_hidden", "batch_size", "epochs", "learning_rate", "leaky_slope"});
  read(j1, "d_hidden", c.stage1.d_hidden, "stage1");
  read(j1, "batch_size", c.stage1.batch_size, "stage1");
  read(j1, "epochs", c.stage1.epochs, "stage1");
  read(j1, "learning_rate", c.stage1.learning_rate, "stage1");
  read(j1, "leaky_slope", c.stage1.leaky_slope, "stage1");

  const auto& js = section(j, "subtables");
  allow_keys(js, "subtables", {"ell", "grouping", "keep_singletons", "mining"});
  read(js, "ell", c.ell, "subtables");
  if (js.contains("grouping")) {
    try {
      c.grouping = parse_grouping_method(js.at("grouping").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("subtables.grouping: ") + e.what());
    }
  }
  read(js, "keep_singletons", c.keep_singletons, "subtables");
  if (js.contains("mining")) c.mining = parse_mining_mode(js.at("mining").get<std::string>());

  const auto& jm = section(j, "similarity");
  allow_keys(jm, "similarity", {"enabled", "mode", "k", "theta"});
  read(jm, "enabled", c.similarity_edges, "similarity");
  if (jm.contains("mode")) {
    auto mode = jm.at("mode").get<std::string>();
    if (mode == "topk") c.similarity.mode = SimilarityConfig::Mode::topk;
    else if (mode == "threshold") c.similarity.mode = SimilarityConfig::Mode::threshold;
    else throw ConfigError("similarity.mode must be topk or threshold");
  }
  read(jm, "k", c.similarity.k, "similarity");
  read(jm, "theta", c.similarity.theta, "similarity");

  const auto& jp = section(j, "split");
  allow_keys(jp, "split", {"train", "val"});
  read(jp, "train", c.split.train, "split");
  read(jp, "val", c.split.val, "split");

  const auto& j2 = section(j, "stage2");
  allow_keys(j2, "stage2", {"d_model", "layers", "epochs", "learning_rate", "leaky_slope", "uniform_attention"});
  read(j2, "d_model", c.stage2.d_model, "stage2");
  read(j2, "layers", c.stage2.layers, "stage2");
  read(j2, "epochs", c.stage2.epochs, "stage2");
  read(j2, "learning_rate", c.stage2.learning_rate, "stage2");
  read(j2, "leaky_slope", c.stage2.leaky_slope, "stage2");
  read(j2, "uniform_attention", c.stage2.uniform_attention, "stage2");

  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json PipelineConfig::to_json() const {
  json j;
  j["version"] = kVersion;
  j["dataset"] = dataset;
  j["descriptor"] = descriptor;
  j["out"] = out;
  j["seed"] = seed;
  j["join"] = {{"alpha", join.alpha}, {"beta", join.beta}};
  if (auto n = std::get_if<std::size_t>(&coreset_samples)) j["coreset"]["samples"] = *n;
  else j["coreset"]["samples"] = std::get<double>(coreset_samples);
  j["coreset"]["cap"] = link_cap;
  j["encoder"] = {{"d_num", encoder.d_num}, {"d_cat", encoder.d_cat}, {"d_text", encoder.d_text},
                  {"d_out", encoder.d_out}};
  j["stage1"] = {{"d_hidden", stage1.d_hidden}, {"batch_size", stage1.batch_size}, {"epochs", stage1.epochs},
                 {"learning_rate", stage1.learning_rate}, {"leaky_slope", stage1.leaky_slope}};
  j["subtables"] = {{"ell", ell}, {"grouping", to_string(grouping)}, {"keep_singletons", keep_singletons},
                    {"mining", to_string(mining)}};
  j["similarity"] = {{"enabled", similarity_edges},
                     {"mode", similarity.mode == SimilarityConfig::Mode::topk ? "topk" : "threshold"},
                     {"k", similarity.k},
                     {"theta", similarity.theta}};
  j["split"] = {{"train", split.train}, {"val", split.val}};
  j["stage2"] = {{"d_model", stage2.d_model}, {"layers", stage2.layers}, {"epochs", stage2.epochs},
                 {"learning_rate", stage2.learning_rate}, {"leaky_slope", stage2.leaky_slope},
                 {"uniform_attention", stage2.uniform_attention}};
  return j;
}

void PipelineConfig::validate() const {
  try {
    join.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  auto positive = [](double v) { return v > 0.0; };
  if (encoder.d_num <= 0 || encoder.d_cat <= 0 || encoder.d_text <= 0 || encoder.d_out <= 0)
    throw ConfigError("encoder dimensions must be positive");
  if (stage1.d_hidden <= 0 || stage1.batch_size == 0 || !positive(stage1.learning_rate))
    throw ConfigError("stage1: d_hidden, batch_size and learning_rate must be positive");
  if (!(ell >= 0.0 && ell <= 1.0)) throw ConfigError("subtables.ell must be in [0, 1]");
  if (similarity.mode == SimilarityConfig::Mode::topk && similarity.k == 0)
    throw ConfigError("similarity.k must be positive");
  if (split.train <= 0.0 || split.val < 0.0 || split.train + split.val >= 1.0)
    throw ConfigError("split: need train > 0, val >= 0 and train + val < 1");
  if (stage2.d_model <= 0 || stage2.layers <= 0 || !positive(stage2.learning_rate))
    throw ConfigError("stage2: d_model, layers and learning_rate must be positive");
  if (auto f = std::get_if<double>(&coreset_samples); f && !(*f > 0.0 && *f <= 1.0))
    throw ConfigError("coreset.samples as a fraction must be in (0, 1]");
}

// ---------------------------------------------------------------------------
// stages

std::vector<std::string> aux_tables(const std::map<std::string, MetaPath>& paths) {
  std::vector<std::string> out;
  for (const auto& [name, path] : paths)
    if (!path.hops.empty()) out.push_back(name);
  return out;
}

std::map<std::string, MetaPath> plan_meta_paths(const RelationalDataset& ds, const PipelineConfig& cfg) {
  return find_meta_paths(build_join_graph(ds), cfg.join);
}

Coreset link_and_sample(const RelationalDataset& ds, const std::map<std::string, MetaPath>& paths,
                        const PipelineConfig& cfg) {
  std::map<std::string, std::vector<LabeledTuple>> links;
  for (const auto& name : aux_tables(paths))
    links[name] = link_tuples(ds, paths.at(name), {cfg.link_cap, cfg.stage_seed("link." + name)});
  CoresetConfig cc{cfg.coreset_samples, cfg.link_cap, cfg.stage_seed("coreset")};
  return build_coreset(ds, links, cc);
}

Stage1Output run_stage1(const RelationalDataset& ds, const Coreset& coreset, const PipelineConfig& cfg) {
  Stage1Output out;
  const int outputs = ds.task().task == TaskKind::classification ? ds.class_count() : 1;
  for (const auto& [name, links] : coreset.links) {
    const auto& table = ds.table(name);
    auto columns = ds.feature_columns(name);
    if (columns.size() < 2 || links.empty()) {
      warn("stage 1 skips table " + name +
           (columns.size() < 2 ? ": fewer than two attributes" : ": no linked tuples"));
      out.skipped.push_back(name);
      continue;
    }
    Stage1Model model{TableEncoder::create(table, columns, cfg.encoder, cfg.stage_seed("encoder." + name)),
                      GatParams::create(cfg.encoder.d_out, cfg.stage1.d_hidden, outputs, cfg.stage1.leaky_slope,
                                        cfg.stage_seed("gat." + name))};
    std::vector<TupleGraph> graphs;
    graphs.reserve(links.size());
    for (const auto& lt : links) graphs.push_back(build_tuple_graph(lt, ds, model.encoder));
    GatConfig gc = cfg.stage1;
    gc.seed = cfg.stage_seed("stage1." + name);
    auto result = stage1_train(ds, std::move(graphs), std::move(model), gc);
    out.encoders[name] = std::move(result.model.encoder);
    out.records[name] = std::move(result.records);
    out.epoch_loss[name] = std::move(result.epoch_loss);
  }
  return out;
}

std::map<std::string, CumulativeAttention> accumulate_all(const Stage1Output& s1) {
  std::map<std::string, CumulativeAttention> out;
  for (const auto& [name, records] : s1.records)
    if (!records.empty()) out[name] = accumulate(records);
  return out;
}

SubTableManifest random_pairs(const RelationalDataset& ds, const std::string& table, std::uint64_t seed) {
  const auto& t = ds.table(table);
  std::vector<std::size_t> cols = ds.feature_columns(table);
  Rng rng(seed);
  shuffle(cols, rng);
  SubTableManifest m;
  m.table = table;
  m.threshold = 0.0;
  for (std::size_t i = 0; i + 1 < cols.size(); i += 2) {
    std::vector<std::size_t> group{cols[i], cols[i + 1]};
    if (cols.size() % 2 == 1 && i + 3 == cols.size()) group.push_back(cols[i + 2]);
    std::sort(group.begin(), group.end());
    std::vector<std::string> names;
    for (auto c : group) names.push_back(t.columns()[c].name);
    m.groups.push_back(std::move(names));
  }
  std::sort(m.groups.begin(), m.groups.end(), [&](const auto& a, const auto& b) {
    return t.require_column(a.front()) < t.require_column(b.front());
  });
  return m;
}

std::map<std::string, SubTableManifest> mine_subtables(const RelationalDataset& ds,
                                                       const std::vector<std::string>& tables,
                                                       const Stage1Output& s1, const PipelineConfig& cfg) {
  std::map<std::string, SubTableManifest> out;
  for (const auto& name : tables) {
    SubTableManifest m;
    m.table = name;
    m.method = cfg.grouping;
    m.threshold = cfg.ell;
    switch (cfg.mining) {
      case MiningMode::graph: {
        auto it = s1.records.find(name);
        if (it == s1.records.end() || it->second.empty()) break;
        auto edges = select_edges(accumulate(it->second), cfg.ell);
        CliqueOptions opt{cfg.keep_singletons};
        m = cfg.grouping == GroupingMethod::maximal_clique ? extract_cliques(edges, opt)
                                                           : extract_communities_gn(edges, opt);
        break;
      }
      case MiningMode::random_grouping:
        m = random_pairs(ds, name, cfg.stage_seed("random_grouping." + name));
        break;
      case MiningMode::no_mining_whole_tuple:
        break;
      case MiningMode::no_mining_per_attribute: {
        const auto& t = ds.table(name);
        for (auto c : ds.feature_columns(name)) m.groups.push_back({t.columns()[c].name});
        break;
      }
    }
    out[name] = std::move(m);
  }
  return out;
}

EncoderBank complete_encoders(const RelationalDataset& ds, const EncoderBank& trained, const PipelineConfig& cfg) {
  EncoderBank bank;
  for (const auto& table : ds.tables()) {
    auto it = trained.find(table.name());
    if (it != trained.end()) {
      bank[table.name()] = it->second;
    } else {
      bank[table.name()] = TableEncoder::create(table, ds.feature_columns(table.name()), cfg.encoder,
                                                cfg.stage_seed("encoder." + table.name()));
    }
  }
  return bank;
}

HeteroGraph build_graph(const RelationalDataset& ds, const std::vector<TableLayout>& layouts,
                        const EncoderBank& encoders, const PipelineConfig& cfg) {
  auto nodes = build_nodes(ds, layouts, encoders);
  auto edges = build_join_edges(ds, nodes);
  if (cfg.similarity_edges) {
    auto sim = build_similarity_edges(nodes, cfg.similarity);
    edges.insert(edges.end(), sim.begin(), sim.end());
  }
  SplitConfig sc = cfg.split;
  sc.seed = cfg.stage_seed("split");
  return assemble(nodes, edges, ds, sc);
}

MetricSet split_metrics(const HeteroGraph& g, const Eigen::MatrixXd& predictions, Split s) {
  auto nodes = g.base_nodes(s);
  if (nodes.empty()) {
    MetricSet empty;
    empty.task = g.task;
    return empty;
  }
  Eigen::MatrixXd p(static_cast<Eigen::Index>(nodes.size()), predictions.cols());
  std::vector<double> labels;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    p.row(static_cast<Eigen::Index>(i)) = predictions.row(static_cast<Eigen::Index>(nodes[i]));
    labels.push_back(g.labels[nodes[i]]);
  }
  return compute_metrics(p, labels, g.task);
}

Stage2Output run_stage2(const HeteroGraph& g, const PipelineConfig& cfg) {
  Stage2Output out;
  HgnnConfig hc = cfg.stage2;
  hc.seed = cfg.stage_seed("stage2");
  out.training = stage2_train(g, hc);
  out.report = feature_selection_report(g, out.training.importance);
  std::vector<std::size_t> all(g.base_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.predictions = predict(g, out.training.params, all);
  out.test = split_metrics(g, out.predictions, Split::test);
  out.val = split_metrics(g, out.predictions, Split::val);
  return out;
}

RunResult run_pipeline(const RelationalDataset& ds, const PipelineConfig& cfg) {
  cfg.validate();
  RunResult r;
  r.paths = plan_meta_paths(ds, cfg);
  auto tables = aux_tables(r.paths);
  // Stage 1 runs for every mining mode so all arms share trained encoders.
  r.stage1 = run_stage1(ds, link_and_sample(ds, r.paths, cfg), cfg);
  r.manifests = mine_subtables(ds, tables, r.stage1, cfg);
  auto encoders = complete_encoders(ds, r.stage1.encoders, cfg);
  r.graph = build_graph(ds, layouts_from_manifests(ds, tables, r.manifests), encoders, cfg);
  r.stage2 = run_stage2(r.graph, cfg);
  return r;
}

}  // namespace recognn
