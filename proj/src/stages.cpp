#include "recognn/stages.hpp"

#include <fstream>
#include <iostream>

#include "recognn/binio.hpp"
#include "recognn/csv.hpp"

namespace recognn {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path out_dir(const PipelineConfig& cfg) { return fs::path(cfg.out); }

fs::path require(const PipelineConfig& cfg, const char* rel, const char* stage) {
  auto p = out_dir(cfg) / rel;
  if (!fs::exists(p)) throw MissingArtifact(p.string(), stage);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  json j;
  in >> j;
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

RelationalDataset load(const PipelineConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset path configured");
  return load_dataset(cfg.dataset, cfg.descriptor);
}

LinkType parse_link_type(const std::string& s) {
  for (auto t : {LinkType::one_to_one, LinkType::one_to_many, LinkType::many_to_one})
    if (to_string(t) == s) return t;
  throw std::runtime_error("unknown link type: " + s);
}

}  // namespace

// ---------------------------------------------------------------------------
// serialization

json meta_paths_to_json(const std::map<std::string, MetaPath>& paths) {
  json j = json::object();
  for (const auto& [name, p] : paths) {
    json hops = json::array();
    for (const auto& h : p.hops)
      hops.push_back({{"src", h.src_table}, {"dst", h.dst_table}, {"fk_table", h.fk_table},
                      {"fk_column", h.fk_column}, {"pk_column", h.pk_column},
                      {"link_type", to_string(h.link_type)}, {"avg_fanout", h.avg_fanout}});
    j[name] = {{"hops", hops}, {"length_score", p.length_score}, {"direction_score", p.direction_score},
               {"score", p.score}};
  }
  return j;
}

std::map<std::string, MetaPath> meta_paths_from_json(const json& j) {
  std::map<std::string, MetaPath> out;
  for (const auto& [name, jp] : j.items()) {
    MetaPath p;
    p.target_table = name;
    for (const auto& h : jp.at("hops"))
      p.hops.push_back({h.at("src"), h.at("dst"), h.at("fk_table"), h.at("fk_column"), h.at("pk_column"),
                        parse_link_type(h.at("link_type")), h.at("avg_fanout")});
    p.length_score = jp.at("length_score");
    p.direction_score = jp.at("direction_score");
    p.score = jp.at("score");
    out[name] = std::move(p);
  }
  return out;
}

json coreset_to_json(const Coreset& c) {
  json j;
  j["base_rows"] = c.base_rows;
  j["clamped"] = c.clamped;
  j["links"] = json::object();
  for (const auto& [name, links] : c.links) {
    json arr = json::array();
    for (const auto& l : links)
      arr.push_back({l.key, l.row, l.base_key, l.base_row, l.label});
    j["links"][name] = std::move(arr);
  }
  return j;
}

Coreset coreset_from_json(const json& j) {
  Coreset c;
  c.base_rows = j.at("base_rows").get<std::vector<std::size_t>>();
  c.clamped = j.at("clamped");
  for (const auto& [name, arr] : j.at("links").items()) {
    auto& v = c.links[name];
    for (const auto& l : arr)
      v.push_back({name, l.at(0), l.at(1), l.at(2), l.at(3), l.at(4)});
  }
  return c;
}

json manifests_to_json(const std::map<std::string, SubTableManifest>& m) {
  json j = json::object();
  for (const auto& [name, man] : m)
    j[name] = {{"method", to_string(man.method)}, {"threshold", man.threshold}, {"groups", man.groups}};
  return j;
}

std::map<std::string, SubTableManifest> manifests_from_json(const json& j) {
  std::map<std::string, SubTableManifest> out;
  for (const auto& [name, jm] : j.items()) {
    SubTableManifest m;
    m.table = name;
    m.method = parse_grouping_method(jm.at("method"));
    m.threshold = jm.at("threshold");
    m.groups = jm.at("groups").get<std::vector<std::vector<std::string>>>();
    out[name] = std::move(m);
  }
  return out;
}

void save_records(const std::map<std::string, std::vector<AttentionRecord>>& records, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  binio::Writer w(out);
  w.magic("recognn.records", 1);
  w.u64(records.size());
  for (const auto& [name, recs] : records) {
    w.str(name);
    w.u64(recs.size());
    for (const auto& r : recs) {
      w.str(r.key);
      w.u64(r.nodes.size());
      for (const auto& n : r.nodes) w.str(n);
      w.matrix(r.weights);
      w.u64(r.params_version);
    }
  }
}

std::map<std::string, std::vector<AttentionRecord>> load_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  binio::Reader r(in);
  r.magic("recognn.records");
  std::map<std::string, std::vector<AttentionRecord>> out;
  auto tables = r.u64();
  for (std::uint64_t t = 0; t < tables; ++t) {
    auto name = r.str();
    auto& recs = out[name];
    recs.resize(r.u64());
    for (auto& rec : recs) {
      rec.table = name;
      rec.key = r.str();
      rec.nodes.resize(r.u64());
      for (auto& n : rec.nodes) n = r.str();
      rec.weights = r.matrix();
      rec.params_version = r.u64();
    }
  }
  return out;
}

void write_predictions(const fs::path& path, const HeteroGraph& g, const Eigen::MatrixXd& predictions,
                       const std::vector<std::string>& class_tokens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  csv::Row header{"key", "split", "prediction"};
  const bool classification = g.task == TaskKind::classification;
  if (classification)
    for (Eigen::Index c = 0; c < predictions.cols(); ++c)
      header.push_back("prob_" + (static_cast<std::size_t>(c) < class_tokens.size()
                                      ? class_tokens[static_cast<std::size_t>(c)]
                                      : std::to_string(c)));
  csv::write_row(out, header);
  for (std::size_t i = 0; i < g.base_count(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    csv::Row row{g.keys[0][i], to_string(g.split[i])};
    if (classification) {
      Eigen::Index arg;
      predictions.row(r).maxCoeff(&arg);
      auto a = static_cast<std::size_t>(arg);
      row.push_back(a < class_tokens.size() ? class_tokens[a] : std::to_string(a));
      for (Eigen::Index c = 0; c < predictions.cols(); ++c) row.push_back(format_exact(predictions(r, c)));
    } else {
      row.push_back(format_exact(predictions(r, 0)));
    }
    csv::write_row(out, row);
  }
}

// ---------------------------------------------------------------------------
// stages

void stage_ingest(const PipelineConfig& cfg) {
  auto ds = load(cfg);
  const auto& rep = ds.report();
  json j;
  j["tables"] = rep.table_count;
  j["tuples"] = json::object();
  for (const auto& [name, n] : rep.tuple_counts) j["tuples"][name] = n;
  j["dangling"] = json::array();
  for (const auto& d : rep.dangling) j["dangling"].push_back({{"table", d.table}, {"column", d.column}, {"count", d.count}});
  j["base_table"] = ds.task().base_table;
  j["target_column"] = ds.task().target_column;
  j["class_count"] = ds.class_count();
  fs::create_directories(out_dir(cfg));
  write_json(out_dir(cfg) / "config.json", cfg.to_json());
  write_json(out_dir(cfg) / artifacts::kIngest, j);
  std::clog << rep.to_text();
}

void stage_plan(const PipelineConfig& cfg) {
  require(cfg, artifacts::kIngest, "ingest");
  auto ds = load(cfg);
  auto paths = plan_meta_paths(ds, cfg);
  write_json(out_dir(cfg) / artifacts::kMetaPaths, meta_paths_to_json(paths));
  write_text(out_dir(cfg) / "meta_paths.txt", meta_paths_to_text(paths));
}

void stage_link(const PipelineConfig& cfg) {
  auto paths = meta_paths_from_json(read_json(require(cfg, artifacts::kMetaPaths, "plan")));
  auto ds = load(cfg);
  write_json(out_dir(cfg) / artifacts::kCoreset, coreset_to_json(link_and_sample(ds, paths, cfg)));
}

void stage_train_stage1(const PipelineConfig& cfg) {
  auto coreset = coreset_from_json(read_json(require(cfg, artifacts::kCoreset, "link")));
  auto ds = load(cfg);
  auto s1 = run_stage1(ds, coreset, cfg);
  fs::create_directories(out_dir(cfg) / "stage1");
  save_encoder_bank(s1.encoders, (out_dir(cfg) / artifacts::kEncoders).string());
  save_records(s1.records, out_dir(cfg) / artifacts::kRecords);
  json summary;
  summary["epoch_loss"] = s1.epoch_loss;
  summary["skipped"] = s1.skipped;
  write_json(out_dir(cfg) / "stage1/summary.json", summary);
  std::string text;
  for (const auto& [name, ca] : accumulate_all(s1)) text += name + "\n" + top_pairs_report(ca) + "\n";
  write_text(out_dir(cfg) / "stage1/attention.txt", text);
}

void stage_split(const PipelineConfig& cfg) {
  auto records_path = require(cfg, artifacts::kRecords, "train-stage1");
  auto paths = meta_paths_from_json(read_json(require(cfg, artifacts::kMetaPaths, "plan")));
  auto ds = load(cfg);
  Stage1Output s1;
  s1.records = load_records(records_path);
  auto manifests = mine_subtables(ds, aux_tables(paths), s1, cfg);
  write_json(out_dir(cfg) / artifacts::kManifests, manifests_to_json(manifests));
}

void stage_build_graph(const PipelineConfig& cfg) {
  auto manifests = manifests_from_json(read_json(require(cfg, artifacts::kManifests, "split")));
  auto trained = load_encoder_bank(require(cfg, artifacts::kEncoders, "train-stage1").string());
  auto ds = load(cfg);
  std::vector<std::string> tables;
  for (const auto& [name, m] : manifests) tables.push_back(name);
  auto g = build_graph(ds, layouts_from_manifests(ds, tables, manifests), complete_encoders(ds, trained, cfg), cfg);
  auto dir = out_dir(cfg) / artifacts::kGraph;
  fs::remove_all(dir);
  save_graph(g, dir);
}

void stage_train_stage2(const PipelineConfig& cfg) {
  auto gdir = out_dir(cfg) / artifacts::kGraph;
  if (!fs::exists(gdir / "graph.json")) throw MissingArtifact((gdir / "graph.json").string(), "build-graph");
  auto g = load_graph(gdir);
  HgnnConfig hc = cfg.stage2;
  hc.seed = cfg.stage_seed("stage2");
  auto result = stage2_train(g, hc);
  result.params.save(out_dir(cfg) / artifacts::kModel);
  json tj;
  tj["train_loss"] = result.train_loss;
  tj["val_loss"] = result.val_loss;
  tj["best_epoch"] = result.best_epoch;
  write_json(out_dir(cfg) / "training.json", tj);
  auto report = feature_selection_report(g, result.importance);
  write_text(out_dir(cfg) / "feature_report.txt", report.to_text());
  write_text(out_dir(cfg) / "feature_report.json", report.to_json());
}

void stage_predict(const PipelineConfig& cfg) {
  auto model_path = require(cfg, artifacts::kModel, "train-stage2");
  auto g = load_graph(require(cfg, artifacts::kGraph, "build-graph"));
  auto params = HgnnParams::load(model_path);
  auto ds = load(cfg);
  std::vector<std::size_t> all(g.base_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  write_predictions(out_dir(cfg) / artifacts::kPredictions, g, predict(g, params, all), ds.class_tokens());
}

void stage_evaluate(const PipelineConfig& cfg) {
  auto pred_path = require(cfg, artifacts::kPredictions, "predict");
  auto g = load_graph(require(cfg, artifacts::kGraph, "build-graph"));
  auto rows = csv::read_file(pred_path);
  if (rows.size() != g.base_count() + 1) throw std::runtime_error("predictions do not match the graph's base nodes");
  const std::size_t first = 3;
  const bool classification = g.task == TaskKind::classification;
  const auto cols = classification ? rows[0].size() - first : 1;
  Eigen::MatrixXd p(static_cast<Eigen::Index>(g.base_count()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < g.base_count(); ++i) {
    const auto& row = rows[i + 1];
    if (row.at(0) != g.keys[0][i]) throw std::runtime_error("prediction rows are out of order at key " + row.at(0));
    for (std::size_t c = 0; c < cols; ++c)
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          std::stod(row.at(classification ? first + c : 2));
  }
  json j;
  for (auto s : {Split::train, Split::val, Split::test}) {
    if (g.base_nodes(s).empty()) continue;
    j[to_string(s)] = json::parse(split_metrics(g, p, s).to_json());
  }
  write_json(out_dir(cfg) / artifacts::kMetrics, j);
}

void run_all(const PipelineConfig& cfg) {
  stage_ingest(cfg);
  stage_plan(cfg);
  stage_link(cfg);
  stage_train_stage1(cfg);
  stage_split(cfg);
  stage_build_graph(cfg);
  stage_train_stage2(cfg);
  stage_predict(cfg);
  stage_evaluate(cfg);
}

}  // namespace recognn
