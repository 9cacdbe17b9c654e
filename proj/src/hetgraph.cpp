#include "recognn/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "recognn/binio.hpp"
#include "recognn/common.hpp"
#include "recognn/csv.hpp"

namespace recognn {

using json = nlohmann::json;

std::string to_string(Relation r) { return r == Relation::join ? "join" : "similarity"; }

static Relation parse_relation(const std::string& s) {
  if (s == "join") return Relation::join;
  if (s == "similarity") return Relation::similarity;
  throw std::runtime_error("unknown relation: " + s);
}

std::string EdgeTypeKey::str() const {
  return src_type + "|" + to_string(relation) + "|" + dst_type;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

static Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::runtime_error("unknown split: " + s);
}

std::size_t HeteroGraph::node_count() const {
  std::size_t n = 0;
  for (const auto& t : types) n += t.count;
  return n;
}

std::size_t HeteroGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : edge_types) n += e.size();
  return n;
}

std::vector<std::size_t> HeteroGraph::base_nodes(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

std::optional<std::size_t> HeteroGraph::type_index(const std::string& name) const {
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i].name == name) return i;
  return std::nullopt;
}

static std::vector<std::string> column_names(const RelationalDataset& ds, const std::string& table) {
  std::vector<std::string> out;
  const auto& t = ds.table(table);
  for (auto c : ds.feature_columns(table)) out.push_back(t.columns()[c].name);
  return out;
}

std::vector<TableLayout> layouts_from_manifests(
    const RelationalDataset& ds, const std::vector<std::string>& aux_tables,
    const std::map<std::string, SubTableManifest>& manifests) {
  std::vector<TableLayout> out;
  const auto& base = ds.task().base_table;
  out.push_back({base, {column_names(ds, base)}, false});
  for (const auto& name : aux_tables) {
    if (name == base) continue;
    auto it = manifests.find(name);
    if (it != manifests.end() && !it->second.unsplit()) {
      out.push_back({name, it->second.groups, true});
    } else {
      out.push_back({name, {column_names(ds, name)}, false});
    }
  }
  return out;
}

NodeSet build_nodes(const RelationalDataset& ds, const std::vector<TableLayout>& layouts,
                    const EncoderBank& encoders) {
  if (layouts.empty() || layouts[0].table != ds.task().base_table || layouts[0].groups.size() != 1)
    throw std::invalid_argument("build_nodes: first layout must be the base table, unsplit");
  NodeSet out;
  std::set<std::string> seen_tables;
  for (const auto& layout : layouts) {
    if (!seen_tables.insert(layout.table).second)
      throw std::invalid_argument("build_nodes: table listed twice: " + layout.table);
    const auto& table = ds.table(layout.table);
    auto enc_it = encoders.find(layout.table);
    if (enc_it == encoders.end())
      throw std::invalid_argument("build_nodes: no encoder for table " + layout.table);
    const auto& enc = enc_it->second;
    const bool is_base = layout.table == ds.task().base_table;

    for (std::size_t g = 0; g < layout.groups.size(); ++g) {
      NodeTypeInfo info;
      info.name = layout.split ? subtable_name(layout.table, g) : layout.table;
      info.table = layout.table;
      info.attributes = layout.groups[g];
      info.is_base = is_base;
      info.count = table.size();
      info.first_id = out.nodes.size();
      info.width = info.attributes.size() * static_cast<std::size_t>(enc.dims().d_out);

      std::vector<std::size_t> slots;
      for (const auto& a : info.attributes) {
        auto col = table.require_column(a);
        if (table.columns()[col].is_key() || (is_base && col == ds.target_index()))
          throw std::invalid_argument("build_nodes: " + a + " is not a feature column");
        slots.push_back(enc.slot_of(col));
      }
      const int d = enc.dims().d_out;
      for (std::size_t r = 0; r < table.size(); ++r) {
        HeteroNode node;
        node.id = out.nodes.size();
        node.type = out.types.size();
        node.key = table.tuples()[r].key;
        node.row = r;
        node.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(info.width));
        for (std::size_t s = 0; s < slots.size(); ++s) {
          auto col = enc.columns()[slots[s]].column;
          node.x.segment(static_cast<Eigen::Index>(s) * d, d) =
              enc.embed(slots[s], table.tuples()[r].values[col]);
        }
        if (is_base) node.label = ds.label(r);
        out.nodes.push_back(std::move(node));
      }
      out.types.push_back(std::move(info));
    }
  }
  return out;
}

std::vector<HeteroEdge> build_join_edges(const RelationalDataset& ds, const NodeSet& nodes) {
  std::map<std::string, std::vector<std::size_t>> types_of;
  for (std::size_t i = 0; i < nodes.types.size(); ++i) types_of[nodes.types[i].table].push_back(i);

  std::vector<HeteroEdge> out;
  for (const auto& table : ds.tables()) {
    auto fk_types = types_of.find(table.name());
    if (fk_types == types_of.end()) continue;
    for (std::size_t c = 0; c < table.columns().size(); ++c) {
      const auto& spec = table.columns()[c];
      if (spec.kind != ColumnKind::foreign_key || !spec.fk_target) continue;
      auto pk_types = types_of.find(spec.fk_target->table);
      if (pk_types == types_of.end()) continue;
      const auto& pk_table = ds.table(spec.fk_target->table);
      for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& cell = table.tuples()[r].values[c];
        if (is_null(cell)) continue;
        auto p = pk_table.row_of_key(cell_to_string(cell));
        if (!p) continue;
        for (auto a : fk_types->second) {
          for (auto b : pk_types->second) {
            const auto& ta = nodes.types[a];
            const auto& tb = nodes.types[b];
            std::size_t u = ta.first_id + r;
            std::size_t v = tb.first_id + *p;
            out.push_back({u, v, {ta.name, Relation::join, tb.name}, 1.0});
            out.push_back({v, u, {tb.name, Relation::join, ta.name}, 1.0});
          }
        }
      }
    }
  }
  return out;
}

std::vector<HeteroEdge> build_similarity_edges(const NodeSet& nodes, const SimilarityConfig& config) {
  if (nodes.types.empty()) return {};
  const auto& base = nodes.types[0];
  const std::size_t n = base.count;
  if (n == 0 || base.width == 0) return {};

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(base.width));
  std::vector<bool> usable(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = nodes.nodes[base.first_id + i].x;
    double norm = x.norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      X.row(static_cast<Eigen::Index>(i)) = x.transpose() / norm;
      usable[i] = true;
    } else {
      X.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  Eigen::MatrixXd S = X * X.transpose();

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t k_eff = config.k;
  if (config.mode == SimilarityConfig::Mode::topk && k_eff >= n) {
    k_eff = n - 1;
    warn("similarity K=" + std::to_string(config.k) + " >= base node count; clamped to " +
         std::to_string(k_eff));
  }
  if (config.mode == SimilarityConfig::Mode::threshold) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!usable[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (usable[j] && S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > config.theta)
          pairs.insert({i, j});
    }
  } else {
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
      if (!usable[i] || k_eff == 0) continue;
      cand.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && usable[j]) cand.push_back(j);
      auto row = static_cast<Eigen::Index>(i);
      auto better = [&](std::size_t a, std::size_t b) {
        double sa = S(row, static_cast<Eigen::Index>(a));
        double sb = S(row, static_cast<Eigen::Index>(b));
        if (sa != sb) return sa > sb;
        return a < b;
      };
      std::size_t k = std::min(k_eff, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                        better);
      for (std::size_t t = 0; t < k; ++t) pairs.insert({std::min(i, cand[t]), std::max(i, cand[t])});
    }
  }

  std::vector<HeteroEdge> out;
  out.reserve(pairs.size() * 2);
  EdgeTypeKey key{base.name, Relation::similarity, base.name};
  for (auto [i, j] : pairs) {
    out.push_back({base.first_id + i, base.first_id + j, key, 1.0});
    out.push_back({base.first_id + j, base.first_id + i, key, 1.0});
  }
  return out;
}

static std::vector<Split> stratified_split(const std::vector<double>& labels, TaskKind task,
                                           const SplitConfig& config) {
  if (config.train < 0 || config.val < 0 || config.train + config.val > 1.0)
    throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
  const std::size_t n = labels.size();
  std::map<long long, std::vector<std::size_t>> strata;
  if (task == TaskKind::classification) {
    for (std::size_t i = 0; i < n; ++i) strata[std::llround(labels[i])].push_back(i);
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    for (std::size_t r = 0; r < n; ++r)
      strata[static_cast<long long>(r * 10 / std::max<std::size_t>(n, 1))].push_back(order[r]);
  }
  std::vector<Split> out(n, Split::test);
  Rng rng(config.seed);
  for (auto& [label, members] : strata) {
    shuffle(members, rng);
    const double m = static_cast<double>(members.size());
    auto n_train = static_cast<std::size_t>(std::floor(config.train * m + 0.5));
    auto n_val = static_cast<std::size_t>(std::floor((config.train + config.val) * m + 0.5)) - n_train;
    for (std::size_t i = 0; i < members.size(); ++i)
      out[members[i]] = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
  }
  return out;
}

static void build_in_index(EdgeTypeIndex& e, std::size_t dst_count) {
  e.in_offsets.assign(dst_count + 1, 0);
  for (auto d : e.dst) ++e.in_offsets[d + 1];
  for (std::size_t i = 0; i < dst_count; ++i) e.in_offsets[i + 1] += e.in_offsets[i];
  e.in_edges.assign(e.size(), 0);
  std::vector<std::size_t> cursor(e.in_offsets.begin(), e.in_offsets.end() - 1);
  for (std::size_t k = 0; k < e.size(); ++k) e.in_edges[cursor[e.dst[k]]++] = k;
}

HeteroGraph assemble(const NodeSet& nodes, const std::vector<HeteroEdge>& edges,
                     const RelationalDataset& ds, const SplitConfig& split) {
  if (nodes.types.empty() || nodes.types[0].count == 0)
    throw std::invalid_argument("assemble: empty base table");
  HeteroGraph g;
  g.task = ds.task().task;
  g.class_count = ds.class_count();
  g.types = nodes.types;
  for (const auto& t : nodes.types) {
    Eigen::MatrixXd F(static_cast<Eigen::Index>(t.count), static_cast<Eigen::Index>(t.width));
    std::vector<std::string> keys(t.count);
    std::vector<std::size_t> rows(t.count);
    for (std::size_t i = 0; i < t.count; ++i) {
      const auto& node = nodes.nodes[t.first_id + i];
      if (t.width > 0) F.row(static_cast<Eigen::Index>(i)) = node.x.transpose();
      keys[i] = node.key;
      rows[i] = node.row;
    }
    g.features.push_back(std::move(F));
    g.keys.push_back(std::move(keys));
    g.rows.push_back(std::move(rows));
  }

  auto type_of_id = [&](std::size_t id) {
    for (std::size_t t = 0; t < g.types.size(); ++t)
      if (id >= g.types[t].first_id && id < g.types[t].first_id + g.types[t].count) return t;
    throw std::out_of_range("edge endpoint out of range");
  };

  std::map<EdgeTypeKey, EdgeTypeIndex> by_key;
  for (const auto& e : edges) {
    auto st = type_of_id(e.src);
    auto dt = type_of_id(e.dst);
    if (g.types[st].name != e.type.src_type || g.types[dt].name != e.type.dst_type)
      throw std::invalid_argument("edge type does not match endpoint types: " + e.type.str());
    auto& idx = by_key[e.type];
    idx.key = e.type;
    idx.src_type = st;
    idx.dst_type = dt;
    idx.src.push_back(e.src - g.types[st].first_id);
    idx.dst.push_back(e.dst - g.types[dt].first_id);
    idx.weight.push_back(e.weight);
  }
  for (auto& [key, idx] : by_key) {
    build_in_index(idx, g.types[idx.dst_type].count);
    g.edge_types.push_back(std::move(idx));
  }

  g.labels = ds.labels();
  g.split = stratified_split(g.labels, g.task, split);
  return g;
}

void save_graph(const HeteroGraph& g, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");

  json meta;
  meta["task"] = g.task == TaskKind::classification ? "classification" : "regression";
  meta["class_count"] = g.class_count;
  meta["node_types"] = json::array();
  for (std::size_t t = 0; t < g.types.size(); ++t) {
    const auto& info = g.types[t];
    meta["node_types"].push_back({{"name", info.name},
                                  {"table", info.table},
                                  {"attributes", info.attributes},
                                  {"is_base", info.is_base},
                                  {"count", info.count},
                                  {"first_id", info.first_id},
                                  {"width", info.width},
                                  {"features", "features/" + std::to_string(t) + ".bin"}});
  }
  meta["edge_types"] = json::array();
  for (const auto& e : g.edge_types)
    meta["edge_types"].push_back({{"src_type", e.key.src_type},
                                  {"relation", to_string(e.key.relation)},
                                  {"dst_type", e.key.dst_type},
                                  {"count", e.size()}});
  {
    std::ofstream out(dir / "graph.json");
    out << meta.dump(2) << "\n";
  }

  {
    std::ofstream out(dir / "nodes.csv", std::ios::binary);
    csv::write_row(out, {"id", "type", "key", "split", "label"});
    for (std::size_t t = 0; t < g.types.size(); ++t) {
      const auto& info = g.types[t];
      for (std::size_t i = 0; i < info.count; ++i) {
        std::string split = t == 0 ? to_string(g.split[i]) : "";
        std::string label = t == 0 ? format_exact(g.labels[i]) : "";
        csv::write_row(out, {std::to_string(info.first_id + i), info.name, g.keys[t][i], split, label});
      }
    }
  }
  {
    std::ofstream out(dir / "edges.csv", std::ios::binary);
    csv::write_row(out, {"src", "dst", "type", "relation"});
    for (const auto& e : g.edge_types) {
      const auto& s = g.types[e.src_type];
      const auto& d = g.types[e.dst_type];
      for (std::size_t k = 0; k < e.size(); ++k)
        csv::write_row(out, {std::to_string(s.first_id + e.src[k]), std::to_string(d.first_id + e.dst[k]),
                             e.key.str(), to_string(e.key.relation)});
    }
  }
  for (std::size_t t = 0; t < g.types.size(); ++t) {
    std::ofstream out(dir / "features" / (std::to_string(t) + ".bin"), std::ios::binary);
    binio::Writer w(out);
    w.magic("recognn.features", 1);
    w.matrix(g.features[t]);
  }
}

HeteroGraph load_graph(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "graph.json")) throw std::runtime_error("missing graph: " + (dir / "graph.json").string());
  json meta;
  {
    std::ifstream in(dir / "graph.json");
    in >> meta;
  }
  HeteroGraph g;
  g.task = meta.at("task") == "classification" ? TaskKind::classification : TaskKind::regression;
  g.class_count = meta.at("class_count");
  for (const auto& t : meta.at("node_types")) {
    NodeTypeInfo info;
    info.name = t.at("name");
    info.table = t.at("table");
    info.attributes = t.at("attributes").get<std::vector<std::string>>();
    info.is_base = t.at("is_base");
    info.count = t.at("count");
    info.first_id = t.at("first_id");
    info.width = t.at("width");
    std::ifstream in(dir / t.at("features").get<std::string>(), std::ios::binary);
    if (!in) throw std::runtime_error("missing feature blob for node type " + info.name);
    binio::Reader r(in);
    r.magic("recognn.features");
    g.features.push_back(r.matrix());
    g.keys.emplace_back(info.count);
    g.rows.emplace_back(info.count);
    g.types.push_back(std::move(info));
  }

  std::map<std::string, std::size_t> type_by_name;
  for (std::size_t t = 0; t < g.types.size(); ++t) type_by_name[g.types[t].name] = t;
  auto type_of_id = [&](std::size_t id) {
    for (std::size_t t = 0; t < g.types.size(); ++t)
      if (id >= g.types[t].first_id && id < g.types[t].first_id + g.types[t].count) return t;
    throw std::runtime_error("node id out of range in graph dump");
  };

  std::ifstream nodes_in(dir / "nodes.csv", std::ios::binary);
  auto node_rows = csv::parse(nodes_in);
  if (!g.types.empty()) {
    g.labels.assign(g.types[0].count, 0.0);
    g.split.assign(g.types[0].count, Split::test);
  }
  for (std::size_t i = 1; i < node_rows.size(); ++i) {
    const auto& row = node_rows[i];
    auto id = std::stoull(row.at(0));
    auto t = type_of_id(id);
    auto local = id - g.types[t].first_id;
    g.keys[t][local] = row.at(2);
    if (t == 0) {
      g.split[local] = parse_split(row.at(3));
      g.labels[local] = std::stod(row.at(4));
    }
  }
  // Rows are positional: node i of a type is tuple i of its table.
  for (std::size_t t = 0; t < g.types.size(); ++t)
    for (std::size_t i = 0; i < g.types[t].count; ++i) g.rows[t][i] = i;

  std::map<std::string, std::size_t> edge_index;
  for (const auto& e : meta.at("edge_types")) {
    EdgeTypeIndex idx;
    idx.key = {e.at("src_type"), parse_relation(e.at("relation")), e.at("dst_type")};
    idx.src_type = type_by_name.at(idx.key.src_type);
    idx.dst_type = type_by_name.at(idx.key.dst_type);
    edge_index[idx.key.str()] = g.edge_types.size();
    g.edge_types.push_back(std::move(idx));
  }
  std::ifstream edges_in(dir / "edges.csv", std::ios::binary);
  auto edge_rows = csv::parse(edges_in);
  for (std::size_t i = 1; i < edge_rows.size(); ++i) {
    const auto& row = edge_rows[i];
    auto& idx = g.edge_types.at(edge_index.at(row.at(2)));
    idx.src.push_back(std::stoull(row.at(0)) - g.types[idx.src_type].first_id);
    idx.dst.push_back(std::stoull(row.at(1)) - g.types[idx.dst_type].first_id);
    idx.weight.push_back(1.0);
  }
  for (auto& idx : g.edge_types) build_in_index(idx, g.types[idx.dst_type].count);
  return g;
}

}  // namespace recognn
