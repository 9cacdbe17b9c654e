#include "recognn/joinplan.hpp"

#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "recognn/common.hpp"

namespace recognn {

std::string to_string(LinkType t) {
  switch (t) {
    case LinkType::one_to_one: return "1:1";
    case LinkType::one_to_many: return "1:n";
    case LinkType::many_to_one: return "n:1";
  }
  return "?";
}

std::vector<const JoinEdge*> DirectedJoinGraph::out_edges(const std::string& table) const {
  std::vector<const JoinEdge*> out;
  for (const auto& e : edges)
    if (e.src_table == table) out.push_back(&e);
  return out;
}

void PathScoringConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0 || alpha + beta <= 0.0)
    throw std::invalid_argument("path scoring requires alpha, beta >= 0 and alpha + beta > 0");
}

DirectedJoinGraph build_join_graph(const RelationalDataset& ds) {
  DirectedJoinGraph g;
  g.base_table = ds.task().base_table;
  for (const auto& t : ds.tables()) g.nodes.push_back(t.name());

  for (const auto& t : ds.tables()) {
    for (std::size_t c = 0; c < t.columns().size(); ++c) {
      const ColumnSpec& col = t.columns()[c];
      if (col.kind != ColumnKind::foreign_key) continue;
      const Table& target = ds.table(col.fk_target->table);
      std::vector<std::size_t> matches(target.size(), 0);
      std::size_t matched_fk_tuples = 0;
      for (const auto& tup : t.tuples()) {
        if (is_null(tup.values[c])) continue;
        if (auto row = target.row_of_key(cell_to_string(tup.values[c]))) {
          ++matches[*row];
          ++matched_fk_tuples;
        }
      }
      std::size_t max_matches = 0;
      for (auto m : matches) max_matches = std::max(max_matches, m);

      JoinEdge fwd;
      fwd.src_table = t.name();
      fwd.dst_table = target.name();
      fwd.fk_table = t.name();
      fwd.fk_column = col.name;
      fwd.pk_column = col.fk_target->column;
      fwd.avg_fanout = t.size() ? static_cast<double>(matched_fk_tuples) / t.size() : 0.0;

      JoinEdge rev = fwd;
      std::swap(rev.src_table, rev.dst_table);
      rev.avg_fanout = target.size() ? static_cast<double>(matched_fk_tuples) / target.size() : 0.0;

      // A PK matched at most once on average behaves like 1:1 for scoring;
      // only a true amplification (mean fan-out above one) counts as 1:n.
      if (max_matches <= 1 || rev.avg_fanout <= 1.0) {
        rev.link_type = LinkType::one_to_one;
        fwd.link_type = max_matches <= 1 ? LinkType::one_to_one : LinkType::many_to_one;
      } else {
        rev.link_type = LinkType::one_to_many;
        fwd.link_type = LinkType::many_to_one;
      }
      g.edges.push_back(std::move(fwd));
      g.edges.push_back(std::move(rev));
    }
  }
  return g;
}

double path_length_score(std::size_t length) {
  return 1.0 / (1.0 + static_cast<double>(length));
}

double join_direction_score(const std::vector<JoinEdge>& hops) {
  double penalty = 0.0;
  for (const auto& e : hops)
    if (e.link_type == LinkType::one_to_many) penalty += e.avg_fanout;
  return 1.0 / (1.0 + penalty);
}

double score_path(const std::vector<JoinEdge>& hops, const PathScoringConfig& config) {
  return config.alpha * path_length_score(hops.size()) + config.beta * join_direction_score(hops);
}

namespace {

MetaPath make_meta_path(std::string target, std::vector<JoinEdge> hops,
                        const PathScoringConfig& config) {
  MetaPath p;
  p.target_table = std::move(target);
  p.length_score = path_length_score(hops.size());
  p.direction_score = join_direction_score(hops);
  p.score = score_path(hops, config);
  p.hops = std::move(hops);
  return p;
}

}  // namespace

std::map<std::string, MetaPath> find_meta_paths(const DirectedJoinGraph& graph,
                                                const PathScoringConfig& config) {
  config.validate();
  std::map<std::string, MetaPath> reached;
  reached.emplace(graph.base_table, make_meta_path(graph.base_table, {}, config));
  // Order in which tables were committed; the frontier is scanned in that order.
  std::vector<std::string> order{graph.base_table};

  while (true) {
    const JoinEdge* best_edge = nullptr;
    const MetaPath* best_prefix = nullptr;
    double best_score = -1.0;
    for (const auto& table : order) {
      const MetaPath& prefix = reached.at(table);
      for (const JoinEdge* e : graph.out_edges(table)) {
        if (reached.count(e->dst_table)) continue;
        std::vector<JoinEdge> hops = prefix.hops;
        hops.push_back(*e);
        double s = score_path(hops, config);
        bool better = s > best_score;
        if (!better && s == best_score) {
          better = std::tie(e->dst_table, e->fk_column, e->src_table) <
                   std::tie(best_edge->dst_table, best_edge->fk_column, best_edge->src_table);
        }
        if (better) {
          best_score = s;
          best_edge = e;
          best_prefix = &prefix;
        }
      }
    }
    if (!best_edge) break;
    std::vector<JoinEdge> hops = best_prefix->hops;
    hops.push_back(*best_edge);
    std::string target = best_edge->dst_table;
    reached.emplace(target, make_meta_path(target, std::move(hops), config));
    order.push_back(target);
  }

  reached.erase(graph.base_table);
  for (const auto& n : graph.nodes) {
    if (n != graph.base_table && !reached.count(n))
      warn("table " + n + " is not reachable from base table " + graph.base_table);
  }
  return reached;
}

std::string meta_paths_to_text(const std::map<std::string, MetaPath>& paths) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "target" << std::setw(4) << "L" << std::setw(10) << "S_L"
     << std::setw(10) << "S_N" << std::setw(10) << "S_path" << "hops\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& [name, p] : paths) {
    os << std::setw(16) << name << std::setw(4) << p.length() << std::setw(10) << p.length_score
       << std::setw(10) << p.direction_score << std::setw(10) << p.score;
    for (std::size_t i = 0; i < p.hops.size(); ++i) {
      const auto& h = p.hops[i];
      if (i) os << ", ";
      os << h.src_table << "->" << h.dst_table << " [" << to_string(h.link_type) << " via "
         << h.fk_table << '.' << h.fk_column << "]";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace recognn
