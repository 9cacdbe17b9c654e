#pragma once

#include <map>
#include <string>
#include <vector>

#include "recognn/dataset.hpp"

namespace recognn {

enum class LinkType { one_to_one, one_to_many, many_to_one };

std::string to_string(LinkType t);

/// One traversal direction of a PK-FK relationship.
struct JoinEdge {
  std::string src_table;
  std::string dst_table;
  std::string fk_table;   // table holding the foreign key column
  std::string fk_column;
  std::string pk_column;  // primary key of the referenced table
  LinkType link_type = LinkType::many_to_one;
  double avg_fanout = 0.0;  // mean number of dst tuples matched per src tuple

  /// True when traversal goes from the referencing side to the referenced side.
  bool from_fk_side() const { return src_table == fk_table; }
};

struct DirectedJoinGraph {
  std::string base_table;
  std::vector<std::string> nodes;
  std::vector<JoinEdge> edges;

  std::vector<const JoinEdge*> out_edges(const std::string& table) const;
};

struct PathScoringConfig {
  double alpha = 0.5;
  double beta = 0.5;

  void validate() const;
};

struct MetaPath {
  std::string target_table;
  std::vector<JoinEdge> hops;
  double length_score = 1.0;     // S_L
  double direction_score = 1.0;  // S_N
  double score = 1.0;            // alpha * S_L + beta * S_N

  std::size_t length() const { return hops.size(); }
};

/// Builds both traversal directions for every foreign key, with fan-out
/// measured on the data. Dangling FK values contribute no matches.
DirectedJoinGraph build_join_graph(const RelationalDataset& ds);

/// 1 / (1 + L).
double path_length_score(std::size_t length);

/// 1 / (1 + sum of avg_fanout over one_to_many hops).
double join_direction_score(const std::vector<JoinEdge>& hops);

double score_path(const std::vector<JoinEdge>& hops, const PathScoringConfig& config);

/// Greedy best-first growth from the base table: every step commits the
/// single (visited table, edge) extension whose extended path has the highest
/// total score. Each table is reached once, so no path repeats a table.
/// Unreachable tables are absent from the result (with a warning).
std::map<std::string, MetaPath> find_meta_paths(const DirectedJoinGraph& graph,
                                                const PathScoringConfig& config);

std::string meta_paths_to_text(const std::map<std::string, MetaPath>& paths);

}  // namespace recognn
