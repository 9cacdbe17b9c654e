#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"
#include "recognn/gat.hpp"

namespace recognn {

struct CumulativeAttention {
  std::string table;
  std::vector<std::string> nodes;
  Eigen::MatrixXd sum;         // elementwise sum of the attention matrices
  Eigen::MatrixXd normalized;  // off-diagonal min-max of `sum`; diagonal zero
  bool degenerate = false;     // off-diagonal entries all equal
};

struct SignificantEdgeSet {
  std::string table;
  std::vector<std::string> nodes;
  double threshold = 0.8;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // u < v, sorted
  Eigen::MatrixXd symmetric;  // (normalized + normalized^T) / 2
};

enum class GroupingMethod { maximal_clique, girvan_newman };

std::string to_string(GroupingMethod m);
GroupingMethod parse_grouping_method(const std::string& s);

struct SubTableManifest {
  std::string table;
  GroupingMethod method = GroupingMethod::maximal_clique;
  double threshold = 0.8;
  std::vector<std::vector<std::string>> groups;  // attribute names, table column order
  bool unsplit() const { return groups.empty(); }
};

class MismatchedNodesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sums the records and min-max normalizes over off-diagonal entries. A
/// constant matrix normalizes to all zeros and warns.
CumulativeAttention accumulate(const std::vector<AttentionRecord>& records);

/// Pairs whose symmetrized normalized weight is strictly greater than `ell`.
SignificantEdgeSet select_edges(const CumulativeAttention& ca, double ell);

struct CliqueOptions {
  bool keep_singletons = false;
};

/// All maximal cliques of the significant-edge graph (Bron-Kerbosch with
/// Tomita pivoting), sorted lexicographically by node position.
SubTableManifest extract_cliques(const SignificantEdgeSet& edges, CliqueOptions options = {});

/// Girvan-Newman: remove highest-betweenness edges one at a time and keep
/// the partition with the best modularity. Groups are disjoint.
SubTableManifest extract_communities_gn(const SignificantEdgeSet& edges,
                                        CliqueOptions options = {});

/// Maximal cliques of an undirected graph on n nodes, as sorted node lists.
std::vector<std::vector<std::size_t>> maximal_cliques(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Girvan-Newman communities (best-modularity level) over the non-isolated
/// nodes, or every node when `include_isolated`.
std::vector<std::vector<std::size_t>> girvan_newman(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
    bool include_isolated);

/// Newman modularity of a partition of the graph.
double modularity(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                  const std::vector<std::vector<std::size_t>>& communities);

/// Projection of the parent table onto one group plus its PK and FK columns.
struct SubTable {
  std::string name;    // node-type name used by the heterogeneous graph
  std::string parent;
  std::vector<std::string> group;
  Table table;
};

/// Sub-tables for every group; an empty manifest yields no sub-tables (the
/// caller uses the parent table whole). Throws on an unknown attribute.
std::vector<SubTable> materialize_subtables(const RelationalDataset& ds,
                                            const SubTableManifest& manifest);

/// Node-type name of group `index` of `table`.
std::string subtable_name(const std::string& table, std::size_t index);

/// Human-readable list of the strongest normalized pairs.
std::string top_pairs_report(const CumulativeAttention& ca, std::size_t limit = 10);

}  // namespace recognn
