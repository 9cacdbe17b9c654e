#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"
#include "recognn/encoders.hpp"
#include "recognn/subtables.hpp"

namespace recognn {

/// How one table contributes node types: one node type per attribute group.
/// The base table always has exactly one group.
struct TableLayout {
  std::string table;
  std::vector<std::vector<std::string>> groups;
  bool split = false;  // groups came from sub-table extraction
};

/// Base table whole, plus each listed auxiliary table split per its manifest
/// or whole (all feature columns) when the manifest is empty or absent.
std::vector<TableLayout> layouts_from_manifests(
    const RelationalDataset& ds, const std::vector<std::string>& aux_tables,
    const std::map<std::string, SubTableManifest>& manifests);

struct NodeTypeInfo {
  std::string name;
  std::string table;
  std::vector<std::string> attributes;
  bool is_base = false;
  std::size_t count = 0;
  std::size_t first_id = 0;  // node ids of this type are contiguous
  std::size_t width = 0;     // attributes * d_out
};

struct HeteroNode {
  std::size_t id = 0;
  std::size_t type = 0;
  std::string key;
  std::size_t row = 0;  // row in the parent table
  Eigen::VectorXd x;
  std::optional<double> label;
};

struct NodeSet {
  std::vector<NodeTypeInfo> types;  // types[0] is the base table
  std::vector<HeteroNode> nodes;
};

enum class Relation { join, similarity };
std::string to_string(Relation r);

struct EdgeTypeKey {
  std::string src_type;
  Relation relation = Relation::join;
  std::string dst_type;

  std::string str() const;
  auto operator<=>(const EdgeTypeKey&) const = default;
};

struct HeteroEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeTypeKey type;
  double weight = 1.0;
};

struct SimilarityConfig {
  enum class Mode { threshold, topk };
  Mode mode = Mode::topk;
  double theta = 0.9;
  std::size_t k = 10;
};

struct SplitConfig {
  double train = 0.70;
  double val = 0.15;
  std::uint64_t seed = 0;
};

enum class Split : std::uint8_t { train, val, test };
std::string to_string(Split s);

/// One edge type with its edges stored by local node index, plus a CSR index
/// of incoming edges per destination node.
struct EdgeTypeIndex {
  EdgeTypeKey key;
  std::size_t src_type = 0;
  std::size_t dst_type = 0;
  std::vector<std::size_t> src;  // local index within src_type
  std::vector<std::size_t> dst;  // local index within dst_type
  std::vector<double> weight;
  std::vector<std::size_t> in_offsets;  // size count(dst_type) + 1
  std::vector<std::size_t> in_edges;    // edge ids grouped by destination

  std::size_t size() const { return src.size(); }
};

struct HeteroGraph {
  TaskKind task = TaskKind::classification;
  int class_count = 0;
  std::vector<NodeTypeInfo> types;
  std::vector<Eigen::MatrixXd> features;  // per type: count x width
  std::vector<std::vector<std::string>> keys;
  std::vector<std::vector<std::size_t>> rows;
  std::vector<EdgeTypeIndex> edge_types;  // sorted by key
  std::vector<double> labels;             // base nodes
  std::vector<Split> split;               // base nodes

  std::size_t base_count() const { return types.empty() ? 0 : types[0].count; }
  std::size_t node_count() const;
  std::size_t edge_count() const;
  std::vector<std::size_t> base_nodes(Split s) const;
  std::optional<std::size_t> type_index(const std::string& name) const;
};

/// One node per base tuple and one per (group, tuple) of every other table.
/// Features concatenate the projected embeddings of the group's attributes.
NodeSet build_nodes(const RelationalDataset& ds, const std::vector<TableLayout>& layouts,
                    const EncoderBank& encoders);

/// For every schema FK match between two tables present in the node set,
/// links every node of the referencing tuple to every node of the referenced
/// tuple, both directions.
std::vector<HeteroEdge> build_join_edges(const RelationalDataset& ds, const NodeSet& nodes);

/// Cosine similarity between base feature vectors, both directions, no self
/// edges. Top-K ties break on the lower node id.
std::vector<HeteroEdge> build_similarity_edges(const NodeSet& nodes, const SimilarityConfig& config);

/// Indexes edges per type and assigns base nodes to train/val/test,
/// stratified by label (classification) or target decile (regression).
HeteroGraph assemble(const NodeSet& nodes, const std::vector<HeteroEdge>& edges,
                     const RelationalDataset& ds, const SplitConfig& split);

void save_graph(const HeteroGraph& g, const std::filesystem::path& dir);
HeteroGraph load_graph(const std::filesystem::path& dir);

}  // namespace recognn
