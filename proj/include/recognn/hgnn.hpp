#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recognn/hetgraph.hpp"
#include "recognn/optim.hpp"

namespace recognn {

struct HgnnConfig {
  int d_model = 64;
  int layers = 2;
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  double leaky_slope = 0.2;
  bool uniform_attention = false;  // ablation: every incoming edge of a type weighs 1/deg
  std::uint64_t seed = 0;
};

/// Per-layer parameters. Node-type tensors are indexed like HeteroGraph::types,
/// edge-type tensors like HeteroGraph::edge_types.
struct HgnnLayer {
  std::vector<Eigen::MatrixXd> self;      // d x d per node type
  std::vector<Eigen::MatrixXd> message;   // M_t, d x d per edge type
  std::vector<Eigen::VectorXd> score_src; // scorer half applied to h_j
  std::vector<Eigen::VectorXd> score_dst; // scorer half applied to h_i
};

struct HgnnParams {
  std::vector<Eigen::MatrixXd> input;       // width x d per node type
  std::vector<Eigen::VectorXd> input_bias;  // d per node type
  std::vector<HgnnLayer> layers;
  Eigen::MatrixXd head;  // d x outputs
  Eigen::VectorXd head_bias;

  TaskKind task = TaskKind::classification;
  double leaky_slope = 0.2;
  bool uniform_attention = false;
  double target_mean = 0.0;  // regression targets are standardized with these
  double target_std = 1.0;
  std::vector<std::string> node_types;  // names, checked against the graph on use
  std::vector<std::string> edge_types;

  static HgnnParams create(const HeteroGraph& g, const HgnnConfig& config);
  HgnnParams zeros_like() const;
  std::vector<TensorView> tensors();
  int d_model() const { return static_cast<int>(head.rows()); }
  int outputs() const { return static_cast<int>(head.cols()); }

  /// Throws std::invalid_argument when the graph's types differ.
  void check_compatible(const HeteroGraph& g) const;

  void save(const std::filesystem::path& path) const;
  static HgnnParams load(const std::filesystem::path& path);
};

/// Per-layer intermediates of a forward pass.
struct LayerTrace {
  std::vector<Eigen::MatrixXd> Z;            // pre-activation per node type
  std::vector<Eigen::MatrixXd> Q;            // H_src M_t per edge type
  std::vector<Eigen::VectorXd> pre;          // raw attention score per edge
  std::vector<Eigen::VectorXd> attention;    // normalized per destination, per edge
  std::vector<Eigen::MatrixXd> messages;     // m^t per edge type, rows = dst nodes
};

struct HgnnForward {
  std::vector<std::vector<Eigen::MatrixXd>> states;  // [layer 0..L][node type]
  std::vector<LayerTrace> trace;
  Eigen::MatrixXd logits;  // base nodes x outputs
  Eigen::MatrixXd output;  // probabilities, or the de-standardized scalar
};

/// One layer: attention over incoming edges of each type (softmax within the
/// type), m^t = sum att * h_j M_t, h' = ELU(h W_self + sum_t m^t).
std::vector<Eigen::MatrixXd> message_pass(const HeteroGraph& g, const HgnnParams& params,
                                          std::size_t layer,
                                          const std::vector<Eigen::MatrixXd>& states,
                                          LayerTrace* trace = nullptr);

HgnnForward hgnn_forward(const HeteroGraph& g, const HgnnParams& params);

/// Summed loss over the given base nodes: cross entropy, or squared error on
/// the standardized target. Adds parameter gradients into `grads` if given.
double hgnn_loss(const HeteroGraph& g, const HgnnParams& params,
                 const std::vector<std::size_t>& base_nodes, HgnnParams* grads);

/// Rows of class probabilities, or one column of regression values.
/// Throws std::out_of_range for an id that is not a base node.
Eigen::MatrixXd predict(const HeteroGraph& g, const HgnnParams& params,
                        const std::vector<std::size_t>& base_nodes);

struct EdgeTypeImportance {
  std::string edge_type;
  std::string src_type;
  double mean_attention = 0.0;  // mean normalized attention over edges into base nodes
  double mean_share = 0.0;      // mean per-node share of incoming message mass
  std::size_t edges = 0;
};

/// Learned edge importance at the last layer, for edges into base nodes.
/// `attention` is the softmax weight of each edge within its type; `share`
/// is the edge's fraction of the total attention-weighted message norm
/// arriving at its destination, so it is comparable across edge types.
struct EdgeImportance {
  std::vector<std::vector<double>> attention;  // per edge type, per edge (empty if not into base)
  std::vector<std::vector<double>> share;
  std::vector<EdgeTypeImportance> per_type;
};

EdgeImportance edge_importance(const HeteroGraph& g, const HgnnParams& params);

class Stage2Diverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Stage2Result {
  HgnnParams params;  // best-validation checkpoint
  EdgeImportance importance;
  std::vector<double> train_loss;  // mean per node, per epoch
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
};

/// Full-graph Adam steps; keeps the parameters with the lowest validation
/// loss (the last epoch's if there is no validation split).
Stage2Result stage2_train(const HeteroGraph& g, const HgnnConfig& config);

struct SubTableImportance {
  std::string node_type;
  std::string table;
  std::vector<std::string> attributes;
  double importance = 0.0;
  std::size_t edges = 0;
};

struct FeatureSelectionReport {
  std::vector<SubTableImportance> ranking;  // descending, ties by name
  std::vector<EdgeTypeImportance> per_edge_type;
  double similarity_share = 0.0;

  std::string to_text() const;
  std::string to_json() const;
};

/// Ranks every non-base node type by the mean share of message mass its
/// edges deliver into base nodes. Types without such edges rank last at 0.
FeatureSelectionReport feature_selection_report(const HeteroGraph& g, const EdgeImportance& imp);

}  // namespace recognn
