#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"
#include "recognn/encoders.hpp"
#include "recognn/linker.hpp"
#include "recognn/optim.hpp"

namespace recognn {

/// Complete graph over one tuple's non-key attributes.
struct TupleGraph {
  std::string table;
  std::string key;
  std::size_t row = 0;
  std::vector<std::size_t> columns;     // table column index per node
  std::vector<std::string> node_names;  // column name per node
  Eigen::MatrixXd features;             // |V| x d_out
  double label = 0.0;
};

/// Parameters shared by every tuple graph of one table.
struct GatParams {
  Eigen::MatrixXd W;        // d_out x d_h, node transform
  Eigen::VectorXd a_src;    // first half of the attention vector
  Eigen::VectorXd a_dst;    // second half
  Eigen::MatrixXd W_prime;  // d_h x d_h, update transform
  Eigen::MatrixXd head;     // d_h x outputs
  Eigen::VectorXd head_bias;
  double leaky_slope = 0.2;
  std::uint64_t version = 0;  // bumped on every optimizer step

  static GatParams create(int d_out, int d_hidden, int outputs, double leaky_slope,
                          std::uint64_t seed);
  GatParams zeros_like() const;
  std::vector<TensorView> tensors();
  int outputs() const { return static_cast<int>(head.cols()); }

  void save(std::ostream& out) const;
  static GatParams load(std::istream& in);
};

struct AttentionRecord {
  std::string table;
  std::string key;
  std::vector<std::string> nodes;
  Eigen::MatrixXd weights;  // row u: attention of u over every v (self included)
  std::uint64_t params_version = 0;
};

/// Intermediates of one forward pass, kept for backprop.
struct GatForward {
  Eigen::MatrixXd H;          // X W
  Eigen::MatrixXd pre;        // a_src.h_u + a_dst.h_v
  Eigen::MatrixXd attention;  // row-softmax of LeakyReLU(pre)
  Eigen::MatrixXd P;          // H W'
  Eigen::MatrixXd Z;          // attention P
  Eigen::MatrixXd H_out;      // ELU(Z)
  Eigen::VectorXd pooled;     // mean of H_out rows
  Eigen::VectorXd logits;
  Eigen::VectorXd output;     // probabilities (classification) or the scalar
};

struct Prediction {
  Eigen::VectorXd pooled;
  Eigen::VectorXd output;  // class probabilities, or one regression value
};

class Stage1SkipError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nodes are the table's non-key attributes; features are projected
/// encodings. Throws Stage1SkipError when fewer than two attributes remain.
TupleGraph build_tuple_graph(const LabeledTuple& tuple, const RelationalDataset& ds,
                             const TableEncoder& encoder);

struct AttentionOutput {
  Eigen::MatrixXd node_embeddings;
  AttentionRecord record;
};

/// h_u = x_u W; e_uv = LeakyReLU(a_src.h_u + a_dst.h_v); attention rows are
/// softmax over v (self included); h'_u = ELU(sum_v att_uv h_v W').
AttentionOutput attention_forward(const TupleGraph& g, const GatParams& params);

/// Mean pooling followed by the prediction head.
Prediction pool_and_predict(const Eigen::MatrixXd& node_embeddings, const GatParams& params,
                            TaskKind task);

GatForward gat_forward(const Eigen::MatrixXd& X, const GatParams& params, TaskKind task);

/// Cross entropy against the class index, or squared error.
double prediction_loss(const Eigen::VectorXd& output, double label, TaskKind task);

/// Accumulates parameter gradients of prediction_loss into `grads` and
/// returns dLoss/dX.
Eigen::MatrixXd gat_backward(const Eigen::MatrixXd& X, const GatForward& fwd, double label,
                             TaskKind task, const GatParams& params, GatParams& grads);

struct GatConfig {
  int d_hidden = 32;
  double leaky_slope = 0.2;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Encoder and attention model trained together for one table.
struct Stage1Model {
  TableEncoder encoder;
  GatParams gat;

  std::vector<TensorView> tensors() {
    auto t = encoder.tensors();
    auto g = gat.tensors();
    t.insert(t.end(), g.begin(), g.end());
    return t;
  }
};

/// Sum of per-graph losses (features recomputed from the model's encoder).
/// When `grads` is non-null, adds the gradient of that sum into it.
double stage1_loss(const RelationalDataset& ds, const std::vector<TupleGraph>& graphs,
                   const Stage1Model& model, TaskKind task, Stage1Model* grads);

struct Stage1Result {
  Stage1Model model;
  std::vector<AttentionRecord> records;
  std::vector<double> epoch_loss;  // mean per-graph loss, one per epoch
  double label_mean = 0.0;         // regression label standardization
  double label_std = 1.0;
};

/// Mini-batch Adam on the summed loss. Attention records come from one final
/// forward pass with the trained parameters, one per distinct tuple. Throws
/// TrainingDiverged on a non-finite loss.
Stage1Result stage1_train(const RelationalDataset& ds, std::vector<TupleGraph> graphs,
                          Stage1Model model, const GatConfig& config);

}  // namespace recognn
