#include "recognn/gat.hpp"

#include <cmath>
#include <numeric>

#include "recognn/binio.hpp"
#include "recognn/common.hpp"

namespace recognn {

namespace {

std::span<double> span_of(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> span_of(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, int fan, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan, 1)));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -bound, bound);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

GatParams GatParams::create(int d_out, int d_hidden, int outputs, double leaky_slope,
                            std::uint64_t seed) {
  Rng rng(seed);
  GatParams p;
  p.leaky_slope = leaky_slope;
  p.W.resize(d_out, d_hidden);
  p.a_src.resize(d_hidden);
  p.a_dst.resize(d_hidden);
  p.W_prime.resize(d_hidden, d_hidden);
  p.head.resize(d_hidden, outputs);
  p.head_bias.resize(outputs);
  fill_uniform(p.W, d_out, rng);
  fill_uniform(p.a_src, 2 * d_hidden, rng);
  fill_uniform(p.a_dst, 2 * d_hidden, rng);
  fill_uniform(p.W_prime, d_hidden, rng);
  fill_uniform(p.head, d_hidden, rng);
  fill_uniform(p.head_bias, d_hidden, rng);
  return p;
}

GatParams GatParams::zeros_like() const {
  GatParams z = *this;
  for (auto& t : z.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<TensorView> GatParams::tensors() {
  return {{"gat.W", span_of(W)},         {"gat.a_src", span_of(a_src)},
          {"gat.a_dst", span_of(a_dst)}, {"gat.W_prime", span_of(W_prime)},
          {"gat.head", span_of(head)},   {"gat.head_bias", span_of(head_bias)}};
}

void GatParams::save(std::ostream& out) const {
  binio::Writer w(out);
  w.magic("recognn.gat_params", 1);
  w.f64(leaky_slope);
  w.u64(version);
  w.matrix(W);
  w.vector(a_src);
  w.vector(a_dst);
  w.matrix(W_prime);
  w.matrix(head);
  w.vector(head_bias);
}

GatParams GatParams::load(std::istream& in) {
  binio::Reader r(in);
  if (r.magic("recognn.gat_params") != 1) throw std::runtime_error("unsupported GAT checkpoint");
  GatParams p;
  p.leaky_slope = r.f64();
  p.version = r.u64();
  p.W = r.matrix();
  p.a_src = r.vector();
  p.a_dst = r.vector();
  p.W_prime = r.matrix();
  p.head = r.matrix();
  p.head_bias = r.vector();
  return p;
}

TupleGraph build_tuple_graph(const LabeledTuple& tuple, const RelationalDataset& ds,
                             const TableEncoder& encoder) {
  const Table& table = ds.table(tuple.table);
  auto columns = ds.feature_columns(tuple.table);
  if (columns.size() < 2)
    throw Stage1SkipError("table " + tuple.table + " has " + std::to_string(columns.size()) +
                          " non-key attribute(s); stage 1 needs at least 2");
  TupleGraph g;
  g.table = tuple.table;
  g.key = tuple.key;
  g.row = tuple.row;
  g.label = tuple.label;
  g.columns = columns;
  g.features.resize(static_cast<Eigen::Index>(columns.size()), encoder.dims().d_out);
  const Tuple& t = table.tuples().at(tuple.row);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    g.node_names.push_back(table.columns()[columns[i]].name);
    g.features.row(static_cast<Eigen::Index>(i)) =
        encoder.embed(encoder.slot_of(columns[i]), t.values[columns[i]]).transpose();
  }
  return g;
}

GatForward gat_forward(const Eigen::MatrixXd& X, const GatParams& p, TaskKind task) {
  GatForward f;
  const Eigen::Index n = X.rows();
  f.H = X * p.W;
  Eigen::VectorXd s = f.H * p.a_src;
  Eigen::VectorXd t = f.H * p.a_dst;
  f.pre = s.replicate(1, n) + t.transpose().replicate(n, 1);
  f.attention.resize(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    Eigen::VectorXd e(n);
    for (Eigen::Index v = 0; v < n; ++v) {
      double x = f.pre(u, v);
      e[v] = x > 0.0 ? x : p.leaky_slope * x;
    }
    f.attention.row(u) = softmax(e).transpose();
  }
  f.P = f.H * p.W_prime;
  f.Z = f.attention * f.P;
  f.H_out = f.Z.unaryExpr([](double z) { return z > 0.0 ? z : std::expm1(z); });
  f.pooled = f.H_out.colwise().mean().transpose();
  f.logits = p.head.transpose() * f.pooled + p.head_bias;
  f.output = task == TaskKind::classification ? softmax(f.logits) : f.logits;
  return f;
}

AttentionOutput attention_forward(const TupleGraph& g, const GatParams& params) {
  // The prediction head is irrelevant here; run the shared forward in
  // regression mode to avoid an extra softmax.
  GatForward f = gat_forward(g.features, params, TaskKind::regression);
  AttentionOutput out;
  out.node_embeddings = std::move(f.H_out);
  out.record.table = g.table;
  out.record.key = g.key;
  out.record.nodes = g.node_names;
  out.record.weights = std::move(f.attention);
  out.record.params_version = params.version;
  return out;
}

Prediction pool_and_predict(const Eigen::MatrixXd& node_embeddings, const GatParams& params,
                            TaskKind task) {
  Prediction p;
  p.pooled = node_embeddings.colwise().mean().transpose();
  Eigen::VectorXd logits = params.head.transpose() * p.pooled + params.head_bias;
  p.output = task == TaskKind::classification ? softmax(logits) : logits;
  return p;
}

double prediction_loss(const Eigen::VectorXd& output, double label, TaskKind task) {
  if (task == TaskKind::classification) {
    auto y = static_cast<Eigen::Index>(label);
    return -std::log(std::max(output[y], 1e-300));
  }
  double d = output[0] - label;
  return d * d;
}

Eigen::MatrixXd gat_backward(const Eigen::MatrixXd& X, const GatForward& f, double label,
                             TaskKind task, const GatParams& p, GatParams& g) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd dlogits;
  if (task == TaskKind::classification) {
    dlogits = f.output;
    dlogits[static_cast<Eigen::Index>(label)] -= 1.0;
  } else {
    dlogits = Eigen::VectorXd::Constant(1, 2.0 * (f.output[0] - label));
  }
  g.head.noalias() += f.pooled * dlogits.transpose();
  g.head_bias += dlogits;
  Eigen::VectorXd dpooled = p.head * dlogits;

  Eigen::MatrixXd dZ = (dpooled.transpose() / static_cast<double>(n)).replicate(n, 1);
  dZ.array() *= f.Z.unaryExpr([](double z) { return z > 0.0 ? 1.0 : std::exp(z); }).array();

  Eigen::MatrixXd dA = dZ * f.P.transpose();
  Eigen::MatrixXd dP = f.attention.transpose() * dZ;
  g.W_prime.noalias() += f.H.transpose() * dP;
  Eigen::MatrixXd dH = dP * p.W_prime.transpose();

  Eigen::VectorXd row_dot = (f.attention.array() * dA.array()).rowwise().sum();
  Eigen::MatrixXd de = f.attention.array() * (dA.colwise() - row_dot).array();
  Eigen::MatrixXd dpre =
      de.array() * f.pre.unaryExpr([&](double x) { return x > 0.0 ? 1.0 : p.leaky_slope; }).array();
  Eigen::VectorXd ds = dpre.rowwise().sum();
  Eigen::VectorXd dt = dpre.colwise().sum().transpose();
  g.a_src.noalias() += f.H.transpose() * ds;
  g.a_dst.noalias() += f.H.transpose() * dt;
  dH.noalias() += ds * p.a_src.transpose() + dt * p.a_dst.transpose();

  g.W.noalias() += X.transpose() * dH;
  return dH * p.W.transpose();
}

double stage1_loss(const RelationalDataset& ds, const std::vector<TupleGraph>& graphs,
                   const Stage1Model& model, TaskKind task, Stage1Model* grads) {
  double total = 0.0;
  const int d_out = model.encoder.dims().d_out;
  std::vector<EncodedCell> cells;
  for (const auto& graph : graphs) {
    const Tuple& t = ds.table(graph.table).tuples().at(graph.row);
    const auto n = static_cast<Eigen::Index>(graph.columns.size());
    Eigen::MatrixXd X(n, d_out);
    cells.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t slot = model.encoder.slot_of(graph.columns[static_cast<std::size_t>(i)]);
      cells.push_back(model.encoder.encode(slot, t.values[graph.columns[static_cast<std::size_t>(i)]]));
      X.row(i) = project(cells.back().raw, model.encoder.columns()[slot].modality, model.encoder)
                     .transpose();
    }
    GatForward f = gat_forward(X, model.gat, task);
    total += prediction_loss(f.output, graph.label, task);
    if (!grads) continue;
    Eigen::MatrixXd dX = gat_backward(X, f, graph.label, task, model.gat, grads->gat);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t slot = model.encoder.slot_of(graph.columns[static_cast<std::size_t>(i)]);
      model.encoder.backward(slot, cells[static_cast<std::size_t>(i)], dX.row(i).transpose(),
                             grads->encoder);
    }
  }
  return total;
}

Stage1Result stage1_train(const RelationalDataset& ds, std::vector<TupleGraph> graphs,
                          Stage1Model model, const GatConfig& config) {
  if (graphs.empty()) throw std::invalid_argument("stage1_train: no tuple graphs");
  const TaskKind task = ds.task().task;
  Stage1Result result;
  if (task == TaskKind::regression) {
    double sum = 0.0, sq = 0.0;
    for (const auto& g : graphs) sum += g.label;
    result.label_mean = sum / static_cast<double>(graphs.size());
    for (const auto& g : graphs) sq += (g.label - result.label_mean) * (g.label - result.label_mean);
    result.label_std = std::max(std::sqrt(sq / static_cast<double>(graphs.size())), kStdEpsilon);
    for (auto& g : graphs) g.label = (g.label - result.label_mean) / result.label_std;
  }

  Adam adam(AdamConfig{.learning_rate = config.learning_rate});
  Stage1Model grads{model.encoder.zeros_like(), model.gat.zeros_like()};
  auto param_views = model.tensors();
  auto grad_views = grads.tensors();
  Rng rng(config.seed);
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  std::vector<TupleGraph> mb;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      mb.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k)
        mb.push_back(graphs[order[k]]);
      zero(grad_views);
      double loss = stage1_loss(ds, mb, model, task, &grads);
      if (!std::isfinite(loss))
        throw TrainingDiverged("stage 1 (" + graphs.front().table + "): non-finite loss at epoch " +
                               std::to_string(epoch) + ", batch starting " + std::to_string(start));
      epoch_total += loss;
      adam.step(param_views, grad_views);
      ++model.gat.version;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(graphs.size()));
  }

  // One record per distinct tuple, even when it carries several labels.
  std::vector<char> seen(ds.table(graphs.front().table).size(), 0);
  for (const auto& g : graphs) {
    if (seen[g.row]) continue;
    seen[g.row] = 1;
    TupleGraph fresh = g;
    const Tuple& t = ds.table(g.table).tuples().at(g.row);
    for (std::size_t i = 0; i < g.columns.size(); ++i)
      fresh.features.row(static_cast<Eigen::Index>(i)) =
          model.encoder.embed(model.encoder.slot_of(g.columns[i]), t.values[g.columns[i]]).transpose();
    result.records.push_back(attention_forward(fresh, model.gat).record);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace recognn
