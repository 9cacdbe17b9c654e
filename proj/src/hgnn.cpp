#include "recognn/hgnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "recognn/binio.hpp"
#include "recognn/common.hpp"

namespace recognn {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void fill_uniform(MatrixXd& m, double bound, Rng& rng) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -bound, bound);
}

void fill_uniform(VectorXd& v, double bound, Rng& rng) {
  for (Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, -bound, bound);
}

TensorView view(const std::string& name, MatrixXd& m) {
  return {name, std::span<double>(m.data(), static_cast<std::size_t>(m.size()))};
}

TensorView view(const std::string& name, VectorXd& v) {
  return {name, std::span<double>(v.data(), static_cast<std::size_t>(v.size()))};
}

MatrixXd elu(const MatrixXd& z) {
  return z.unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
}

double leaky(double x, double slope) { return x > 0 ? x : slope * x; }

std::vector<std::string> node_type_names(const HeteroGraph& g) {
  std::vector<std::string> out;
  for (const auto& t : g.types) out.push_back(t.name);
  return out;
}

std::vector<std::string> edge_type_names(const HeteroGraph& g) {
  std::vector<std::string> out;
  for (const auto& e : g.edge_types) out.push_back(e.key.str());
  return out;
}

// Row-wise softmax of logits into probabilities.
MatrixXd softmax_rows(const MatrixXd& logits) {
  MatrixXd p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    double s = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) s += (p(i, c) = std::exp(logits(i, c) - m));
    p.row(i) /= s;
  }
  return p;
}

struct LossTerms {
  double loss = 0.0;
  MatrixXd dlogits;  // base nodes x outputs, zero outside the selected nodes
};

LossTerms loss_terms(const HeteroGraph& g, const HgnnParams& params, const MatrixXd& logits,
                     const std::vector<std::size_t>& nodes, bool want_grad) {
  LossTerms out;
  if (want_grad) out.dlogits = MatrixXd::Zero(logits.rows(), logits.cols());
  if (params.task == TaskKind::classification) {
    MatrixXd p = softmax_rows(logits);
    for (auto i : nodes) {
      auto r = static_cast<Index>(i);
      auto y = static_cast<Index>(std::llround(g.labels[i]));
      double m = logits.row(r).maxCoeff();
      double lse = m + std::log((logits.row(r).array() - m).exp().sum());
      out.loss += lse - logits(r, y);
      if (want_grad) {
        out.dlogits.row(r) = p.row(r);
        out.dlogits(r, y) -= 1.0;
      }
    }
  } else {
    for (auto i : nodes) {
      auto r = static_cast<Index>(i);
      double t = (g.labels[i] - params.target_mean) / params.target_std;
      double d = logits(r, 0) - t;
      out.loss += d * d;
      if (want_grad) out.dlogits(r, 0) = 2.0 * d;
    }
  }
  return out;
}

void backward(const HeteroGraph& g, const HgnnParams& params, const HgnnForward& fwd,
              const MatrixXd& dlogits, HgnnParams& grads) {
  const std::size_t L = params.layers.size();
  const std::size_t T = g.types.size();
  const auto& top = fwd.states[L][0];
  grads.head += top.transpose() * dlogits;
  grads.head_bias += dlogits.colwise().sum().transpose();

  std::vector<MatrixXd> dH(T);
  for (std::size_t t = 0; t < T; ++t) dH[t] = MatrixXd::Zero(fwd.states[L][t].rows(), fwd.states[L][t].cols());
  dH[0] = dlogits * params.head.transpose();

  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = params.layers[l];
    auto& glayer = grads.layers[l];
    const auto& trace = fwd.trace[l];
    const auto& H = fwd.states[l];
    std::vector<MatrixXd> dPrev(T);
    std::vector<MatrixXd> dZ(T);
    for (std::size_t t = 0; t < T; ++t) {
      // ELU'(z) = 1 for z > 0, else exp(z) = ELU(z) + 1.
      const auto& Z = trace.Z[t];
      MatrixXd dz = dH[t];
      for (Index j = 0; j < Z.cols(); ++j)
        for (Index i = 0; i < Z.rows(); ++i)
          if (Z(i, j) <= 0) dz(i, j) *= std::exp(Z(i, j));
      glayer.self[t] += H[t].transpose() * dz;
      dPrev[t] = dz * layer.self[t].transpose();
      dZ[t] = std::move(dz);
    }
    for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
      const auto& et = g.edge_types[e];
      const auto& dz = dZ[et.dst_type];
      const auto& Q = trace.Q[e];
      const auto& att = trace.attention[e];
      MatrixXd dQ = MatrixXd::Zero(Q.rows(), Q.cols());
      VectorXd datt(static_cast<Index>(et.size()));
      for (std::size_t k = 0; k < et.size(); ++k) {
        auto s = static_cast<Index>(et.src[k]);
        auto d = static_cast<Index>(et.dst[k]);
        datt(static_cast<Index>(k)) = dz.row(d).dot(Q.row(s));
        dQ.row(s) += att(static_cast<Index>(k)) * dz.row(d);
      }
      const auto& Hs = H[et.src_type];
      glayer.message[e] += Hs.transpose() * dQ;
      dPrev[et.src_type] += dQ * layer.message[e].transpose();

      if (params.uniform_attention) continue;
      const std::size_t nd = g.types[et.dst_type].count;
      VectorXd ds_src = VectorXd::Zero(Hs.rows());
      VectorXd ds_dst = VectorXd::Zero(static_cast<Index>(nd));
      for (std::size_t v = 0; v < nd; ++v) {
        const auto b = et.in_offsets[v], end = et.in_offsets[v + 1];
        if (b == end) continue;
        double dot = 0.0;
        for (auto p = b; p < end; ++p) {
          auto k = static_cast<Index>(et.in_edges[p]);
          dot += att(k) * datt(k);
        }
        for (auto p = b; p < end; ++p) {
          auto kk = et.in_edges[p];
          auto k = static_cast<Index>(kk);
          double dpre = att(k) * (datt(k) - dot) * (trace.pre[e](k) > 0 ? 1.0 : params.leaky_slope);
          ds_src(static_cast<Index>(et.src[kk])) += dpre;
          ds_dst(static_cast<Index>(v)) += dpre;
        }
      }
      const auto& Hd = H[et.dst_type];
      glayer.score_src[e] += Hs.transpose() * ds_src;
      glayer.score_dst[e] += Hd.transpose() * ds_dst;
      dPrev[et.src_type] += ds_src * layer.score_src[e].transpose();
      dPrev[et.dst_type] += ds_dst * layer.score_dst[e].transpose();
    }
    dH = std::move(dPrev);
  }
  for (std::size_t t = 0; t < T; ++t) {
    grads.input[t] += g.features[t].transpose() * dH[t];
    grads.input_bias[t] += dH[t].colwise().sum().transpose();
  }
}

}  // namespace

HgnnParams HgnnParams::create(const HeteroGraph& g, const HgnnConfig& config) {
  if (config.d_model <= 0 || config.layers <= 0)
    throw std::invalid_argument("stage 2 needs positive d_model and layer count");
  Rng rng(config.seed);
  HgnnParams p;
  const int d = config.d_model;
  const double bd = 1.0 / std::sqrt(static_cast<double>(d));
  p.task = g.task;
  p.leaky_slope = config.leaky_slope;
  p.uniform_attention = config.uniform_attention;
  p.node_types = node_type_names(g);
  p.edge_types = edge_type_names(g);
  for (std::size_t t = 0; t < g.types.size(); ++t) {
    MatrixXd w(static_cast<Index>(g.types[t].width), d);
    fill_uniform(w, 1.0 / std::sqrt(std::max<double>(1.0, static_cast<double>(g.types[t].width))), rng);
    p.input.push_back(std::move(w));
    p.input_bias.push_back(VectorXd::Zero(d));
  }
  for (int l = 0; l < config.layers; ++l) {
    HgnnLayer layer;
    for (std::size_t t = 0; t < g.types.size(); ++t) {
      MatrixXd w(d, d);
      fill_uniform(w, bd, rng);
      layer.self.push_back(std::move(w));
    }
    for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
      MatrixXd m(d, d);
      fill_uniform(m, bd, rng);
      VectorXd a(d), b(d);
      fill_uniform(a, bd, rng);
      fill_uniform(b, bd, rng);
      layer.message.push_back(std::move(m));
      layer.score_src.push_back(std::move(a));
      layer.score_dst.push_back(std::move(b));
    }
    p.layers.push_back(std::move(layer));
  }
  const int outputs = g.task == TaskKind::classification ? std::max(2, g.class_count) : 1;
  p.head.resize(d, outputs);
  fill_uniform(p.head, bd, rng);
  p.head_bias = VectorXd::Zero(outputs);
  if (g.task == TaskKind::regression) {
    auto train = g.base_nodes(Split::train);
    if (!train.empty()) {
      double mean = 0.0;
      for (auto i : train) mean += g.labels[i];
      mean /= static_cast<double>(train.size());
      double var = 0.0;
      for (auto i : train) var += (g.labels[i] - mean) * (g.labels[i] - mean);
      var /= static_cast<double>(train.size());
      p.target_mean = mean;
      p.target_std = var > 0 ? std::sqrt(var) : 1.0;
    }
  }
  return p;
}

HgnnParams HgnnParams::zeros_like() const {
  HgnnParams z = *this;
  for (auto& t : z.tensors())
    std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<TensorView> HgnnParams::tensors() {
  std::vector<TensorView> out;
  for (std::size_t t = 0; t < input.size(); ++t) {
    out.push_back(view("in." + node_types[t], input[t]));
    out.push_back(view("in_bias." + node_types[t], input_bias[t]));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto pre = "l" + std::to_string(l) + ".";
    auto& layer = layers[l];
    for (std::size_t t = 0; t < layer.self.size(); ++t)
      out.push_back(view(pre + "self." + node_types[t], layer.self[t]));
    for (std::size_t e = 0; e < layer.message.size(); ++e) {
      out.push_back(view(pre + "msg." + edge_types[e], layer.message[e]));
      out.push_back(view(pre + "att_src." + edge_types[e], layer.score_src[e]));
      out.push_back(view(pre + "att_dst." + edge_types[e], layer.score_dst[e]));
    }
  }
  out.push_back(view("head", head));
  out.push_back(view("head_bias", head_bias));
  return out;
}

void HgnnParams::check_compatible(const HeteroGraph& g) const {
  if (node_type_names(g) != node_types || edge_type_names(g) != edge_types)
    throw std::invalid_argument("stage-2 parameters were trained on a graph with different types");
  for (std::size_t t = 0; t < g.types.size(); ++t)
    if (static_cast<std::size_t>(input[t].rows()) != g.types[t].width)
      throw std::invalid_argument("feature width mismatch for node type " + g.types[t].name);
}

void HgnnParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binio::Writer w(out);
  w.magic("recognn.hgnn", 1);
  w.u32(task == TaskKind::classification ? 0 : 1);
  w.f64(leaky_slope);
  w.u32(uniform_attention ? 1 : 0);
  w.f64(target_mean);
  w.f64(target_std);
  w.u64(node_types.size());
  for (const auto& n : node_types) w.str(n);
  w.u64(edge_types.size());
  for (const auto& n : edge_types) w.str(n);
  w.u64(layers.size());
  for (std::size_t t = 0; t < input.size(); ++t) {
    w.matrix(input[t]);
    w.vector(input_bias[t]);
  }
  for (const auto& layer : layers) {
    for (const auto& m : layer.self) w.matrix(m);
    for (std::size_t e = 0; e < layer.message.size(); ++e) {
      w.matrix(layer.message[e]);
      w.vector(layer.score_src[e]);
      w.vector(layer.score_dst[e]);
    }
  }
  w.matrix(head);
  w.vector(head_bias);
}

HgnnParams HgnnParams::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  binio::Reader r(in);
  r.magic("recognn.hgnn");
  HgnnParams p;
  p.task = r.u32() == 0 ? TaskKind::classification : TaskKind::regression;
  p.leaky_slope = r.f64();
  p.uniform_attention = r.u32() != 0;
  p.target_mean = r.f64();
  p.target_std = r.f64();
  p.node_types.resize(r.u64());
  for (auto& n : p.node_types) n = r.str();
  p.edge_types.resize(r.u64());
  for (auto& n : p.edge_types) n = r.str();
  p.layers.resize(r.u64());
  for (std::size_t t = 0; t < p.node_types.size(); ++t) {
    p.input.push_back(r.matrix());
    p.input_bias.push_back(r.vector());
  }
  for (auto& layer : p.layers) {
    for (std::size_t t = 0; t < p.node_types.size(); ++t) layer.self.push_back(r.matrix());
    for (std::size_t e = 0; e < p.edge_types.size(); ++e) {
      layer.message.push_back(r.matrix());
      layer.score_src.push_back(r.vector());
      layer.score_dst.push_back(r.vector());
    }
  }
  p.head = r.matrix();
  p.head_bias = r.vector();
  return p;
}

std::vector<MatrixXd> message_pass(const HeteroGraph& g, const HgnnParams& params, std::size_t layer_index,
                                   const std::vector<MatrixXd>& states, LayerTrace* trace) {
  const auto& layer = params.layers.at(layer_index);
  const std::size_t T = g.types.size();
  std::vector<MatrixXd> Z(T);
  for (std::size_t t = 0; t < T; ++t) Z[t] = states[t] * layer.self[t];
  if (trace) {
    trace->Q.assign(g.edge_types.size(), {});
    trace->pre.assign(g.edge_types.size(), {});
    trace->attention.assign(g.edge_types.size(), {});
    trace->messages.assign(g.edge_types.size(), {});
  }
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    const auto& Hs = states[et.src_type];
    const auto& Hd = states[et.dst_type];
    MatrixXd Q = Hs * layer.message[e];
    const auto n_edges = static_cast<Index>(et.size());
    VectorXd pre(n_edges), att(n_edges);
    VectorXd s_src = Hs * layer.score_src[e];
    VectorXd s_dst = Hd * layer.score_dst[e];
    for (std::size_t k = 0; k < et.size(); ++k)
      pre(static_cast<Index>(k)) = s_src(static_cast<Index>(et.src[k])) + s_dst(static_cast<Index>(et.dst[k]));

    const std::size_t nd = g.types[et.dst_type].count;
    MatrixXd msg = MatrixXd::Zero(static_cast<Index>(nd), Q.cols());
    for (std::size_t v = 0; v < nd; ++v) {
      const auto b = et.in_offsets[v], end = et.in_offsets[v + 1];
      if (b == end) continue;
      if (params.uniform_attention) {
        const double w = 1.0 / static_cast<double>(end - b);
        for (auto p = b; p < end; ++p) att(static_cast<Index>(et.in_edges[p])) = w;
      } else {
        double m = -std::numeric_limits<double>::infinity();
        for (auto p = b; p < end; ++p)
          m = std::max(m, leaky(pre(static_cast<Index>(et.in_edges[p])), params.leaky_slope));
        double s = 0.0;
        for (auto p = b; p < end; ++p) {
          auto k = static_cast<Index>(et.in_edges[p]);
          s += (att(k) = std::exp(leaky(pre(k), params.leaky_slope) - m));
        }
        for (auto p = b; p < end; ++p) att(static_cast<Index>(et.in_edges[p])) /= s;
      }
      for (auto p = b; p < end; ++p) {
        auto kk = et.in_edges[p];
        msg.row(static_cast<Index>(v)) += att(static_cast<Index>(kk)) * Q.row(static_cast<Index>(et.src[kk]));
      }
    }
    Z[et.dst_type] += msg;
    if (trace) {
      trace->Q[e] = std::move(Q);
      trace->pre[e] = std::move(pre);
      trace->attention[e] = std::move(att);
      trace->messages[e] = std::move(msg);
    }
  }
  std::vector<MatrixXd> out(T);
  for (std::size_t t = 0; t < T; ++t) out[t] = elu(Z[t]);
  if (trace) trace->Z = std::move(Z);
  return out;
}

HgnnForward hgnn_forward(const HeteroGraph& g, const HgnnParams& params) {
  params.check_compatible(g);
  HgnnForward f;
  std::vector<MatrixXd> h0(g.types.size());
  for (std::size_t t = 0; t < g.types.size(); ++t)
    h0[t] = (g.features[t] * params.input[t]).rowwise() + params.input_bias[t].transpose();
  f.states.push_back(std::move(h0));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerTrace trace;
    auto next = message_pass(g, params, l, f.states.back(), &trace);
    f.trace.push_back(std::move(trace));
    f.states.push_back(std::move(next));
  }
  f.logits = (f.states.back()[0] * params.head).rowwise() + params.head_bias.transpose();
  if (params.task == TaskKind::classification) {
    f.output = softmax_rows(f.logits);
  } else {
    f.output = (f.logits.array() * params.target_std + params.target_mean).matrix();
  }
  return f;
}

double hgnn_loss(const HeteroGraph& g, const HgnnParams& params, const std::vector<std::size_t>& base_nodes,
                 HgnnParams* grads) {
  auto fwd = hgnn_forward(g, params);
  auto terms = loss_terms(g, params, fwd.logits, base_nodes, grads != nullptr);
  if (grads) backward(g, params, fwd, terms.dlogits, *grads);
  return terms.loss;
}

Eigen::MatrixXd predict(const HeteroGraph& g, const HgnnParams& params, const std::vector<std::size_t>& base_nodes) {
  for (auto i : base_nodes)
    if (i >= g.base_count()) throw std::out_of_range("node " + std::to_string(i) + " is not a base node");
  auto fwd = hgnn_forward(g, params);
  MatrixXd out(static_cast<Index>(base_nodes.size()), fwd.output.cols());
  for (std::size_t r = 0; r < base_nodes.size(); ++r)
    out.row(static_cast<Index>(r)) = fwd.output.row(static_cast<Index>(base_nodes[r]));
  return out;
}

EdgeImportance edge_importance(const HeteroGraph& g, const HgnnParams& params) {
  auto fwd = hgnn_forward(g, params);
  const auto& trace = fwd.trace.back();
  EdgeImportance imp;
  imp.attention.resize(g.edge_types.size());
  imp.share.resize(g.edge_types.size());

  const std::size_t nb = g.base_count();
  std::vector<double> mass(nb, 0.0);
  std::vector<std::vector<double>> weight(g.edge_types.size());
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    if (et.dst_type != 0) continue;
    weight[e].resize(et.size());
    for (std::size_t k = 0; k < et.size(); ++k) {
      double w = trace.attention[e](static_cast<Index>(k)) *
                 trace.Q[e].row(static_cast<Index>(et.src[k])).norm();
      weight[e][k] = w;
      mass[et.dst[k]] += w;
    }
  }
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    EdgeTypeImportance agg;
    agg.edge_type = et.key.str();
    agg.src_type = et.key.src_type;
    if (et.dst_type == 0) {
      auto& att = imp.attention[e];
      auto& share = imp.share[e];
      att.resize(et.size());
      share.resize(et.size());
      std::vector<double> node_share(nb, 0.0);
      double att_sum = 0.0;
      for (std::size_t k = 0; k < et.size(); ++k) {
        att[k] = trace.attention[e](static_cast<Index>(k));
        share[k] = mass[et.dst[k]] > 0 ? weight[e][k] / mass[et.dst[k]] : 0.0;
        att_sum += att[k];
        node_share[et.dst[k]] += share[k];
      }
      std::size_t reached = 0;
      double share_sum = 0.0;
      for (std::size_t v = 0; v < nb; ++v) {
        if (et.in_offsets[v] == et.in_offsets[v + 1]) continue;
        ++reached;
        share_sum += node_share[v];
      }
      agg.edges = et.size();
      agg.mean_attention = et.size() ? att_sum / static_cast<double>(et.size()) : 0.0;
      agg.mean_share = reached ? share_sum / static_cast<double>(reached) : 0.0;
    }
    imp.per_type.push_back(std::move(agg));
  }
  return imp;
}

Stage2Result stage2_train(const HeteroGraph& g, const HgnnConfig& config) {
  if (g.base_count() == 0) throw std::invalid_argument("stage 2: empty base table");
  Stage2Result result;
  HgnnParams params = HgnnParams::create(g, config);
  HgnnParams grads = params.zeros_like();
  auto train = g.base_nodes(Split::train);
  auto val = g.base_nodes(Split::val);
  if (train.empty()) throw std::invalid_argument("stage 2: no training nodes");

  Adam adam({config.learning_rate});
  auto p_views = params.tensors();
  auto g_views = grads.tensors();
  double best = std::numeric_limits<double>::infinity();
  result.params = params;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    zero(g_views);
    auto fwd = hgnn_forward(g, params);
    auto tr = loss_terms(g, params, fwd.logits, train, true);
    if (!std::isfinite(tr.loss))
      throw Stage2Diverged("stage 2: non-finite training loss at epoch " + std::to_string(epoch));
    double v = val.empty() ? 0.0 : loss_terms(g, params, fwd.logits, val, false).loss;
    result.train_loss.push_back(tr.loss / static_cast<double>(train.size()));
    result.val_loss.push_back(val.empty() ? 0.0 : v / static_cast<double>(val.size()));
    if (!val.empty() && v < best) {
      best = v;
      result.params = params;
      result.best_epoch = epoch;
    }
    backward(g, params, fwd, tr.dlogits, grads);
    adam.step(p_views, g_views);
    if (!all_finite(p_views))
      throw Stage2Diverged("stage 2: non-finite parameters after epoch " + std::to_string(epoch));
  }
  if (val.empty()) {
    result.params = params;
    result.best_epoch = config.epochs ? config.epochs - 1 : 0;
  } else if (config.epochs > 0) {
    // The final step's parameters have not been validated yet.
    double v = hgnn_loss(g, params, val, nullptr);
    if (v < best) {
      result.params = params;
      result.best_epoch = config.epochs;
    }
  }
  result.importance = edge_importance(g, result.params);
  return result;
}

std::string FeatureSelectionReport::to_text() const {
  std::ostringstream out;
  out << "rank  importance  edges  sub-table (attributes)\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& r = ranking[i];
    char buf[64];
    std::snprintf(buf, sizeof buf, "%4zu  %10.6f  %5zu  ", i + 1, r.importance, r.edges);
    out << buf << r.node_type << " (";
    for (std::size_t a = 0; a < r.attributes.size(); ++a) out << (a ? ", " : "") << r.attributes[a];
    out << ")\n";
  }
  out << "\nedge type                           mean attention  mean share  edges\n";
  for (const auto& e : per_edge_type) {
    if (e.edges == 0) continue;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-34s  %14.6f  %10.6f  %5zu", e.edge_type.c_str(), e.mean_attention,
                  e.mean_share, e.edges);
    out << buf << "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", similarity_share);
  out << "\nsimilarity share: " << buf << "\n";
  return out.str();
}

std::string FeatureSelectionReport::to_json() const {
  nlohmann::json j;
  j["ranking"] = nlohmann::json::array();
  for (const auto& r : ranking)
    j["ranking"].push_back({{"node_type", r.node_type},
                            {"table", r.table},
                            {"attributes", r.attributes},
                            {"importance", r.importance},
                            {"edges", r.edges}});
  j["edge_types"] = nlohmann::json::array();
  for (const auto& e : per_edge_type)
    j["edge_types"].push_back({{"edge_type", e.edge_type},
                               {"mean_attention", e.mean_attention},
                               {"mean_share", e.mean_share},
                               {"edges", e.edges}});
  j["similarity_share"] = similarity_share;
  return j.dump(2) + "\n";
}

FeatureSelectionReport feature_selection_report(const HeteroGraph& g, const EdgeImportance& imp) {
  FeatureSelectionReport report;
  report.per_edge_type = imp.per_type;
  for (std::size_t t = 1; t < g.types.size(); ++t) {
    SubTableImportance s;
    s.node_type = g.types[t].name;
    s.table = g.types[t].table;
    s.attributes = g.types[t].attributes;
    for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
      const auto& et = g.edge_types[e];
      if (et.src_type != t || et.dst_type != 0) continue;
      s.importance += imp.per_type[e].mean_share;
      s.edges += imp.per_type[e].edges;
    }
    report.ranking.push_back(std::move(s));
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.node_type < b.node_type;
  });
  for (std::size_t e = 0; e < g.edge_types.size(); ++e)
    if (g.edge_types[e].key.relation == Relation::similarity) report.similarity_share += imp.per_type[e].mean_share;
  return report;
}

}  // namespace recognn
