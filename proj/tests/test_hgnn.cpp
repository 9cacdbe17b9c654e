#include <doctest.h>

#include "recognn/common.hpp"
#include "recognn/hgnn.hpp"
#include "support.hpp"

using namespace recognn;
using namespace testing;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (auto& x : m.reshaped()) x = standard_normal(rng);
  return m;
}

Eigen::MatrixXd elu(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0 ? v : std::expm1(v); });
}

HgnnConfig small(int d = 6, int layers = 2) {
  HgnnConfig c;
  c.d_model = d;
  c.layers = layers;
  c.seed = 5;
  return c;
}

// base nodes joined to two aux types, both directions, plus a few similarity edges
HeteroGraph random_graph(Rng& rng, TaskKind task, std::size_t total = 10) {
  const std::size_t nb = 4, na = 3, nc = total - nb - na;
  std::vector<Eigen::MatrixXd> f{random_matrix(nb, 3, rng), random_matrix(na, 2, rng), random_matrix(nc, 4, rng)};
  std::vector<EdgeSpec> edges;
  for (std::size_t b = 0; b < nb; ++b) {
    auto a = uniform_index(rng, na), c = uniform_index(rng, nc);
    edges.push_back({1, a, 0, b});
    edges.push_back({0, b, 1, a});
    edges.push_back({2, c, 0, b});
    edges.push_back({0, b, 2, c});
    if (b > 0) edges.push_back({0, b - 1, 0, b, Relation::similarity});
  }
  edges.push_back({2, nc - 1, 0, 0});
  std::vector<double> labels;
  for (std::size_t b = 0; b < nb; ++b)
    labels.push_back(task == TaskKind::classification ? double(b % 3) : 2.0 + standard_normal(rng));
  return make_graph(f, edges, task, task == TaskKind::classification ? 3 : 0, labels);
}

}  // namespace

TEST_CASE("a node without incoming edges only applies the self transform") {
  Rng rng(1);
  auto g = make_graph({random_matrix(3, 2, rng), random_matrix(2, 2, rng)}, {{1, 0, 0, 1}, {1, 1, 0, 1}},
                      TaskKind::classification, 2, {0, 1, 0});
  auto p = HgnnParams::create(g, small());
  auto f = hgnn_forward(g, p);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& h = f.states[l];
    Eigen::RowVectorXd expect = elu(h[0].row(0) * p.layers[l].self[0]);
    CHECK((f.states[l + 1][0].row(0) - expect).norm() < 1e-12);
    // node 1 additionally receives the aux message: Z differs by exactly m
    const auto& tr = f.trace[l];
    Eigen::RowVectorXd z1 = h[0].row(1) * p.layers[l].self[0] + tr.messages[0].row(1);
    CHECK((tr.Z[0].row(1) - z1).norm() < 1e-12);
    CHECK(tr.messages[0].row(0).isZero());
  }
}

TEST_CASE("attention normalizes within each edge type") {
  Rng rng(2);
  // base 0 has one aux1 neighbor and three aux2 neighbors; base 1 has three identical aux1 neighbors
  Eigen::MatrixXd a1 = random_matrix(4, 2, rng);
  a1.row(2) = a1.row(1);
  a1.row(3) = a1.row(1);
  auto g = make_graph({random_matrix(2, 2, rng), a1, random_matrix(3, 2, rng)},
                      {{1, 0, 0, 0}, {2, 0, 0, 0}, {2, 1, 0, 0}, {2, 2, 0, 0}, {1, 1, 0, 1}, {1, 2, 0, 1}, {1, 3, 0, 1}},
                      TaskKind::classification, 2, {0, 1});
  auto p = HgnnParams::create(g, small());
  auto f = hgnn_forward(g, p);
  REQUIRE(g.edge_types.size() == 2);
  for (const auto& tr : f.trace) {
    const auto& aux1 = tr.attention[0];
    const auto& aux2 = tr.attention[1];
    CHECK(aux1(0) == 1.0);  // the only aux1 edge into base 0
    for (int k = 1; k < 4; ++k) CHECK(aux1(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(aux2.sum() == doctest::Approx(1.0));
    CHECK(aux2.minCoeff() > 0.0);
  }

  // the uniform ablation ignores the scorer
  auto cfg = small();
  cfg.uniform_attention = true;
  auto u = HgnnParams::create(g, cfg);
  auto fu = hgnn_forward(g, u);
  CHECK((fu.trace[0].attention[1].array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("stage-two gradients match central differences") {
  Rng rng(3);
  for (TaskKind task : {TaskKind::classification, TaskKind::regression}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto g = random_graph(rng, task);
      auto cfg = small(5, 2);
      cfg.seed = 40 + trial;
      auto p = HgnnParams::create(g, cfg);
      std::vector<std::size_t> nodes{0, 1, 2, 3};
      auto grads = p.zeros_like();
      hgnn_loss(g, p, nodes, &grads);
      auto r = check_gradients(p.tensors(), grads.tensors(), [&] { return hgnn_loss(g, p, nodes, nullptr); });
      CHECK(r.checked > 100);
      CHECK_MESSAGE(r.failed == 0, r.first_failure);
    }
  }
}

TEST_CASE("outputs depend only on the L-hop neighborhood") {
  Rng rng(4);
  // a path of base nodes 0 - 1 - 2 - 3 - 4 - 5
  std::vector<EdgeSpec> edges;
  for (std::size_t i = 0; i + 1 < 6; ++i) {
    edges.push_back({0, i, 0, i + 1, Relation::similarity});
    edges.push_back({0, i + 1, 0, i, Relation::similarity});
  }
  Eigen::MatrixXd x = random_matrix(6, 3, rng);
  auto g = make_graph({x}, edges, TaskKind::classification, 2, {0, 1, 0, 1, 0, 1});
  auto p = HgnnParams::create(g, small(4, 2));
  auto before = hgnn_forward(g, p).output;
  g.features[0].row(5) *= -3.0;
  auto after = hgnn_forward(g, p).output;
  for (int i = 0; i <= 2; ++i) CHECK(after.row(i) == before.row(i));
  CHECK(after.row(3) != before.row(3));
  CHECK(after.row(5) != before.row(5));
}

TEST_CASE("head, predictions and errors") {
  Rng rng(5);
  auto g = random_graph(rng, TaskKind::classification);
  auto p = HgnnParams::create(g, small());
  auto probs = predict(g, p, {0, 1, 2, 3});
  for (Eigen::Index r = 0; r < probs.rows(); ++r) CHECK(probs.row(r).sum() == doctest::Approx(1.0));
  CHECK(predict(g, p, {0, 1, 2, 3}) == probs);
  CHECK_THROWS_AS(predict(g, p, {4}), std::out_of_range);

  auto gr = random_graph(rng, TaskKind::regression);
  for (auto& l : gr.labels) l = 0.0;
  auto pr = HgnnParams::create(gr, small());
  pr.head.setZero();
  pr.head_bias.setZero();
  pr.target_mean = 0.0;
  pr.target_std = 1.0;
  CHECK(hgnn_loss(gr, pr, {0, 1, 2, 3}, nullptr) == 0.0);

  auto other = random_graph(rng, TaskKind::classification);
  other.types[1].name = "renamed";
  CHECK_THROWS_AS(hgnn_forward(other, p), std::invalid_argument);
}

TEST_CASE("training improves the loss and the checkpoint is the best validation epoch") {
  Rng rng(6);
  // label is the sign of the aux neighbor's first feature; base features are noise
  const std::size_t nb = 60, na = 20;
  Eigen::MatrixXd aux = random_matrix(na, 2, rng);
  std::vector<EdgeSpec> edges;
  std::vector<double> labels;
  for (std::size_t b = 0; b < nb; ++b) {
    auto a = uniform_index(rng, na);
    edges.push_back({1, a, 0, b});
    labels.push_back(aux(static_cast<Eigen::Index>(a), 0) > 0 ? 1.0 : 0.0);
  }
  auto g = make_graph({random_matrix(nb, 2, rng), aux}, edges, TaskKind::classification, 2, labels);
  for (std::size_t b = 0; b < nb; ++b) g.split[b] = b % 5 == 0 ? Split::val : (b % 5 == 1 ? Split::test : Split::train);
  auto cfg = small(8, 2);
  cfg.epochs = 120;
  cfg.learning_rate = 1e-2;
  auto r = stage2_train(g, cfg);
  REQUIRE(r.train_loss.size() == 120);
  CHECK(r.train_loss.back() < r.train_loss.front());
  CHECK(r.val_loss[r.best_epoch] == *std::min_element(r.val_loss.begin(), r.val_loss.end()));
  auto val = g.base_nodes(Split::val);
  CHECK(hgnn_loss(g, r.params, val, nullptr) / val.size() == doctest::Approx(r.val_loss[r.best_epoch]));
}

TEST_CASE("feature selection ranking") {
  Rng rng(7);
  // aux1 and aux2 send messages into base; aux3 only receives
  auto g = make_graph({random_matrix(3, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng),
                       random_matrix(2, 2, rng)},
                      {{1, 0, 0, 0}, {1, 1, 0, 1}, {2, 0, 0, 2}, {2, 1, 0, 0}, {0, 0, 3, 0}},
                      TaskKind::classification, 2, {0, 1, 0});
  auto p = HgnnParams::create(g, small());
  auto imp = edge_importance(g, p);
  auto rep = feature_selection_report(g, imp);
  REQUIRE(rep.ranking.size() == 3);
  CHECK(rep.ranking.back().node_type == "aux3");
  CHECK(rep.ranking.back().importance == 0.0);
  CHECK(rep.ranking[0].importance >= rep.ranking[1].importance);
  // shares at each base node sum to one across the incoming edges
  std::vector<double> total(3, 0.0);
  for (std::size_t e = 0; e < g.edge_types.size(); ++e)
    if (g.edge_types[e].dst_type == 0)
      for (std::size_t k = 0; k < g.edge_types[e].size(); ++k) total[g.edge_types[e].dst[k]] += imp.share[e][k];
  for (double t : total) CHECK(t == doctest::Approx(1.0));

  // a single auxiliary type ranks first with everything
  auto one = make_graph({random_matrix(2, 2, rng), random_matrix(2, 2, rng)}, {{1, 0, 0, 0}, {1, 1, 0, 1}},
                        TaskKind::classification, 2, {0, 1});
  auto rep1 = feature_selection_report(one, edge_importance(one, HgnnParams::create(one, small())));
  REQUIRE(rep1.ranking.size() == 1);
  CHECK(rep1.ranking[0].importance == doctest::Approx(1.0));

  // ties break by name
  auto none = make_graph({random_matrix(2, 2, rng), random_matrix(1, 2, rng), random_matrix(1, 2, rng)},
                         {{0, 0, 2, 0}, {0, 1, 1, 0}}, TaskKind::classification, 2, {0, 1});
  auto rep0 = feature_selection_report(none, edge_importance(none, HgnnParams::create(none, small())));
  REQUIRE(rep0.ranking.size() == 2);
  CHECK(rep0.ranking[0].node_type == "aux1");
  CHECK(rep0.ranking[1].node_type == "aux2");
  CHECK(rep.to_text().find("aux1") != std::string::npos);
}

TEST_CASE("parameters save and load") {
  Rng rng(8);
  auto g = random_graph(rng, TaskKind::regression);
  auto p = HgnnParams::create(g, small());
  p.target_mean = 1.5;
  TempDir dir;
  p.save(dir / "model.bin");
  auto q = HgnnParams::load(dir / "model.bin");
  CHECK(hgnn_forward(g, q).output == hgnn_forward(g, p).output);
  CHECK(q.node_types == p.node_types);
  CHECK(q.edge_types == p.edge_types);
}
