#include <doctest.h>

#include <map>

#include "recognn/common.hpp"
#include "recognn/metrics.hpp"
#include "recognn/synthetic.hpp"
#include "support.hpp"

using namespace recognn;
using namespace testing;

namespace {

double number(const Cell& c) { return std::get<double>(c); }

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns().size(); ++i)
    if (t.columns()[i].name == name) return i;
  FAIL("no column " << name);
  return 0;
}

}  // namespace

TEST_CASE("without noise the label is the planted rule of the joined pair") {
  for (LabelRule rule : {LabelRule::xor_sign, LabelRule::and_sign}) {
    SyntheticSpec spec;
    spec.base_tuples = 500;
    spec.label_noise = 0.0;
    spec.rule = rule;
    spec.seed = 4;
    auto ds = generate_synthetic(spec);
    const auto& cust = ds.base();
    const auto& events = ds.table("events");
    std::map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < events.size(); ++i) by_key[events.tuples()[i].key] = i;
    const auto fk = column(cust, "e_id"), pa = column(events, "p_a"), pb = column(events, "p_b");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < cust.size(); ++i) {
      const auto& e = events.tuples()[by_key.at(cell_to_string(cust.tuples()[i].values[fk]))];
      agree += planted_label(rule, number(e.values[pa]), number(e.values[pb])) == ds.label(i);
    }
    CHECK(agree == cust.size());
    CHECK(ds.report().total_dangling() == 0);
  }
  CHECK(planted_label(LabelRule::xor_sign, 1.0, -1.0) == 1);
  CHECK(planted_label(LabelRule::xor_sign, -1.0, -1.0) == 0);
  CHECK(planted_label(LabelRule::and_sign, 1.0, 1.0) == 1);
  CHECK(planted_label(LabelRule::and_sign, 1.0, -1.0) == 0);
}

TEST_CASE("base attributes alone carry no signal") {
  SyntheticSpec spec;
  spec.base_tuples = 2000;
  spec.seed = 9;
  auto ds = generate_synthetic(spec);
  const auto& cust = ds.base();
  const auto n1 = column(cust, "b_num1"), n2 = column(cust, "b_num2"), bc = column(cust, "b_cat");
  std::map<std::string, int> cats;
  for (const auto& t : cust.tuples()) cats.emplace(cell_to_string(t.values[bc]), int(cats.size()));
  const int d = 3 + int(cats.size());
  auto features = [&](std::size_t i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    const auto& t = cust.tuples()[i];
    x << 1.0, number(t.values[n1]), number(t.values[n2]), Eigen::VectorXd::Zero(d - 3);
    x[3 + cats.at(cell_to_string(t.values[bc]))] = 1.0;
    return x;
  };
  // logistic regression by gradient descent on the first half, scored on the second
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  const std::size_t half = cust.size() / 2;
  for (int it = 0; it < 300; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < half; ++i) {
      auto x = features(i);
      g += (1.0 / (1.0 + std::exp(-w.dot(x))) - ds.label(i)) * x;
    }
    w -= 0.5 * g / double(half);
  }
  std::vector<double> s;
  std::vector<bool> pos;
  for (std::size_t i = half; i < cust.size(); ++i) {
    s.push_back(w.dot(features(i)));
    pos.push_back(ds.label(i) == 1);
  }
  CHECK(*auc_roc(s, pos) <= 0.55);
}

TEST_CASE("generation is reproducible byte for byte") {
  SyntheticSpec spec;
  spec.base_tuples = 300;
  spec.seed = 21;
  TempDir a, b;
  write_synthetic(spec, a / "d");
  write_synthetic(spec, b / "d");
  for (const auto& f : std::filesystem::directory_iterator(a / "d"))
    CHECK(slurp(f.path()) == slurp(b / "d" / f.path().filename()));
  auto loaded = load_dataset(a / "d");
  CHECK(loaded.tables().size() == 4);
  CHECK(loaded.report().total_dangling() == 0);
  spec.seed = 22;
  TempDir c;
  write_synthetic(spec, c / "d");
  CHECK(slurp(c / "d" / "events.csv") != slurp(a / "d" / "events.csv"));

  spec.base_tuples = 0;
  CHECK_THROWS(spec.validate());
}
