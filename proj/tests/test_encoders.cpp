#include <doctest.h>

#include <sstream>

#include "recognn/common.hpp"
#include "recognn/encoders.hpp"
#include "support.hpp"

using namespace recognn;
using namespace testing;

namespace {

Table mixed_table() {
  return make_table("t", {pk(), num("a"), cat("c"), txt("s"), num("flat")}, false,
                    {{"1", 1.0, "red", "hello world", 5.0},
                     {"2", 2.0, "blue", "hello there", 5.0},
                     {"3", 6.0, "red", std::monostate{}, 5.0},
                     {"4", std::monostate{}, std::monostate{}, "", 5.0}});
}

TableEncoder mixed_encoder(std::uint64_t seed = 3) {
  return TableEncoder::create(mixed_table(), {1, 2, 3, 4}, EncoderDims{}, seed);
}

// Independent signed 3-gram hashing with ^/$ boundary marks.
Eigen::VectorXd reference_text(const std::string& s, int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  if (s.empty()) return v;
  const std::string p = "^" + s + "$";
  for (std::size_t i = 0; i + 3 <= p.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int k = 0; k < 3; ++k) {
      h ^= static_cast<unsigned char>(p[i + k]);
      h *= 0x100000001b3ULL;
    }
    v[static_cast<Eigen::Index>(h % d)] += (h >> 63) ? -1.0 : 1.0;
  }
  return v / v.norm();
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("numerical encoder standardizes then applies the column affine map") {
  auto enc = mixed_encoder();
  const auto& col = enc.columns()[enc.slot_of(1)];
  CHECK(col.mean == doctest::Approx(3.0));
  ColumnEncoder zero_bias = col;
  zero_bias.bias.setConstant(0.25);
  auto at_mean = encode_numerical(col.mean, zero_bias);
  CHECK(at_mean.z == 0.0);
  CHECK(at_mean.raw == zero_bias.bias);

  const auto& flat = enc.columns()[enc.slot_of(4)];
  CHECK(flat.stddev == 0.0);
  CHECK(encode_numerical(5.0, flat).z == 0.0);
  CHECK(encode_numerical(123.0, flat).z != 0.0);  // eps guard keeps it finite
  CHECK(std::isfinite(encode_numerical(123.0, flat).z));

  CHECK(encode_numerical(1.0, col).raw != encode_numerical(2.0, col).raw);
  CHECK(encode_numerical(std::nullopt, col).raw == col.null_vector);

  const auto before = nonfinite_input_count();
  set_quiet(true);
  auto inf = encode_numerical(std::numeric_limits<double>::infinity(), col);
  set_quiet(false);
  CHECK(inf.null);
  CHECK(inf.raw == col.null_vector);
  CHECK(nonfinite_input_count() == before + 1);
}

TEST_CASE("categorical encoder looks up rows and hashes unseen tokens") {
  auto enc = mixed_encoder();
  const auto& col = enc.columns()[enc.slot_of(2)];
  CHECK(encode_categorical(std::string("red"), col).raw == encode_categorical(std::string("red"), col).raw);
  CHECK(encode_categorical(std::string("red"), col).raw != encode_categorical(std::string("blue"), col).raw);
  auto unseen = encode_categorical(std::string("violet"), col);
  CHECK(unseen.row >= col.vocab.size());
  CHECK(unseen.row < col.vocab.size() + kOverflowRows);
  CHECK(unseen.raw.size() == EncoderDims{}.d_cat);
  CHECK(encode_categorical(std::string("violet"), col).raw == unseen.raw);
  CHECK(encode_categorical(std::nullopt, col).raw == col.null_vector);
}

TEST_CASE("text encoder is frozen signed 3-gram hashing") {
  const int d = 32;
  auto a = encode_text("hello world", d);
  CHECK(a == encode_text("hello world", d));
  CHECK(a.norm() == doctest::Approx(1.0));
  CHECK(encode_text("", d).isZero());
  for (std::string s : {"hello world", "abc", "x", "granite harbor onyx"})
    CHECK((encode_text(s, d) - reference_text(s, d)).norm() < 1e-12);

  const std::string base = "the quick brown fox jumps";
  const std::string near = "the quick brown fox jumped";
  const std::string far = "zyzzyva plumb quixotic";
  const double near_cos = cosine(reference_text(base, d), reference_text(near, d));
  const double far_cos = cosine(reference_text(base, d), reference_text(far, d));
  REQUIRE(near_cos > far_cos);
  CHECK(cosine(encode_text(base, d), encode_text(near, d)) > cosine(encode_text(base, d), encode_text(far, d)));
}

TEST_CASE("projection is linear with one matrix per modality") {
  auto enc = mixed_encoder();
  for (Modality m : {Modality::numerical, Modality::categorical, Modality::text}) {
    const int din = enc.dims().input_dim(m);
    CHECK(project(Eigen::VectorXd::Zero(din), m, enc).isZero());
    Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(din, -1.0, 1.0);
    CHECK((project(2.0 * e, m, enc) - 2.0 * project(e, m, enc)).norm() < 1e-12);
    CHECK(project(e, m, enc).size() == enc.dims().d_out);
    CHECK_THROWS_AS(project(Eigen::VectorXd::Zero(din + 1), m, enc), std::invalid_argument);
  }
  TableEncoder id = TableEncoder::create(mixed_table(), {1}, EncoderDims{8, 16, 32, 8}, 1);
  id.projection(Modality::numerical).setIdentity();
  Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(8, 0.0, 7.0);
  CHECK(project(e, Modality::numerical, id) == e);
}

TEST_CASE("every embedded cell has dimension d_out and is deterministic") {
  auto enc = mixed_encoder();
  const auto t = mixed_table();
  for (const auto& tup : t.tuples())
    for (std::size_t c = 1; c < 5; ++c) {
      auto v = enc.embed(enc.slot_of(c), tup.values[c]);
      CHECK(v.size() == enc.dims().d_out);
      CHECK(v.allFinite());
      CHECK(v == enc.embed(enc.slot_of(c), tup.values[c]));
    }
  CHECK(mixed_encoder(9).columns()[0].weight == mixed_encoder(9).columns()[0].weight);
}

TEST_CASE("encoder gradients match central differences") {
  const auto t = mixed_table();
  auto enc = mixed_encoder();
  Rng rng(4);
  // loss = sum over cells of <c_cell, embed(cell)> for fixed random c_cell
  std::vector<std::pair<std::size_t, Cell>> cells;
  for (const auto& tup : t.tuples())
    for (std::size_t c = 1; c < 5; ++c) cells.push_back({enc.slot_of(c), tup.values[c]});
  cells.push_back({enc.slot_of(2), std::string("unseen")});
  std::vector<Eigen::VectorXd> coef;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Eigen::VectorXd v(enc.dims().d_out);
    for (auto& x : v) x = standard_normal(rng);
    coef.push_back(v);
  }
  auto loss = [&](const TableEncoder& e) {
    double s = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) s += coef[i].dot(e.embed(cells[i].first, cells[i].second));
    return s;
  };
  auto grads = enc.zeros_like();
  for (std::size_t i = 0; i < cells.size(); ++i)
    enc.backward(cells[i].first, enc.encode(cells[i].first, cells[i].second), coef[i], grads);

  auto params = enc.tensors();
  auto gviews = grads.tensors();
  REQUIRE(params.size() == gviews.size());
  std::size_t checked = 0, bad = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t j = 0; j < params[k].values.size(); j += 7) {
      double& p = params[k].values[j];
      const double old = p, h = 1e-5;
      p = old + h;
      double up = loss(enc);
      p = old - h;
      double down = loss(enc);
      p = old;
      double numeric = (up - down) / (2 * h);
      if (!grad_close(gviews[k].values[j], numeric)) {
        ++bad;
        MESSAGE(params[k].name << "[" << j << "]: analytic " << gviews[k].values[j] << " numeric " << numeric);
      }
      ++checked;
    }
  }
  CHECK(checked > 100);
  CHECK(bad == 0);
}

TEST_CASE("encoder save and load round-trip") {
  auto enc = mixed_encoder();
  std::stringstream ss;
  enc.save(ss);
  auto back = TableEncoder::load(ss);
  CHECK(back.dims() == enc.dims());
  const auto t = mixed_table();
  for (const auto& tup : t.tuples())
    for (std::size_t c = 1; c < 5; ++c)
      CHECK(back.embed(back.slot_of(c), tup.values[c]) == enc.embed(enc.slot_of(c), tup.values[c]));
}
