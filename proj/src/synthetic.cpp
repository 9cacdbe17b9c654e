#include "recognn/synthetic.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "recognn/common.hpp"

namespace recognn {

namespace {

constexpr std::array<const char*, 16> kWords = {
    "amber", "birch", "cobalt", "delta", "ember",  "fjord", "granite", "harbor",
    "indigo", "juniper", "kelp", "lumen", "meadow", "nickel", "onyx", "prairie"};

double rounded(double v) { return std::round(v * 1e6) / 1e6; }

Cell num(Rng& rng) { return rounded(standard_normal(rng)); }

Cell token(Rng& rng, const char* prefix, std::size_t n) {
  return std::string(prefix) + std::to_string(uniform_index(rng, n));
}

Cell phrase(Rng& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += kWords[uniform_index(rng, kWords.size())];
  }
  return s;
}

ColumnSpec col(std::string name, ColumnKind kind) { return {std::move(name), kind, std::nullopt}; }

ColumnSpec fk(std::string name, std::string table) {
  return {std::move(name), ColumnKind::foreign_key, ColumnRef{std::move(table), "id"}};
}

}  // namespace

std::string to_string(LabelRule r) { return r == LabelRule::xor_sign ? "xor_sign" : "and_sign"; }

LabelRule parse_label_rule(const std::string& s) {
  if (s == "xor_sign") return LabelRule::xor_sign;
  if (s == "and_sign") return LabelRule::and_sign;
  throw std::invalid_argument("unknown label rule: " + s);
}

int planted_label(LabelRule rule, double a, double b) {
  if (rule == LabelRule::xor_sign) return (a > 0) != (b > 0) ? 1 : 0;
  return (a > 0 && b > 0) ? 1 : 0;
}

void SyntheticSpec::validate() const {
  if (base_tuples < 4) throw std::invalid_argument("synthetic: need at least 4 base tuples");
  if (aux_tables < 1 || aux_tables > 3) throw std::invalid_argument("synthetic: aux_tables must be 1..3");
  if (label_noise < 0.0 || label_noise > 0.5) throw std::invalid_argument("synthetic: label_noise must be in [0, 0.5]");
  if (planted_a == planted_b || planted_a.empty() || planted_b.empty())
    throw std::invalid_argument("synthetic: planted attributes must be two distinct names");
  if (planted_table != "events") throw std::invalid_argument("synthetic: the planted table is 'events'");
}

RelationalDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_base = spec.base_tuples;
  const std::size_t n_events = std::max<std::size_t>(2, n_base / 2);
  const std::size_t n_venues = std::max<std::size_t>(2, n_events / 20);

  // events
  std::vector<ColumnSpec> ecols{col("id", ColumnKind::primary_key), col(spec.planted_a, ColumnKind::numerical)};
  for (std::size_t i = 0; i < spec.noise_attributes; ++i) {
    ecols.push_back(col("n" + std::to_string(i + 1), ColumnKind::numerical));
    if (i == 0) ecols.push_back(col(spec.planted_b, ColumnKind::numerical));
  }
  if (spec.noise_attributes == 0) ecols.push_back(col(spec.planted_b, ColumnKind::numerical));
  ecols.push_back(col("e_cat", ColumnKind::categorical));
  if (spec.aux_tables >= 2) ecols.push_back(fk("v_id", "venues"));
  Table events("events", ecols, false);
  const std::size_t ia = 1;
  std::size_t ib = 0;
  for (std::size_t c = 0; c < ecols.size(); ++c)
    if (ecols[c].name == spec.planted_b) ib = c;
  std::vector<int> event_label(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    Tuple t;
    t.values.resize(ecols.size());
    t.values[0] = "e" + std::to_string(e);
    for (std::size_t c = 1; c < ecols.size(); ++c) {
      const auto& spec_c = ecols[c];
      if (spec_c.kind == ColumnKind::numerical) t.values[c] = num(rng);
      else if (spec_c.kind == ColumnKind::categorical) t.values[c] = token(rng, "k", 6);
      else t.values[c] = "v" + std::to_string(uniform_index(rng, n_venues));
    }
    event_label[e] = planted_label(spec.rule, std::get<double>(t.values[ia]), std::get<double>(t.values[ib]));
    events.add_tuple(std::move(t));
  }

  // customers: each event is referenced by (about) the same number of customers
  std::vector<std::size_t> event_of(n_base);
  for (std::size_t i = 0; i < n_base; ++i) event_of[i] = i % n_events;
  shuffle(event_of, rng);
  std::vector<ColumnSpec> bcols{col("id", ColumnKind::primary_key), col("b_num1", ColumnKind::numerical),
                                col("b_num2", ColumnKind::numerical), col("b_cat", ColumnKind::categorical),
                                fk("e_id", "events"), col("label", ColumnKind::categorical)};
  Table customers("customers", bcols, true);
  for (std::size_t i = 0; i < n_base; ++i) {
    int y = event_label[event_of[i]];
    if (uniform01(rng) < spec.label_noise) y = 1 - y;
    Tuple t;
    t.values = {"c" + std::to_string(i), num(rng), num(rng), token(rng, "g", 5),
                "e" + std::to_string(event_of[i]), std::to_string(y)};
    customers.add_tuple(std::move(t));
  }

  std::vector<Table> tables{std::move(customers), std::move(events)};

  if (spec.aux_tables >= 2) {
    Table venues("venues",
                 {col("id", ColumnKind::primary_key), col("v_num1", ColumnKind::numerical),
                  col("v_num2", ColumnKind::numerical), col("v_cat", ColumnKind::categorical),
                  col("v_text", ColumnKind::text)},
                 false);
    for (std::size_t v = 0; v < n_venues; ++v) {
      Tuple t;
      t.values = {"v" + std::to_string(v), num(rng), num(rng), token(rng, "r", 4), phrase(rng, 3)};
      venues.add_tuple(std::move(t));
    }
    tables.push_back(std::move(venues));
  }
  if (spec.aux_tables >= 3) {
    Table logs("logs",
               {col("id", ColumnKind::primary_key), fk("c_id", "customers"),
                col("l_num1", ColumnKind::numerical), col("l_num2", ColumnKind::numerical),
                col("l_text", ColumnKind::text)},
               false);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n_base; ++i) {
      auto k = uniform_index(rng, 4);  // 0..3 logs per customer
      for (std::size_t j = 0; j < k; ++j) {
        Tuple t;
        t.values = {"l" + std::to_string(next++), "c" + std::to_string(i), num(rng), num(rng), phrase(rng, 2)};
        logs.add_tuple(std::move(t));
      }
    }
    tables.push_back(std::move(logs));
  }

  TaskSpec task{"customers", "label", TaskKind::classification, 2};
  return RelationalDataset(std::move(tables), task);
}

RelationalDataset write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  auto ds = generate_synthetic(spec);
  write_dataset(ds, dir);
  return ds;
}

}  // namespace recognn
