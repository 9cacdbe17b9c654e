#include <doctest.h>

#include "oracles.hpp"
#include "recognn/linker.hpp"
#include "support.hpp"

using namespace recognn;
using namespace testing;

namespace {

// One user ("u1") attends events e0..e6; e7 has a dangling user.
RelationalDataset fan_dataset() {
  std::vector<std::vector<Cell>> events;
  for (int i = 0; i < 7; ++i) events.push_back({"e" + std::to_string(i), 1.0, "u1", std::to_string(i % 2)});
  events.push_back({"e7", 1.0, "u9", "0"});
  events.push_back({"e8", 1.0, "u2", "1"});
  std::vector<std::vector<Cell>> users{{"u1", 30.0}, {"u2", 40.0}, {"u3", 50.0}};
  return RelationalDataset({make_table("events", {pk(), num("x"), fk("uid", "users"), cat("y")}, true, events),
                            make_table("users", {pk(), num("age")}, false, users)},
                           {"events", "y", TaskKind::classification, 2});
}

MetaPath path_to(const RelationalDataset& ds, const std::string& table) {
  return find_meta_paths(build_join_graph(ds), {}).at(table);
}

}  // namespace

TEST_CASE("linked tuple carries its base tuple's label") {
  auto ds = fan_dataset();
  auto links = link_tuples(ds, path_to(ds, "users"), {100, 0});
  std::size_t u2 = 0;
  for (const auto& l : links) {
    CHECK(l.label == ds.label(l.base_row));
    CHECK(ds.base().tuples()[l.base_row].key == l.base_key);
    if (l.key == "u2") {
      ++u2;
      CHECK(l.base_key == "e8");
      CHECK(l.label == 1.0);
    }
    CHECK(l.key != "u3");  // no event references u3
  }
  CHECK(u2 == 1);
  // the dangling e7 contributes nothing
  for (const auto& l : links) CHECK(l.base_key != "e7");
}

TEST_CASE("cap samples a reproducible subset of the full link set") {
  auto ds = fan_dataset();
  auto path = path_to(ds, "users");
  auto full = link_tuples(ds, path, {100, 0});
  std::set<std::string> all_u1;
  for (const auto& l : full)
    if (l.key == "u1") all_u1.insert(l.base_key);
  REQUIRE(all_u1.size() == 7);
  auto a = link_tuples(ds, path, {5, 42});
  auto b = link_tuples(ds, path, {5, 42});
  CHECK(a == b);
  std::size_t u1 = 0;
  for (const auto& l : a)
    if (l.key == "u1") {
      ++u1;
      CHECK(all_u1.count(l.base_key) == 1);
    }
  CHECK(u1 == 5);
}

TEST_CASE("link_tuples equals a nested-loop join") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    auto ds = oracle::random_dataset(rng, 2 + uniform_index(rng, 4), 40);
    for (const auto& [target, path] : find_meta_paths(build_join_graph(ds), {})) {
      auto got = link_tuples(ds, path, {1000000, 1});
      auto expect = oracle::nested_loop_links(ds, path);
      std::set<std::pair<std::size_t, std::size_t>> pairs;
      for (const auto& l : got) {
        pairs.insert({l.row, l.base_row});
        CHECK(l.label == ds.label(l.base_row));
      }
      CHECK(pairs.size() == got.size());
      CHECK(pairs == expect);
      // capped output is a subset with min(cap, links) per aux tuple
      auto capped = link_tuples(ds, path, {2, 3});
      std::map<std::size_t, std::size_t> per_full, per_capped;
      for (const auto& [a, b] : expect) ++per_full[a];
      for (const auto& l : capped) {
        ++per_capped[l.row];
        CHECK(expect.count({l.row, l.base_row}) == 1);
      }
      for (const auto& [a, n] : per_full) CHECK(per_capped[a] == std::min<std::size_t>(n, 2));
    }
  }
}

TEST_CASE("coreset stratifies by class") {
  std::vector<std::vector<Cell>> rows;
  for (int i = 0; i < 1000; ++i) rows.push_back({std::to_string(i), 0.0, i % 10 == 0 ? "1" : "0"});
  RelationalDataset ds({make_table("b", {pk(), num("x"), cat("y")}, true, rows)},
                       {"b", "y", TaskKind::classification, 2});
  std::map<std::string, std::vector<LabeledTuple>> links;
  for (std::size_t r = 0; r < 1000; ++r) links["aux"].push_back({"aux", "k", r, ds.base().tuples()[r].key, r, ds.label(r)});

  auto core = build_coreset(ds, links, {std::size_t{100}, 5, 7});
  std::size_t pos = 0;
  for (auto r : core.base_rows) pos += ds.label(r) == 1.0;
  CHECK(core.base_rows.size() == 100);
  CHECK(pos >= 9);
  CHECK(pos <= 11);
  CHECK(core.links.at("aux").size() == 100);
  for (const auto& l : core.links.at("aux"))
    CHECK(std::binary_search(core.base_rows.begin(), core.base_rows.end(), l.base_row));

  auto again = build_coreset(ds, links, {std::size_t{100}, 5, 7});
  CHECK(again.base_rows == core.base_rows);

  auto all = build_coreset(ds, links, {std::size_t{1000}, 5, 7});
  CHECK(all.links.at("aux") == links.at("aux"));
  CHECK_FALSE(all.clamped);
  CHECK(build_coreset(ds, links, {std::size_t{5000}, 5, 7}).clamped);
  CHECK(build_coreset(ds, links, {0.25, 5, 7}).base_rows.size() == 250);
}

TEST_CASE("rare class keeps at least one tuple") {
  auto alloc = allocate_proportional({999, 1}, 10);
  CHECK(alloc[1] == 1);
  CHECK(alloc[0] + alloc[1] == 10);
  auto strata = quantile_strata({5, 1, 4, 2, 3, 0, 9, 8, 7, 6}, 10);
  CHECK(strata == std::vector<std::size_t>{5, 1, 4, 2, 3, 0, 9, 8, 7, 6});
}
