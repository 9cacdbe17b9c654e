#include "recognn/linker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "recognn/common.hpp"

namespace recognn {

namespace {

/// Row-level adjacency for one hop of a meta-path.
class HopIndex {
 public:
  HopIndex(const RelationalDataset& ds, const JoinEdge& edge)
      : src_(ds.table(edge.src_table)), dst_(ds.table(edge.dst_table)) {
    const Table& fk_table = ds.table(edge.fk_table);
    fk_col_ = fk_table.require_column(edge.fk_column);
    from_fk_ = edge.from_fk_side();
    if (!from_fk_) {
      for (std::size_t r = 0; r < fk_table.size(); ++r) {
        const Cell& v = fk_table.tuples()[r].values[fk_col_];
        if (!is_null(v)) by_fk_value_[cell_to_string(v)].push_back(r);
      }
    }
  }

  void neighbors(std::size_t src_row, std::vector<std::size_t>& out) const {
    if (from_fk_) {
      const Cell& v = src_.tuples()[src_row].values[fk_col_];
      if (is_null(v)) return;
      if (auto r = dst_.row_of_key(cell_to_string(v))) out.push_back(*r);
    } else {
      auto it = by_fk_value_.find(src_.tuples()[src_row].key);
      if (it != by_fk_value_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }

 private:
  const Table& src_;
  const Table& dst_;
  std::size_t fk_col_ = 0;
  bool from_fk_ = true;
  std::unordered_map<std::string, std::vector<std::size_t>> by_fk_value_;
};

}  // namespace

std::vector<LabeledTuple> link_tuples(const RelationalDataset& ds, const MetaPath& path,
                                      const LinkOptions& options) {
  const Table& base = ds.base();
  const Table& aux = ds.table(path.target_table);
  if (path.hops.empty()) return {};

  std::vector<HopIndex> index;
  index.reserve(path.hops.size());
  for (const auto& h : path.hops) index.emplace_back(ds, h);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (aux row, base row)
  std::vector<std::size_t> frontier, next;
  for (std::size_t b = 0; b < base.size(); ++b) {
    frontier.assign(1, b);
    for (const auto& hop : index) {
      next.clear();
      for (auto r : frontier) hop.neighbors(r, next);
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      frontier.swap(next);
      if (frontier.empty()) break;
    }
    for (auto a : frontier) pairs.emplace_back(a, b);
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<LabeledTuple> out;
  std::size_t cap = std::max<std::size_t>(1, options.per_tuple_label_cap);
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;
    std::vector<std::size_t> chosen;
    for (std::size_t k = i; k < j; ++k) chosen.push_back(pairs[k].second);
    const std::string& aux_key = aux.tuples()[pairs[i].first].key;
    if (chosen.size() > cap) {
      // Seeded per aux tuple so the sample does not depend on iteration order.
      Rng rng(splitmix64(options.seed ^ fnv1a(aux.name() + '\x1f' + aux_key)));
      shuffle(chosen, rng);
      chosen.resize(cap);
      std::sort(chosen.begin(), chosen.end());
    }
    for (auto b : chosen) {
      out.push_back(LabeledTuple{aux.name(), aux_key, pairs[i].first, base.tuples()[b].key, b,
                                 ds.label(b)});
    }
    i = j;
  }
  return out;
}

std::vector<std::size_t> allocate_proportional(const std::vector<std::size_t>& counts,
                                               std::size_t total) {
  std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> alloc(counts.size(), 0);
  if (n == 0 || total == 0) return alloc;
  total = std::min(total, n);
  std::size_t nonempty = 0;
  std::vector<double> remainder(counts.size(), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double q = static_cast<double>(total) * static_cast<double>(counts[i]) / static_cast<double>(n);
    alloc[i] = static_cast<std::size_t>(std::floor(q));
    remainder[i] = q - std::floor(q);
    if (counts[i] > 0) ++nonempty;
  }
  if (total >= nonempty) {
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] > 0 && alloc[i] == 0) alloc[i] = 1;
  }
  std::size_t sum = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  while (sum < total) {
    bool progressed = false;
    for (auto i : order) {
      if (sum == total) break;
      if (alloc[i] < counts[i]) {
        ++alloc[i];
        ++sum;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  while (sum > total) {
    auto it = std::max_element(alloc.begin(), alloc.end());
    if (*it <= 1) break;
    --*it;
    --sum;
  }
  return alloc;
}

std::vector<std::size_t> quantile_strata(const std::vector<double>& values, std::size_t strata) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> out(values.size(), 0);
  if (values.empty() || strata == 0) return out;
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    out[order[rank]] = rank * strata / order.size();
  return out;
}

Coreset build_coreset(const RelationalDataset& ds,
                      const std::map<std::string, std::vector<LabeledTuple>>& links,
                      const CoresetConfig& config) {
  const std::size_t n = ds.base().size();
  Coreset core;
  std::size_t want = 0;
  if (auto count = std::get_if<std::size_t>(&config.base_sample_size)) {
    want = *count;
  } else {
    double f = std::get<double>(config.base_sample_size);
    want = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    if (f > 0.0 && want == 0) want = 1;
  }
  if (want > n) {
    warn("coreset sample size " + std::to_string(want) + " exceeds base table size " +
         std::to_string(n) + "; clamping");
    want = n;
    core.clamped = true;
  }

  std::vector<std::size_t> stratum;
  std::size_t strata_count = 0;
  if (ds.task().task == TaskKind::classification) {
    stratum.resize(n);
    for (std::size_t r = 0; r < n; ++r) stratum[r] = static_cast<std::size_t>(ds.label(r));
    strata_count = static_cast<std::size_t>(ds.class_count());
  } else {
    stratum = quantile_strata(ds.labels(), 10);
    strata_count = 10;
  }
  std::vector<std::vector<std::size_t>> members(strata_count);
  for (std::size_t r = 0; r < n; ++r) members[stratum[r]].push_back(r);
  std::vector<std::size_t> sizes;
  for (const auto& m : members) sizes.push_back(m.size());
  auto alloc = allocate_proportional(sizes, want);

  Rng rng(config.seed);
  for (std::size_t s = 0; s < strata_count; ++s) {
    auto rows = members[s];
    if (alloc[s] < rows.size()) shuffle(rows, rng);
    rows.resize(alloc[s]);
    core.base_rows.insert(core.base_rows.end(), rows.begin(), rows.end());
  }
  std::sort(core.base_rows.begin(), core.base_rows.end());

  std::vector<char> sampled(n, 0);
  for (auto r : core.base_rows) sampled[r] = 1;
  for (const auto& [table, ls] : links) {
    auto& kept = core.links[table];
    for (const auto& l : ls)
      if (sampled[l.base_row]) kept.push_back(l);
  }
  return core;
}

}  // namespace recognn
