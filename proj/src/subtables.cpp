#include "recognn/subtables.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "recognn/common.hpp"

namespace recognn {

std::string to_string(GroupingMethod m) {
  return m == GroupingMethod::maximal_clique ? "maximal_clique" : "girvan_newman";
}

GroupingMethod parse_grouping_method(const std::string& s) {
  if (s == "maximal_clique") return GroupingMethod::maximal_clique;
  if (s == "girvan_newman") return GroupingMethod::girvan_newman;
  throw std::invalid_argument("unknown grouping method: " + s);
}

CumulativeAttention accumulate(const std::vector<AttentionRecord>& records) {
  if (records.empty()) throw std::invalid_argument("accumulate: no attention records");
  CumulativeAttention ca;
  ca.table = records.front().table;
  ca.nodes = records.front().nodes;
  const auto n = static_cast<Eigen::Index>(ca.nodes.size());
  ca.sum = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : records) {
    if (r.nodes != ca.nodes || r.weights.rows() != n || r.weights.cols() != n)
      throw MismatchedNodesError("accumulate: record for " + r.table + "/" + r.key +
                                 " has a different node set");
    ca.sum += r.weights;
  }
  ca.normalized = Eigen::MatrixXd::Zero(n, n);
  if (n < 2) {
    ca.degenerate = true;
    return ca;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < n; ++v)
      if (u != v) {
        lo = std::min(lo, ca.sum(u, v));
        hi = std::max(hi, ca.sum(u, v));
      }
  if (hi == lo) {
    ca.degenerate = true;
    warn("attention for " + ca.table + " is constant off the diagonal; normalized matrix is zero");
    return ca;
  }
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < n; ++v)
      if (u != v) ca.normalized(u, v) = (ca.sum(u, v) - lo) / (hi - lo);
  return ca;
}

SignificantEdgeSet select_edges(const CumulativeAttention& ca, double ell) {
  if (ell < 0.0 || ell > 1.0) throw std::invalid_argument("select_edges: ell must be in [0, 1]");
  SignificantEdgeSet s;
  s.table = ca.table;
  s.nodes = ca.nodes;
  s.threshold = ell;
  s.symmetric = 0.5 * (ca.normalized + ca.normalized.transpose());
  const auto n = s.symmetric.rows();
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = u + 1; v < n; ++v)
      if (s.symmetric(u, v) > ell)
        s.edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  return s;
}

namespace {

using Adjacency = std::vector<std::vector<char>>;

Adjacency adjacency(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Adjacency adj(n, std::vector<char>(n, 0));
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
    if (u == v) continue;
    adj[u][v] = adj[v][u] = 1;
  }
  return adj;
}

void bron_kerbosch(const Adjacency& adj, std::vector<std::size_t>& r, std::vector<std::size_t> p,
                   std::vector<std::size_t> x, std::vector<std::vector<std::size_t>>& out) {
  if (p.empty() && x.empty()) {
    auto c = r;
    std::sort(c.begin(), c.end());
    out.push_back(std::move(c));
    return;
  }
  // Pivot: the vertex of P u X with the most neighbours in P.
  std::size_t pivot = p.empty() ? x.front() : p.front();
  std::size_t best = 0;
  for (const auto* set : {&p, &x}) {
    for (auto u : *set) {
      std::size_t c = 0;
      for (auto w : p) c += adj[u][w];
      if (c > best || (c == best && u < pivot)) {
        best = c;
        pivot = u;
      }
    }
  }
  std::vector<std::size_t> candidates;
  for (auto v : p)
    if (!adj[pivot][v]) candidates.push_back(v);
  for (auto v : candidates) {
    std::vector<std::size_t> p2, x2;
    for (auto w : p)
      if (adj[v][w]) p2.push_back(w);
    for (auto w : x)
      if (adj[v][w]) x2.push_back(w);
    r.push_back(v);
    bron_kerbosch(adj, r, std::move(p2), std::move(x2), out);
    r.pop_back();
    p.erase(std::find(p.begin(), p.end(), v));
    x.push_back(v);
  }
}

std::vector<std::vector<std::size_t>> components(std::size_t n, const Adjacency& adj,
                                                 const std::vector<char>& active) {
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (!active[s] || comp[s] >= 0) continue;
    std::vector<std::size_t> members{s};
    comp[s] = static_cast<int>(out.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto u = members[i];
      for (std::size_t v = 0; v < n; ++v)
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = comp[s];
          members.push_back(v);
        }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

/// Brandes edge betweenness on an unweighted undirected graph.
std::vector<std::vector<double>> edge_betweenness(std::size_t n, const Adjacency& adj) {
  std::vector<std::vector<double>> eb(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> pred(n);
    std::vector<double> sigma(n, 0.0);
    std::vector<int> dist(n, -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<std::size_t> q{s};
    while (!q.empty()) {
      auto v = q.front();
      q.pop_front();
      stack.push_back(v);
      for (std::size_t w = 0; w < n; ++w) {
        if (!adj[v][w]) continue;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    std::vector<double> delta(n, 0.0);
    while (!stack.empty()) {
      auto w = stack.back();
      stack.pop_back();
      for (auto v : pred[w]) {
        double c = sigma[v] / sigma[w] * (1.0 + delta[w]);
        eb[std::min(v, w)][std::max(v, w)] += c;
        delta[v] += c;
      }
    }
  }
  return eb;
}

}  // namespace

std::vector<std::vector<std::size_t>> maximal_cliques(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Adjacency adj = adjacency(n, edges);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> r;
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  bron_kerbosch(adj, r, std::move(p), {}, out);
  std::sort(out.begin(), out.end());
  return out;
}

double modularity(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                  const std::vector<std::vector<std::size_t>>& communities) {
  Adjacency adj = adjacency(n, edges);
  std::vector<std::size_t> degree(n, 0);
  double m = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (adj[u][v]) {
        ++degree[u];
        ++degree[v];
        m += 1.0;
      }
  if (m == 0.0) return 0.0;
  double q = 0.0;
  for (const auto& c : communities) {
    double inside = 0.0;
    double deg = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      deg += static_cast<double>(degree[c[i]]);
      for (std::size_t j = i + 1; j < c.size(); ++j) inside += adj[c[i]][c[j]];
    }
    q += inside / m - (deg / (2.0 * m)) * (deg / (2.0 * m));
  }
  return q;
}

std::vector<std::vector<std::size_t>> girvan_newman(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
    bool include_isolated) {
  Adjacency original = adjacency(n, edges);
  std::vector<char> active(n, 0);
  std::size_t edge_count = 0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (original[u][v]) {
        active[u] = 1;
        if (u < v) ++edge_count;
      }
  if (include_isolated) std::fill(active.begin(), active.end(), 1);
  if (edge_count == 0) {
    std::vector<std::vector<std::size_t>> out;
    if (include_isolated)
      for (std::size_t u = 0; u < n; ++u) out.push_back({u});
    return out;
  }

  Adjacency current = original;
  auto best = components(n, current, active);
  double best_q = modularity(n, edges, best);
  while (edge_count > 0) {
    auto eb = edge_betweenness(n, current);
    std::size_t bu = 0, bv = 0;
    double top = -1.0;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (current[u][v] && eb[u][v] > top + 1e-12) {
          top = eb[u][v];
          bu = u;
          bv = v;
        }
    current[bu][bv] = current[bv][bu] = 0;
    --edge_count;
    auto parts = components(n, current, active);
    double q = modularity(n, edges, parts);
    if (q > best_q + 1e-12) {
      best_q = q;
      best = std::move(parts);
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

namespace {

SubTableManifest manifest_from(const SignificantEdgeSet& edges, GroupingMethod method,
                               const std::vector<std::vector<std::size_t>>& groups,
                               bool keep_singletons) {
  SubTableManifest m;
  m.table = edges.table;
  m.method = method;
  m.threshold = edges.threshold;
  for (const auto& g : groups) {
    if (g.size() < 2 && !keep_singletons) continue;
    std::vector<std::string> names;
    for (auto i : g) names.push_back(edges.nodes.at(i));
    m.groups.push_back(std::move(names));
  }
  return m;
}

}  // namespace

SubTableManifest extract_cliques(const SignificantEdgeSet& edges, CliqueOptions options) {
  return manifest_from(edges, GroupingMethod::maximal_clique,
                       maximal_cliques(edges.nodes.size(), edges.edges), options.keep_singletons);
}

SubTableManifest extract_communities_gn(const SignificantEdgeSet& edges, CliqueOptions options) {
  auto groups = girvan_newman(edges.nodes.size(), edges.edges, options.keep_singletons);
  // Communities of one are legitimate Girvan-Newman output.
  return manifest_from(edges, GroupingMethod::girvan_newman, groups, true);
}

std::string subtable_name(const std::string& table, std::size_t index) {
  return table + "#" + std::to_string(index);
}

std::vector<SubTable> materialize_subtables(const RelationalDataset& ds,
                                            const SubTableManifest& manifest) {
  const Table& parent = ds.table(manifest.table);
  std::vector<SubTable> out;
  for (std::size_t gi = 0; gi < manifest.groups.size(); ++gi) {
    const auto& group = manifest.groups[gi];
    std::set<std::size_t> wanted;
    for (const auto& name : group) {
      auto idx = parent.column_index(name);
      if (!idx || parent.columns()[*idx].is_key())
        throw std::invalid_argument("materialize_subtables: " + manifest.table +
                                    " has no attribute " + name);
      wanted.insert(*idx);
    }
    std::vector<std::size_t> keep;
    std::vector<ColumnSpec> cols;
    for (std::size_t c = 0; c < parent.columns().size(); ++c) {
      if (parent.columns()[c].is_key() || wanted.count(c)) {
        keep.push_back(c);
        cols.push_back(parent.columns()[c]);
      }
    }
    SubTable st;
    st.name = subtable_name(manifest.table, gi);
    st.parent = manifest.table;
    st.group = group;
    st.table = Table(st.name, cols, false);
    for (const auto& t : parent.tuples()) {
      Tuple p;
      for (auto c : keep) p.values.push_back(t.values[c]);
      st.table.add_tuple(std::move(p));
    }
    out.push_back(std::move(st));
  }
  return out;
}

std::string top_pairs_report(const CumulativeAttention& ca, std::size_t limit) {
  Eigen::MatrixXd sym = 0.5 * (ca.normalized + ca.normalized.transpose());
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (Eigen::Index u = 0; u < sym.rows(); ++u)
    for (Eigen::Index v = u + 1; v < sym.cols(); ++v)
      pairs.emplace_back(sym(u, v), static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  std::ostringstream os;
  os << ca.table << (ca.degenerate ? " (degenerate)" : "") << '\n';
  os << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < std::min(limit, pairs.size()); ++i) {
    auto [w, u, v] = pairs[i];
    os << "  " << ca.nodes[u] << " -- " << ca.nodes[v] << "  " << w << '\n';
  }
  return os.str();
}

}  // namespace recognn
