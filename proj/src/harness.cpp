#include "recognn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace recognn {

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::base_only: return "base_only";
    case Baseline::all_join: return "all_join";
    case Baseline::random_k: return "random_k";
  }
  return "?";
}

Baseline parse_baseline(const std::string& s) {
  for (auto b : {Baseline::base_only, Baseline::all_join, Baseline::random_k})
    if (to_string(b) == s) return b;
  throw std::invalid_argument("unknown baseline: " + s);
}

std::vector<TableLayout> baseline_layouts(const RelationalDataset& ds, const std::vector<std::string>& tables,
                                          Baseline variant, std::size_t k, std::uint64_t seed,
                                          std::vector<std::string>* kept) {
  auto layouts = layouts_from_manifests(ds, tables, {});
  if (variant == Baseline::all_join) {
    if (kept)
      for (std::size_t i = 1; i < layouts.size(); ++i)
        for (const auto& a : layouts[i].groups[0]) kept->push_back(layouts[i].table + "." + a);
    return layouts;
  }
  std::vector<TableLayout> out{layouts.front()};
  if (variant == Baseline::base_only || k == 0) return out;

  std::vector<std::pair<std::size_t, std::size_t>> pool;  // (layout, attribute)
  for (std::size_t i = 1; i < layouts.size(); ++i)
    for (std::size_t a = 0; a < layouts[i].groups[0].size(); ++a) pool.push_back({i, a});
  if (k > pool.size()) {
    warn("random_k: k=" + std::to_string(k) + " exceeds the " + std::to_string(pool.size()) +
         " auxiliary attributes; clamping");
    k = pool.size();
  }
  Rng rng(seed);
  shuffle(pool, rng);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  for (std::size_t p = 0; p < pool.size();) {
    const auto li = pool[p].first;
    TableLayout t{layouts[li].table, {{}}, false};
    for (; p < pool.size() && pool[p].first == li; ++p) {
      const auto& name = layouts[li].groups[0][pool[p].second];
      t.groups[0].push_back(name);
      if (kept) kept->push_back(t.table + "." + name);
    }
    out.push_back(std::move(t));
  }
  return out;
}

BaselineResult run_baseline(const RelationalDataset& ds, Baseline variant, const PipelineConfig& cfg,
                            std::size_t k) {
  BaselineResult r;
  r.variant = variant;
  auto tables = aux_tables(plan_meta_paths(ds, cfg));
  auto layouts = baseline_layouts(ds, tables, variant, k, cfg.stage_seed("random_k"), &r.kept_attributes);
  auto encoders = complete_encoders(ds, {}, cfg);
  auto g = build_graph(ds, layouts, encoders, cfg);
  r.base_feature_width = g.types[0].width;
  for (std::size_t t = 1; t < g.types.size(); ++t) r.aux_feature_width += g.types[t].width;
  r.test = run_stage2(g, cfg).test;
  return r;
}

// ---------------------------------------------------------------------------
// ablations

std::string AblationArm::name() const {
  return to_string(mining) + (edge_weights ? "/weights" : "/uniform") + (similarity ? "/sim" : "/nosim");
}

std::vector<AblationArm> default_ablation_grid() {
  std::vector<AblationArm> out;
  for (auto m : {MiningMode::graph, MiningMode::random_grouping, MiningMode::no_mining_whole_tuple})
    for (bool w : {true, false})
      for (bool s : {true, false}) out.push_back({m, w, s});
  return out;
}

namespace {

struct Moments {
  std::vector<double> xs;
  void add(double x) { xs.push_back(x); }
  double mean() const {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
  }
  // sample standard deviation; 0 for fewer than two values
  double stddev() const {
    if (xs.size() < 2) return 0.0;
    double m = mean(), s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
  }
};

bool same_arm(const AblationArm& a, const AblationArm& b) {
  return a.mining == b.mining && a.edge_weights == b.edge_weights && a.similarity == b.similarity;
}

std::string fmt(double v, int precision = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

AblationReport run_ablations(const RelationalDataset& ds, const PipelineConfig& base_cfg,
                             const std::vector<std::uint64_t>& seeds, const std::vector<AblationArm>& arms) {
  AblationReport report;
  for (auto seed : seeds) {
    PipelineConfig cfg = base_cfg;
    cfg.seed = seed;
    auto paths = plan_meta_paths(ds, cfg);
    auto tables = aux_tables(paths);
    auto s1 = run_stage1(ds, link_and_sample(ds, paths, cfg), cfg);
    auto encoders = complete_encoders(ds, s1.encoders, cfg);
    for (const auto& arm : arms) {
      PipelineConfig c = cfg;
      c.mining = arm.mining;
      c.stage2.uniform_attention = !arm.edge_weights;
      c.similarity_edges = arm.similarity;
      auto manifests = mine_subtables(ds, tables, s1, c);
      auto g = build_graph(ds, layouts_from_manifests(ds, tables, manifests), encoders, c);
      report.runs.push_back({arm, seed, run_stage2(g, c).test});
    }
  }
  for (const auto& arm : arms) {
    Moments auc, acc, f1, ap, mae, mse;
    AblationSummary s;
    s.arm = arm;
    for (const auto& r : report.runs) {
      if (!same_arm(r.arm, arm)) continue;
      ++s.runs;
      if (r.test.auc_roc) auc.add(*r.test.auc_roc);
      if (r.test.average_precision) ap.add(*r.test.average_precision);
      acc.add(r.test.accuracy);
      f1.add(r.test.f1);
      mae.add(r.test.mae);
      mse.add(r.test.mse);
    }
    s.auc_mean = auc.mean(), s.auc_std = auc.stddev();
    s.acc_mean = acc.mean(), s.acc_std = acc.stddev();
    s.f1_mean = f1.mean(), s.f1_std = f1.stddev();
    s.ap_mean = ap.mean(), s.ap_std = ap.stddev();
    s.mae_mean = mae.mean(), s.mae_std = mae.stddev();
    s.mse_mean = mse.mean(), s.mse_std = mse.stddev();
    report.summary.push_back(s);
  }
  return report;
}

std::optional<double> AblationReport::auc_delta(const AblationArm& a, const AblationArm& b) const {
  std::map<std::uint64_t, double> left;
  for (const auto& r : runs)
    if (same_arm(r.arm, a) && r.test.auc_roc) left[r.seed] = *r.test.auc_roc;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (!same_arm(r.arm, b) || !r.test.auc_roc) continue;
    auto it = left.find(r.seed);
    if (it == left.end()) continue;
    sum += it->second - *r.test.auc_roc;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string AblationReport::to_csv() const {
  std::ostringstream out;
  out << "mining,edge_weights,similarity,seed,accuracy,auc_roc,f1,average_precision,mae,mse\n";
  for (const auto& r : runs) {
    out << to_string(r.arm.mining) << ',' << (r.arm.edge_weights ? 1 : 0) << ',' << (r.arm.similarity ? 1 : 0)
        << ',' << r.seed << ',' << format_exact(r.test.accuracy) << ','
        << (r.test.auc_roc ? format_exact(*r.test.auc_roc) : "") << ',' << format_exact(r.test.f1) << ','
        << (r.test.average_precision ? format_exact(*r.test.average_precision) : "") << ','
        << format_exact(r.test.mae) << ',' << format_exact(r.test.mse) << '\n';
  }
  return out.str();
}

std::string AblationReport::to_text() const {
  std::ostringstream out;
  out << "arm                                        runs  AUC mean +- std    ACC mean +- std\n";
  for (const auto& s : summary) {
    auto name = s.arm.name();
    name.resize(std::max<std::size_t>(name.size(), 42), ' ');
    out << name << ' ' << s.runs << "     " << fmt(s.auc_mean) << " +- " << fmt(s.auc_std) << "   "
        << fmt(s.acc_mean) << " +- " << fmt(s.acc_std) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// ell sweep

std::vector<double> default_ell_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 9; ++i) out.push_back(i / 10.0);
  return out;
}

SweepReport run_ell_sweep(const RelationalDataset& ds, const PipelineConfig& base_cfg,
                          const std::vector<double>& ells) {
  SweepReport report;
  PipelineConfig cfg = base_cfg;
  cfg.mining = MiningMode::graph;
  auto paths = plan_meta_paths(ds, cfg);
  auto tables = aux_tables(paths);
  auto s1 = run_stage1(ds, link_and_sample(ds, paths, cfg), cfg);
  auto encoders = complete_encoders(ds, s1.encoders, cfg);
  for (double ell : ells) {
    PipelineConfig c = cfg;
    c.ell = ell;
    auto manifests = mine_subtables(ds, tables, s1, c);
    SweepPoint p;
    p.ell = ell;
    for (const auto& [name, m] : manifests) {
      p.subtables += m.unsplit() ? 1 : m.groups.size();
      p.split_tables += m.unsplit() ? 0 : 1;
    }
    auto g = build_graph(ds, layouts_from_manifests(ds, tables, manifests), encoders, c);
    p.test = run_stage2(g, c).test;
    report.points.push_back(p);
  }
  PipelineConfig at_one = cfg;
  at_one.ell = 1.0;
  auto manifests = mine_subtables(ds, tables, s1, at_one);
  report.unsplit_at_one = std::all_of(manifests.begin(), manifests.end(),
                                      [](const auto& kv) { return kv.second.unsplit(); });
  return report;
}

std::string SweepReport::to_csv() const {
  std::ostringstream out;
  out << "ell,subtables,split_tables,accuracy,auc_roc,f1,average_precision,mae,mse\n";
  for (const auto& p : points)
    out << format_exact(p.ell) << ',' << p.subtables << ',' << p.split_tables << ','
        << format_exact(p.test.accuracy) << ',' << (p.test.auc_roc ? format_exact(*p.test.auc_roc) : "") << ','
        << format_exact(p.test.f1) << ','
        << (p.test.average_precision ? format_exact(*p.test.average_precision) : "") << ','
        << format_exact(p.test.mae) << ',' << format_exact(p.test.mse) << '\n';
  return out.str();
}

std::string SweepReport::to_text() const {
  std::ostringstream out;
  out << " ell  node types  split tables     AUC     ACC      F1      AP\n";
  for (const auto& p : points) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%4.2f  %10zu  %12zu  %6.4f  %6.4f  %6.4f  %6.4f\n", p.ell, p.subtables,
                  p.split_tables, p.test.auc_roc.value_or(NAN), p.test.accuracy, p.test.f1,
                  p.test.average_precision.value_or(NAN));
    out << buf;
  }
  out << "ell = 1 leaves every table unsplit: " << (unsplit_at_one ? "yes" : "no") << '\n';
  return out.str();
}

}  // namespace recognn
