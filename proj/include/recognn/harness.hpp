#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recognn/pipeline.hpp"

namespace recognn {

enum class Baseline { base_only, all_join, random_k };

std::string to_string(Baseline b);
Baseline parse_baseline(const std::string& s);

struct BaselineResult {
  Baseline variant = Baseline::base_only;
  std::vector<std::string> kept_attributes;  // "table.column"
  std::size_t base_feature_width = 0;
  std::size_t aux_feature_width = 0;  // summed over auxiliary node types
  MetricSet test;
};

/// Layouts for a baseline. random_k samples k auxiliary attributes without
/// replacement (clamped with a warning); k = 0 is base_only.
std::vector<TableLayout> baseline_layouts(const RelationalDataset& ds, const std::vector<std::string>& tables,
                                          Baseline variant, std::size_t k, std::uint64_t seed,
                                          std::vector<std::string>* kept = nullptr);

/// Stage 2 on the baseline graph with freshly initialized encoders and the
/// same stage-2 settings as the main pipeline.
BaselineResult run_baseline(const RelationalDataset& ds, Baseline variant, const PipelineConfig& cfg,
                            std::size_t k = 0);

struct AblationArm {
  MiningMode mining = MiningMode::graph;
  bool edge_weights = true;
  bool similarity = true;

  std::string name() const;
};

/// The 2 x 2 x 3 grid: {weights on, off} x {similarity on, off} x
/// {graph, random_grouping, no_mining_whole_tuple}.
std::vector<AblationArm> default_ablation_grid();

struct AblationRun {
  AblationArm arm;
  std::uint64_t seed = 0;
  MetricSet test;
};

struct AblationSummary {
  AblationArm arm;
  std::size_t runs = 0;
  double auc_mean = 0.0, auc_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double ap_mean = 0.0, ap_std = 0.0;
  double mae_mean = 0.0, mae_std = 0.0;
  double mse_mean = 0.0, mse_std = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  std::vector<AblationSummary> summary;

  /// Mean paired difference of test AUC between two arms (a - b).
  std::optional<double> auc_delta(const AblationArm& a, const AblationArm& b) const;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Every arm under every seed. Within a seed all arms share the dataset,
/// the split and the stage-1 models (paired comparison).
AblationReport run_ablations(const RelationalDataset& ds, const PipelineConfig& cfg,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<AblationArm>& arms = default_ablation_grid());

struct SweepPoint {
  double ell = 0.0;
  std::size_t subtables = 0;        // node types over all auxiliary tables
  std::size_t split_tables = 0;     // tables with at least one group
  MetricSet test;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  bool unsplit_at_one = false;  // every manifest empty at ell = 1

  std::string to_csv() const;
  std::string to_text() const;
};

/// Stage 1 once, then mining + stage 2 for each ell; finishes with the
/// structural ell = 1 check.
SweepReport run_ell_sweep(const RelationalDataset& ds, const PipelineConfig& cfg,
                          const std::vector<double>& ells);

std::vector<double> default_ell_grid();

}  // namespace recognn
