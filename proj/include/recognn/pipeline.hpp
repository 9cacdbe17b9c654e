#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "recognn/common.hpp"
#include "recognn/dataset.hpp"
#include "recognn/encoders.hpp"
#include "recognn/gat.hpp"
#include "recognn/hetgraph.hpp"
#include "recognn/hgnn.hpp"
#include "recognn/joinplan.hpp"
#include "recognn/linker.hpp"
#include "recognn/metrics.hpp"
#include "recognn/subtables.hpp"

namespace recognn {

/// How auxiliary attributes are grouped into node types.
enum class MiningMode {
  graph,                    // stage-1 attention, significant edges, cliques or communities
  random_grouping,          // uniform random pairs
  no_mining_whole_tuple,    // one node per auxiliary tuple
  no_mining_per_attribute,  // one node per (tuple, attribute)
};

std::string to_string(MiningMode m);
MiningMode parse_mining_mode(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  static constexpr int kVersion = 1;

  std::string dataset;
  std::string descriptor = "schema.json";
  std::string out = "out";
  std::uint64_t seed = 0;

  PathScoringConfig join;
  SampleSize coreset_samples = std::size_t{2000};
  std::size_t link_cap = 5;
  EncoderDims encoder;
  GatConfig stage1;
  double ell = 0.8;
  GroupingMethod grouping = GroupingMethod::maximal_clique;
  bool keep_singletons = false;
  MiningMode mining = MiningMode::graph;
  SimilarityConfig similarity;
  bool similarity_edges = true;
  SplitConfig split;
  HgnnConfig stage2;

  /// Rejects unknown keys and bad values with ConfigError. Missing keys keep
  /// their defaults.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;

  /// Seed for a named stage, derived from the root seed.
  std::uint64_t stage_seed(const std::string& stage) const { return derive_seed(seed, stage); }
};

std::map<std::string, MetaPath> plan_meta_paths(const RelationalDataset& ds, const PipelineConfig& cfg);

/// Links along every meta-path, then draws the stratified coreset.
Coreset link_and_sample(const RelationalDataset& ds, const std::map<std::string, MetaPath>& paths,
                        const PipelineConfig& cfg);

struct Stage1Output {
  EncoderBank encoders;  // trained, one per table that had a stage-1 model
  std::map<std::string, std::vector<AttentionRecord>> records;
  std::map<std::string, std::vector<double>> epoch_loss;
  std::vector<std::string> skipped;  // fewer than two attributes or no linked tuples
};

/// One encoder + attention model per auxiliary table in the coreset.
Stage1Output run_stage1(const RelationalDataset& ds, const Coreset& coreset, const PipelineConfig& cfg);

/// Accumulated attention per table, for reporting and for graph mining.
std::map<std::string, CumulativeAttention> accumulate_all(const Stage1Output& s1);

/// Sub-table manifests for every auxiliary table, per `cfg.mining`.
/// Tables without records fall back to unsplit.
std::map<std::string, SubTableManifest> mine_subtables(const RelationalDataset& ds,
                                                       const std::vector<std::string>& aux_tables,
                                                       const Stage1Output& s1, const PipelineConfig& cfg);

/// Groups the table's feature attributes into uniformly random pairs (one
/// triple when the count is odd).
SubTableManifest random_pairs(const RelationalDataset& ds, const std::string& table, std::uint64_t seed);

/// Stage-1 encoders where available, freshly initialized ones otherwise.
EncoderBank complete_encoders(const RelationalDataset& ds, const EncoderBank& trained,
                              const PipelineConfig& cfg);

HeteroGraph build_graph(const RelationalDataset& ds, const std::vector<TableLayout>& layouts,
                        const EncoderBank& encoders, const PipelineConfig& cfg);

struct Stage2Output {
  Stage2Result training;
  FeatureSelectionReport report;
  Eigen::MatrixXd predictions;  // every base node
  MetricSet test;
  MetricSet val;
};

Stage2Output run_stage2(const HeteroGraph& g, const PipelineConfig& cfg);

/// Metrics of `predictions` (rows aligned with base nodes) on one split.
MetricSet split_metrics(const HeteroGraph& g, const Eigen::MatrixXd& predictions, Split s);

struct RunResult {
  std::map<std::string, MetaPath> paths;
  Stage1Output stage1;
  std::map<std::string, SubTableManifest> manifests;
  HeteroGraph graph;
  Stage2Output stage2;
};

/// Every stage in memory with `cfg`.
RunResult run_pipeline(const RelationalDataset& ds, const PipelineConfig& cfg);

/// Auxiliary tables reachable by a meta-path, in name order.
std::vector<std::string> aux_tables(const std::map<std::string, MetaPath>& paths);

}  // namespace recognn
