#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "recognn/pipeline.hpp"

namespace recognn {

/// A stage was asked to run before the stage that produces its inputs.
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(std::string path, std::string stage)
      : std::runtime_error("missing " + path + "; run '" + stage + "' first"),
        path_(std::move(path)),
        stage_(std::move(stage)) {}
  const std::string& path() const { return path_; }
  const std::string& stage() const { return stage_; }

 private:
  std::string path_;
  std::string stage_;
};

// Files under the output directory, one group per stage:
//   ingest        ingest.json
//   plan          meta_paths.json, meta_paths.txt
//   link          coreset.json
//   train-stage1  stage1/encoders.bin, stage1/records.bin, stage1/summary.json, stage1/attention.txt
//   split         manifests.json
//   build-graph   graph/
//   train-stage2  model.bin, training.json, feature_report.txt, feature_report.json
//   predict       predictions.csv
//   evaluate      metrics.json
namespace artifacts {
inline constexpr const char* kIngest = "ingest.json";
inline constexpr const char* kMetaPaths = "meta_paths.json";
inline constexpr const char* kCoreset = "coreset.json";
inline constexpr const char* kEncoders = "stage1/encoders.bin";
inline constexpr const char* kRecords = "stage1/records.bin";
inline constexpr const char* kManifests = "manifests.json";
inline constexpr const char* kGraph = "graph";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kPredictions = "predictions.csv";
inline constexpr const char* kMetrics = "metrics.json";
}  // namespace artifacts

void stage_ingest(const PipelineConfig& cfg);
void stage_plan(const PipelineConfig& cfg);
void stage_link(const PipelineConfig& cfg);
void stage_train_stage1(const PipelineConfig& cfg);
void stage_split(const PipelineConfig& cfg);
void stage_build_graph(const PipelineConfig& cfg);
void stage_train_stage2(const PipelineConfig& cfg);
void stage_predict(const PipelineConfig& cfg);
void stage_evaluate(const PipelineConfig& cfg);

/// Every stage in order, each reading the previous stage's files.
void run_all(const PipelineConfig& cfg);

// Serialization used by the stages.
nlohmann::json meta_paths_to_json(const std::map<std::string, MetaPath>& paths);
std::map<std::string, MetaPath> meta_paths_from_json(const nlohmann::json& j);
nlohmann::json coreset_to_json(const Coreset& c);
Coreset coreset_from_json(const nlohmann::json& j);
nlohmann::json manifests_to_json(const std::map<std::string, SubTableManifest>& m);
std::map<std::string, SubTableManifest> manifests_from_json(const nlohmann::json& j);
void save_records(const std::map<std::string, std::vector<AttentionRecord>>& records,
                  const std::filesystem::path& path);
std::map<std::string, std::vector<AttentionRecord>> load_records(const std::filesystem::path& path);

/// Rows: key, split, prediction, then one probability column per class.
void write_predictions(const std::filesystem::path& path, const HeteroGraph& g, const Eigen::MatrixXd& predictions,
                       const std::vector<std::string>& class_tokens);

}  // namespace recognn
