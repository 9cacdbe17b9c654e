#pragma once

// Helpers shared by the unit tests: small hand-built datasets, temporary
// directories and a tolerance check for finite-difference comparisons.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"
#include "recognn/hetgraph.hpp"
#include "recognn/optim.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace recognn;

inline ColumnSpec pk(std::string name = "id") { return {std::move(name), ColumnKind::primary_key, std::nullopt}; }
inline ColumnSpec num(std::string name) { return {std::move(name), ColumnKind::numerical, std::nullopt}; }
inline ColumnSpec cat(std::string name) { return {std::move(name), ColumnKind::categorical, std::nullopt}; }
inline ColumnSpec txt(std::string name) { return {std::move(name), ColumnKind::text, std::nullopt}; }
inline ColumnSpec fk(std::string name, std::string table, std::string column = "id") {
  return {std::move(name), ColumnKind::foreign_key, ColumnRef{std::move(table), std::move(column)}};
}

inline Table make_table(std::string name, std::vector<ColumnSpec> cols, bool is_base,
                        const std::vector<std::vector<Cell>>& rows) {
  Table t(std::move(name), std::move(cols), is_base);
  for (const auto& r : rows) t.add_tuple(Tuple{"", r});
  return t;
}

/// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("recognn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

/// Analytic vs numeric derivative: relative error below `tol`, or both tiny.
inline bool grad_close(double analytic, double numeric, double tol = 1e-4) {
  const double diff = std::abs(analytic - numeric);
  if (diff < 1e-7) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) < tol;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;  // largest relative error seen
  std::string first_failure;
};

/// Central differences (step 1e-5) of `loss` against `grads` for every
/// `stride`-th entry of every tensor.
template <typename Loss>
GradCheck check_gradients(const std::vector<TensorView>& params, const std::vector<TensorView>& grads, Loss loss,
                          std::size_t stride = 1, double tol = 1e-4) {
  GradCheck r;
  const double h = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t j = 0; j < params[k].values.size(); j += stride) {
      double& p = params[k].values[j];
      const double old = p;
      p = old + h;
      const double up = loss();
      p = old - h;
      const double down = loss();
      p = old;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[k].values[j];
      const double diff = std::abs(analytic - numeric);
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      const double rel = scale < 1e-6 ? 0.0 : diff / scale;
      r.worst = std::max(r.worst, rel);
      ++r.checked;
      if (!grad_close(analytic, numeric, tol)) {
        if (r.failed++ == 0)
          r.first_failure = params[k].name + "[" + std::to_string(j) + "]: analytic " + std::to_string(analytic) +
                            " numeric " + std::to_string(numeric);
      }
    }
  }
  return r;
}

struct EdgeSpec {
  std::size_t src_type, src, dst_type, dst;
  Relation relation = Relation::join;
};

/// A heterogeneous graph built directly (no dataset): node type t has
/// counts[t] nodes with the given feature matrix; type 0 is the base table.
inline HeteroGraph make_graph(const std::vector<Eigen::MatrixXd>& features, const std::vector<EdgeSpec>& edges,
                              TaskKind task, int class_count, const std::vector<double>& labels) {
  HeteroGraph g;
  g.task = task;
  g.class_count = class_count;
  std::size_t next = 0;
  for (std::size_t t = 0; t < features.size(); ++t) {
    NodeTypeInfo info;
    info.name = t == 0 ? "base" : "aux" + std::to_string(t);
    info.table = info.name;
    info.is_base = t == 0;
    info.count = static_cast<std::size_t>(features[t].rows());
    info.first_id = next;
    info.width = static_cast<std::size_t>(features[t].cols());
    next += info.count;
    g.types.push_back(info);
    g.features.push_back(features[t]);
    std::vector<std::string> keys;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < info.count; ++i) {
      keys.push_back(info.name + std::to_string(i));
      rows.push_back(i);
    }
    g.keys.push_back(keys);
    g.rows.push_back(rows);
  }
  std::map<EdgeTypeKey, EdgeTypeIndex> by_key;
  for (const auto& e : edges) {
    EdgeTypeKey key{g.types[e.src_type].name, e.relation, g.types[e.dst_type].name};
    auto& idx = by_key[key];
    idx.key = key;
    idx.src_type = e.src_type;
    idx.dst_type = e.dst_type;
    idx.src.push_back(e.src);
    idx.dst.push_back(e.dst);
    idx.weight.push_back(1.0);
  }
  for (auto& [key, idx] : by_key) {
    const std::size_t n = g.types[idx.dst_type].count;
    idx.in_offsets.assign(n + 1, 0);
    for (auto d : idx.dst) ++idx.in_offsets[d + 1];
    for (std::size_t i = 0; i < n; ++i) idx.in_offsets[i + 1] += idx.in_offsets[i];
    std::vector<std::size_t> cursor(idx.in_offsets.begin(), idx.in_offsets.end() - 1);
    idx.in_edges.assign(idx.size(), 0);
    for (std::size_t k = 0; k < idx.size(); ++k) idx.in_edges[cursor[idx.dst[k]]++] = k;
    g.edge_types.push_back(idx);
  }
  g.labels = labels;
  g.split.assign(labels.size(), Split::train);
  return g;
}

}  // namespace testing
