#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace recognn {

enum class ColumnKind { numerical, categorical, text, primary_key, foreign_key };

std::string to_string(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& s);

struct ColumnRef {
  std::string table;
  std::string column;
  auto operator<=>(const ColumnRef&) const = default;
};

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;
  std::optional<ColumnRef> fk_target;

  bool is_key() const {
    return kind == ColumnKind::primary_key || kind == ColumnKind::foreign_key;
  }
};

/// A typed cell: null, a number, or a string (category token, text, or key).
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }
std::string cell_to_string(const Cell& c);

struct Tuple {
  std::string key;
  std::vector<Cell> values;
};

enum class TaskKind { classification, regression };

struct TaskSpec {
  std::string base_table;
  std::string target_column;
  TaskKind task = TaskKind::classification;
  std::optional<int> class_count;
};

class Table {
 public:
  Table() = default;
  Table(std::string name, std::vector<ColumnSpec> columns, bool is_base);

  const std::string& name() const { return name_; }
  bool is_base() const { return is_base_; }
  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::vector<Tuple>& tuples() const { return tuples_; }
  std::size_t size() const { return tuples_.size(); }

  std::size_t primary_key_index() const { return pk_index_; }
  std::optional<std::size_t> column_index(const std::string& name) const;
  std::size_t require_column(const std::string& name) const;
  std::optional<std::size_t> row_of_key(const std::string& key) const;

  /// Appends a tuple; throws DatasetError on a duplicate or null primary key
  /// or on a value-count mismatch.
  void add_tuple(Tuple t);

 private:
  std::string name_;
  std::vector<ColumnSpec> columns_;
  std::vector<Tuple> tuples_;
  std::unordered_map<std::string, std::size_t> key_index_;
  std::size_t pk_index_ = 0;
  bool is_base_ = false;
};

enum class DatasetErrorKind {
  missing_file,
  duplicate_primary_key,
  column_mismatch,
  unknown_column_kind,
  invalid_value,
  invalid_schema,
  column_not_found,
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrorKind kind, std::string table, std::string detail);
  DatasetErrorKind kind() const { return kind_; }
  const std::string& table() const { return table_; }
  const std::string& detail() const { return detail_; }

 private:
  DatasetErrorKind kind_;
  std::string table_;
  std::string detail_;
};

struct DanglingCount {
  std::string table;
  std::string column;
  std::size_t count = 0;
};

struct LoadReport {
  std::size_t table_count = 0;
  std::vector<std::pair<std::string, std::size_t>> tuple_counts;
  std::vector<DanglingCount> dangling;

  std::size_t total_dangling() const;
  std::string to_text() const;
};

class RelationalDataset {
 public:
  RelationalDataset() = default;
  RelationalDataset(std::vector<Table> tables, TaskSpec task);

  const std::vector<Table>& tables() const { return tables_; }
  const Table& table(const std::string& name) const;
  bool has_table(const std::string& name) const;
  const Table& base() const { return table(task_.base_table); }
  const TaskSpec& task() const { return task_; }
  std::size_t target_index() const { return target_index_; }
  int class_count() const { return class_count_; }
  const std::vector<std::string>& class_tokens() const { return class_tokens_; }

  /// Label of a base tuple: class index for classification, value for regression.
  double label(std::size_t base_row) const { return labels_.at(base_row); }
  const std::vector<double>& labels() const { return labels_; }

  /// Non-key feature columns of a table. For the base table this also drops
  /// the target column.
  std::vector<std::size_t> feature_columns(const std::string& table) const;

  const LoadReport& report() const { return report_; }

 private:
  void resolve_labels();
  void compute_report();

  std::vector<Table> tables_;
  std::map<std::string, std::size_t> by_name_;
  TaskSpec task_;
  std::size_t target_index_ = 0;
  int class_count_ = 0;
  std::vector<std::string> class_tokens_;
  std::vector<double> labels_;
  LoadReport report_;
};

/// Loads every table listed in `descriptor` (relative to `root`).
RelationalDataset load_dataset(const std::filesystem::path& root,
                               const std::string& descriptor = "schema.json");

/// Writes CSVs and a schema descriptor that load_dataset reads back to the
/// same typed values.
void write_dataset(const RelationalDataset& ds, const std::filesystem::path& root);

struct ColumnStats {
  std::size_t count = 0;  // non-null cells
  std::size_t nulls = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t distinct = 0;
};

ColumnStats column_statistics(const Table& table, const std::string& column);

}  // namespace recognn
