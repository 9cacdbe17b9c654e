#include "recognn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "recognn/common.hpp"
#include "recognn/csv.hpp"
#include "json.hpp"

namespace recognn {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numerical: return "numerical";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::text: return "text";
    case ColumnKind::primary_key: return "primary_key";
    case ColumnKind::foreign_key: return "foreign_key";
  }
  return "?";
}

ColumnKind parse_column_kind(const std::string& s) {
  if (s == "numerical") return ColumnKind::numerical;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "text") return ColumnKind::text;
  if (s == "primary_key") return ColumnKind::primary_key;
  if (s == "foreign_key") return ColumnKind::foreign_key;
  throw DatasetError(DatasetErrorKind::unknown_column_kind, "", s);
}

std::string cell_to_string(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return format_exact(*d);
  if (auto s = std::get_if<std::string>(&c)) return *s;
  return {};
}

namespace {

std::string describe(DatasetErrorKind kind) {
  switch (kind) {
    case DatasetErrorKind::missing_file: return "MissingFile";
    case DatasetErrorKind::duplicate_primary_key: return "DuplicatePrimaryKey";
    case DatasetErrorKind::column_mismatch: return "ColumnMismatch";
    case DatasetErrorKind::unknown_column_kind: return "UnknownColumnKind";
    case DatasetErrorKind::invalid_value: return "InvalidValue";
    case DatasetErrorKind::invalid_schema: return "InvalidSchema";
    case DatasetErrorKind::column_not_found: return "ColumnNotFound";
  }
  return "DatasetError";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first < last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return v;
}

}  // namespace

DatasetError::DatasetError(DatasetErrorKind kind, std::string table, std::string detail)
    : std::runtime_error(describe(kind) + "(" + table + ", \"" + detail + "\")"),
      kind_(kind),
      table_(std::move(table)),
      detail_(std::move(detail)) {}

Table::Table(std::string name, std::vector<ColumnSpec> columns, bool is_base)
    : name_(std::move(name)), columns_(std::move(columns)), is_base_(is_base) {
  std::size_t pk_count = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!seen.insert(columns_[i].name).second)
      throw DatasetError(DatasetErrorKind::invalid_schema, name_,
                         "duplicate column " + columns_[i].name);
    if (columns_[i].kind == ColumnKind::primary_key) {
      pk_index_ = i;
      ++pk_count;
    }
    if (columns_[i].kind == ColumnKind::foreign_key && !columns_[i].fk_target)
      throw DatasetError(DatasetErrorKind::invalid_schema, name_,
                         "foreign key without target: " + columns_[i].name);
  }
  if (pk_count != 1)
    throw DatasetError(DatasetErrorKind::invalid_schema, name_,
                       "expected exactly one primary_key column, found " +
                           std::to_string(pk_count));
}

std::optional<std::size_t> Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Table::require_column(const std::string& name) const {
  auto idx = column_index(name);
  if (!idx) throw DatasetError(DatasetErrorKind::column_not_found, name_, name);
  return *idx;
}

std::optional<std::size_t> Table::row_of_key(const std::string& key) const {
  auto it = key_index_.find(key);
  if (it == key_index_.end()) return std::nullopt;
  return it->second;
}

void Table::add_tuple(Tuple t) {
  if (t.values.size() != columns_.size())
    throw DatasetError(DatasetErrorKind::column_mismatch, name_,
                       "tuple has " + std::to_string(t.values.size()) + " values, expected " +
                           std::to_string(columns_.size()));
  const Cell& pk = t.values[pk_index_];
  if (is_null(pk)) throw DatasetError(DatasetErrorKind::invalid_value, name_, "null primary key");
  t.key = cell_to_string(pk);
  if (!key_index_.emplace(t.key, tuples_.size()).second)
    throw DatasetError(DatasetErrorKind::duplicate_primary_key, name_, t.key);
  tuples_.push_back(std::move(t));
}

std::size_t LoadReport::total_dangling() const {
  std::size_t n = 0;
  for (const auto& d : dangling) n += d.count;
  return n;
}

std::string LoadReport::to_text() const {
  std::ostringstream os;
  os << "tables: " << table_count << '\n';
  for (const auto& [name, n] : tuple_counts) os << "  " << name << ": " << n << " tuples\n";
  os << "dangling foreign keys: " << total_dangling() << '\n';
  for (const auto& d : dangling)
    os << "  " << d.table << '.' << d.column << ": " << d.count << '\n';
  return os.str();
}

RelationalDataset::RelationalDataset(std::vector<Table> tables, TaskSpec task)
    : tables_(std::move(tables)), task_(std::move(task)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (!by_name_.emplace(tables_[i].name(), i).second)
      throw DatasetError(DatasetErrorKind::invalid_schema, tables_[i].name(), "duplicate table");
  }
  if (!has_table(task_.base_table))
    throw DatasetError(DatasetErrorKind::invalid_schema, task_.base_table, "base table not found");
  for (const auto& t : tables_) {
    for (const auto& c : t.columns()) {
      if (c.kind != ColumnKind::foreign_key) continue;
      const auto& target = *c.fk_target;
      if (!has_table(target.table))
        throw DatasetError(DatasetErrorKind::invalid_schema, t.name(),
                           c.name + " references unknown table " + target.table);
      const Table& tt = table(target.table);
      auto idx = tt.column_index(target.column);
      if (!idx || tt.columns()[*idx].kind != ColumnKind::primary_key)
        throw DatasetError(DatasetErrorKind::invalid_schema, t.name(),
                           c.name + " must reference the primary key of " + target.table);
    }
  }
  const Table& b = base();
  target_index_ = b.require_column(task_.target_column);
  if (b.columns()[target_index_].is_key())
    throw DatasetError(DatasetErrorKind::invalid_schema, b.name(), "target column is a key");
  resolve_labels();
  compute_report();
}

const Table& RelationalDataset::table(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw DatasetError(DatasetErrorKind::invalid_schema, name, "unknown table");
  return tables_[it->second];
}

bool RelationalDataset::has_table(const std::string& name) const {
  return by_name_.count(name) > 0;
}

std::vector<std::size_t> RelationalDataset::feature_columns(const std::string& name) const {
  const Table& t = table(name);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.columns().size(); ++i) {
    if (t.columns()[i].is_key()) continue;
    if (name == task_.base_table && i == target_index_) continue;
    out.push_back(i);
  }
  return out;
}

void RelationalDataset::resolve_labels() {
  const Table& b = base();
  labels_.clear();
  labels_.reserve(b.size());
  if (task_.task == TaskKind::regression) {
    for (const auto& t : b.tuples()) {
      auto* v = std::get_if<double>(&t.values[target_index_]);
      if (!v) throw DatasetError(DatasetErrorKind::invalid_value, b.name(),
                                 "regression target must be numeric in tuple " + t.key);
      labels_.push_back(*v);
    }
    class_count_ = 0;
    return;
  }
  std::vector<std::string> tokens;
  for (const auto& t : b.tuples()) {
    if (is_null(t.values[target_index_]))
      throw DatasetError(DatasetErrorKind::invalid_value, b.name(), "null target in tuple " + t.key);
    tokens.push_back(cell_to_string(t.values[target_index_]));
  }
  std::vector<std::string> distinct = tokens;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  bool all_numeric = std::all_of(distinct.begin(), distinct.end(),
                                 [](const std::string& s) { return parse_number(s).has_value(); });
  if (all_numeric) {
    std::sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  int count = task_.class_count.value_or(static_cast<int>(distinct.size()));
  if (count < 2)
    throw DatasetError(DatasetErrorKind::invalid_schema, b.name(),
                       "classification requires class_count >= 2");
  if (static_cast<int>(distinct.size()) > count)
    throw DatasetError(DatasetErrorKind::invalid_value, b.name(),
                       "more distinct labels than class_count");
  class_count_ = count;
  class_tokens_ = distinct;
  for (const auto& tok : tokens) {
    auto it = std::find(distinct.begin(), distinct.end(), tok);
    labels_.push_back(static_cast<double>(it - distinct.begin()));
  }
}

void RelationalDataset::compute_report() {
  report_ = {};
  report_.table_count = tables_.size();
  for (const auto& t : tables_) {
    report_.tuple_counts.emplace_back(t.name(), t.size());
    for (std::size_t c = 0; c < t.columns().size(); ++c) {
      const auto& col = t.columns()[c];
      if (col.kind != ColumnKind::foreign_key) continue;
      const Table& target = table(col.fk_target->table);
      DanglingCount d{t.name(), col.name, 0};
      for (const auto& tup : t.tuples()) {
        const Cell& v = tup.values[c];
        if (is_null(v)) continue;
        if (!target.row_of_key(cell_to_string(v))) ++d.count;
      }
      report_.dangling.push_back(d);
    }
  }
}

namespace {

Cell parse_cell(const std::string& raw, const ColumnSpec& col, const std::string& table) {
  if (raw.empty()) return std::monostate{};
  switch (col.kind) {
    case ColumnKind::numerical: {
      auto v = parse_number(raw);
      if (!v) throw DatasetError(DatasetErrorKind::invalid_value, table, col.name + "=" + raw);
      if (!std::isfinite(*v)) {
        warn(table + "." + col.name + ": non-finite value '" + raw + "' loaded as null");
        return std::monostate{};
      }
      return *v;
    }
    default:
      return raw;
  }
}

ColumnSpec parse_column(const json& j, const std::string& table) {
  ColumnSpec c;
  c.name = j.at("name").get<std::string>();
  c.kind = parse_column_kind(j.at("kind").get<std::string>());
  if (j.contains("fk_target")) {
    const json& t = j.at("fk_target");
    if (t.is_string()) {
      auto s = t.get<std::string>();
      auto dot = s.find('.');
      if (dot == std::string::npos)
        throw DatasetError(DatasetErrorKind::invalid_schema, table, "fk_target must be table.column");
      c.fk_target = ColumnRef{s.substr(0, dot), s.substr(dot + 1)};
    } else {
      c.fk_target = ColumnRef{t.at("table").get<std::string>(), t.at("column").get<std::string>()};
    }
  }
  if (c.kind == ColumnKind::foreign_key && !c.fk_target)
    throw DatasetError(DatasetErrorKind::invalid_schema, table, c.name + " lacks fk_target");
  return c;
}

}  // namespace

RelationalDataset load_dataset(const fs::path& root, const std::string& descriptor) {
  fs::path desc_path = root / descriptor;
  std::ifstream in(desc_path);
  if (!in) throw DatasetError(DatasetErrorKind::missing_file, "", desc_path.string());
  json desc;
  try {
    desc = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError(DatasetErrorKind::invalid_schema, "", e.what());
  }

  TaskSpec task;
  try {
    task.base_table = desc.at("base_table").get<std::string>();
    task.target_column = desc.at("target_column").get<std::string>();
    std::string kind = desc.at("task").get<std::string>();
    if (kind == "classification") task.task = TaskKind::classification;
    else if (kind == "regression") task.task = TaskKind::regression;
    else throw DatasetError(DatasetErrorKind::invalid_schema, "", "unknown task " + kind);
    if (desc.contains("class_count")) task.class_count = desc.at("class_count").get<int>();
  } catch (const json::exception& e) {
    throw DatasetError(DatasetErrorKind::invalid_schema, "", e.what());
  }

  std::vector<Table> tables;
  for (const json& jt : desc.at("tables")) {
    std::string name = jt.at("name").get<std::string>();
    std::string file = jt.at("file").get<std::string>();
    std::vector<ColumnSpec> cols;
    for (const json& jc : jt.at("columns")) cols.push_back(parse_column(jc, name));
    Table table(name, cols, name == task.base_table);

    fs::path csv_path = root / file;
    if (!fs::exists(csv_path))
      throw DatasetError(DatasetErrorKind::missing_file, name, csv_path.string());
    auto rows = csv::read_file(csv_path);
    if (rows.empty()) throw DatasetError(DatasetErrorKind::column_mismatch, name, "missing header row");
    const auto& header = rows.front();
    if (header.size() != cols.size())
      throw DatasetError(DatasetErrorKind::column_mismatch, name,
                         "header has " + std::to_string(header.size()) + " columns, descriptor " +
                             std::to_string(cols.size()));
    // CSV column order may differ from the descriptor; map by name.
    std::vector<std::size_t> csv_pos(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      auto it = std::find(header.begin(), header.end(), cols[i].name);
      if (it == header.end())
        throw DatasetError(DatasetErrorKind::column_mismatch, name, "CSV lacks column " + cols[i].name);
      csv_pos[i] = static_cast<std::size_t>(it - header.begin());
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() == 1 && row[0].empty() && cols.size() > 1) continue;  // blank line
      if (row.size() != cols.size())
        throw DatasetError(DatasetErrorKind::column_mismatch, name,
                           "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                               " fields");
      Tuple t;
      t.values.reserve(cols.size());
      for (std::size_t i = 0; i < cols.size(); ++i)
        t.values.push_back(parse_cell(row[csv_pos[i]], cols[i], name));
      table.add_tuple(std::move(t));
    }
    tables.push_back(std::move(table));
  }
  return RelationalDataset(std::move(tables), std::move(task));
}

void write_dataset(const RelationalDataset& ds, const fs::path& root) {
  fs::create_directories(root);
  json desc;
  desc["base_table"] = ds.task().base_table;
  desc["target_column"] = ds.task().target_column;
  desc["task"] = ds.task().task == TaskKind::classification ? "classification" : "regression";
  if (ds.task().class_count) desc["class_count"] = *ds.task().class_count;
  desc["tables"] = json::array();
  for (const auto& t : ds.tables()) {
    json jt;
    jt["name"] = t.name();
    jt["file"] = t.name() + ".csv";
    jt["columns"] = json::array();
    csv::Row header;
    for (const auto& c : t.columns()) {
      json jc{{"name", c.name}, {"kind", to_string(c.kind)}};
      if (c.fk_target) jc["fk_target"] = {{"table", c.fk_target->table}, {"column", c.fk_target->column}};
      jt["columns"].push_back(jc);
      header.push_back(c.name);
    }
    desc["tables"].push_back(jt);
    std::vector<csv::Row> rows{header};
    for (const auto& tup : t.tuples()) {
      csv::Row r;
      for (const auto& v : tup.values) r.push_back(cell_to_string(v));
      rows.push_back(std::move(r));
    }
    csv::write_file(root / (t.name() + ".csv"), rows);
  }
  std::ofstream out(root / "schema.json");
  out << desc.dump(2) << '\n';
}

ColumnStats column_statistics(const Table& table, const std::string& column) {
  std::size_t idx = table.require_column(column);
  const ColumnSpec& spec = table.columns()[idx];
  ColumnStats s;
  if (spec.kind == ColumnKind::numerical) {
    double sum = 0.0;
    bool first = true;
    for (const auto& t : table.tuples()) {
      auto* v = std::get_if<double>(&t.values[idx]);
      if (!v) {
        ++s.nulls;
        continue;
      }
      ++s.count;
      sum += *v;
      s.min = first ? *v : std::min(s.min, *v);
      s.max = first ? *v : std::max(s.max, *v);
      first = false;
    }
    if (s.count == 0) return s;
    s.mean = sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (const auto& t : table.tuples())
      if (auto* v = std::get_if<double>(&t.values[idx])) ss += (*v - s.mean) * (*v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.count));
    // Constant columns must report exactly zero.
    if (s.min == s.max) s.stddev = 0.0;
    std::set<double> distinct;
    for (const auto& t : table.tuples())
      if (auto* v = std::get_if<double>(&t.values[idx])) distinct.insert(*v);
    s.distinct = distinct.size();
    return s;
  }
  std::set<std::string> distinct;
  for (const auto& t : table.tuples()) {
    if (is_null(t.values[idx])) {
      ++s.nulls;
      continue;
    }
    ++s.count;
    distinct.insert(cell_to_string(t.values[idx]));
  }
  s.distinct = distinct.size();
  return s;
}

}  // namespace recognn
