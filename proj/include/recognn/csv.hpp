#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace recognn::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may hold commas, quotes ("") and newlines.
/// A trailing '\r' before '\n' is dropped.
std::vector<Row> parse(std::istream& in);
std::vector<Row> read_file(const std::filesystem::path& path);

std::string escape(const std::string& field);
void write_row(std::ostream& out, const Row& row);
void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

}  // namespace recognn::csv
