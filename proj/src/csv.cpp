#include "metapuck/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "metapuck/config.hpp"

namespace metapuck::csvio {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv: no column named '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace

void write_table(const std::string& path, const Table& table) {
  if (table.header.empty()) throw std::invalid_argument("write_table: empty header");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_table: cannot open " + path);
  for (const auto& [key, value] : table.metadata)
    os << "# " << key << " = " << value << '\n';
  os << join_row(table.header) << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("write_table: row arity " + std::to_string(row.size()) +
                                  " does not match header arity " +
                                  std::to_string(table.header.size()));
    os << join_row(row) << '\n';
  }
  if (!os) throw std::runtime_error("write_table: write failed for " + path);
}

Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("csv not found: " + path);
  Table table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string body = line.substr(1);
      auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-form comment
      auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      table.metadata.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      continue;
    }
    std::vector<std::string> cells = split_row(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": row arity " +
                                  std::to_string(cells.size()) + " != header arity " +
                                  std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw std::invalid_argument(path + ": no header row");
  return table;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& cell) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty())
    throw std::invalid_argument("csv: cell is not a number: '" + cell + "'");
  return v;
}

}  // namespace metapuck::csvio
