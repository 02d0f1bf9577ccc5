#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metapuck::csvio {

// 64-bit FNV-1a; fingerprints configs inside artifact metadata.
std::uint64_t fnv1a64(std::string_view s);

// A CSV with a leading '# key = value' metadata comment block. Cells are
// plain (no quoting); writers must not put commas or newlines in cells.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws on unknown column
};

void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);  // MissingArtifactError when absent

std::string format_double(double v);  // 17 significant digits (round-trips)
double parse_double(const std::string& cell);

}  // namespace metapuck::csvio
