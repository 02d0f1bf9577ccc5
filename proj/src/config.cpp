#include "metapuck/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace metapuck {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + stripped + "'");
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    if (cfg.entries_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    cfg.entries_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("config file not found: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  try {
    return parse_string(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

bool KeyValueConfig::has(std::string_view key) const {
  return entries_.count(std::string(key)) != 0;
}

std::string KeyValueConfig::get_string(std::string_view key) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end())
    throw std::invalid_argument("config: missing required key '" + std::string(key) + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  auto it = entries_.find(std::string(key));
  return it == entries_.end() ? std::move(fallback) : it->second;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || it->second.empty())
    throw std::invalid_argument("config: key '" + std::string(key) + "' is not a number: '" +
                                it->second + "'");
  return v;
}

std::int64_t KeyValueConfig::get_int(std::string_view key, std::int64_t fallback) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return fallback;
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || it->second.empty())
    throw std::invalid_argument("config: key '" + std::string(key) +
                                "' is not an integer: '" + it->second + "'");
  return v;
}

std::uint64_t KeyValueConfig::get_uint(std::string_view key, std::uint64_t fallback) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return fallback;
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || it->second.empty() || it->second.front() == '-')
    throw std::invalid_argument("config: key '" + std::string(key) +
                                "' is not a non-negative integer: '" + it->second + "'");
  return v;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: key '" + std::string(key) + "' is not a boolean: '" +
                              it->second + "'");
}

std::vector<std::string> KeyValueConfig::get_list(std::string_view key,
                                                  std::vector<std::string> fallback) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return fallback;
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(it->second);
  while (std::getline(is, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

void KeyValueConfig::require_known(std::initializer_list<std::string_view> known) const {
  for (const auto& [key, value] : entries_) {
    bool ok = false;
    for (std::string_view k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void KeyValueConfig::set(std::string key, std::string value) {
  entries_[std::move(key)] = std::move(value);
}

std::string KeyValueConfig::canonical_text() const {
  std::string out;  // std::map iterates in sorted key order
  for (const auto& [key, value] : entries_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace metapuck
