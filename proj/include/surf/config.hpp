#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace surf {

// Minimal sectioned key-value text format:
//
//   # comment
//   [section]
//   key = value   # trailing comment
//
// Keys before the first section header land in the "" section. Later
// duplicates overwrite earlier ones.
struct KeyValueFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  const std::string& get(const std::string& section, const std::string& key) const;
};

KeyValueFile parse_key_value(std::istream& in, const std::string& origin = "<stream>");
KeyValueFile load_key_value(const std::filesystem::path& path);

std::vector<std::string> split_ws(const std::string& s);
std::string trim(const std::string& s);
double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

}  // namespace surf
