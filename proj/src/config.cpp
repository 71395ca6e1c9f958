#include "surf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "surf/errors.hpp"

namespace surf {

bool KeyValueFile::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

const std::string& KeyValueFile::get(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  if (it == sections.end()) throw ConfigError("missing section [" + section + "]");
  auto kt = it->second.find(key);
  if (kt == it->second.end()) throw ConfigError("missing key '" + key + "' in [" + section + "]");
  return kt->second;
}

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    const std::string t(trim(s));
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected a number, got '" + s + "'");
  }
}

long long parse_int(const std::string& s, const std::string& context) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(context + ": expected an integer, got '" + s + "'");
  }
  return v;
}

KeyValueFile parse_key_value(std::istream& in, const std::string& origin) {
  KeyValueFile kv;
  std::string section;
  kv.sections[section];
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      kv.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv.sections[section][key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueFile load_key_value(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_key_value(in, path.string());
}

}  // namespace surf
