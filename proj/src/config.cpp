#include "mcgc/config.hpp"

#include "mcgc/error.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mcgc {

namespace {

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s)
{
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"')
      quoted = !quoted;
    else if (s[i] == '#' && !quoted)
      return s.substr(0, i);
  }
  return s;
}

} // namespace

void ConfigTable::set(std::string key, std::string value, int line)
{
  lines_[key] = line;
  values_[std::move(key)] = std::move(value);
}

double ConfigTable::number(const std::string& key, double fallback) const
{
  return has(key) ? number(key) : fallback;
}

double ConfigTable::number(const std::string& key) const
{
  const auto it = values_.find(key);
  if (it == values_.end())
    throw Error(ErrorKind::Config, "missing config key '" + key + "'");
  const char* begin = it->second.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw Error(ErrorKind::Parse, "line " + std::to_string(lines_.at(key)) + ": key '" + key +
                                    "' is not a number: " + it->second);
  return v;
}

std::string ConfigTable::text(const std::string& key, const std::string& fallback) const
{
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

bool ConfigTable::boolean(const std::string& key, bool fallback) const
{
  const auto it = values_.find(key);
  if (it == values_.end())
    return fallback;
  if (it->second == "true")
    return true;
  if (it->second == "false")
    return false;
  throw Error(ErrorKind::Parse, "line " + std::to_string(lines_.at(key)) + ": key '" + key +
                                  "' is not a boolean");
}

ConfigDocument parse_config(std::string_view text)
{
  ConfigDocument doc;
  ConfigTable* current = &doc.root;
  std::string prefix;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(strip_comment(raw));
    if (line.empty())
      continue;
    const auto where = "line " + std::to_string(line_no) + ": ";

    if (line.starts_with("[[")) {
      if (!line.ends_with("]]"))
        throw Error(ErrorKind::Parse, where + "unterminated array table header");
      const std::string name{trim(line.substr(2, line.size() - 4))};
      auto& list = doc.arrays[name];
      list.emplace_back();
      current = &list.back();
      prefix.clear();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorKind::Parse, where + "unterminated table header");
      current = &doc.root;
      prefix = std::string(trim(line.substr(1, line.size() - 2))) + ".";
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::Parse, where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(ErrorKind::Parse, where + "empty key or value");
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"')
        throw Error(ErrorKind::Parse, where + "unterminated string");
      value = value.substr(1, value.size() - 2);
    }
    std::string full = prefix + std::string(key);
    if (current->has(full))
      throw Error(ErrorKind::Parse, where + "duplicate key '" + full + "'");
    current->set(std::move(full), std::string(value), line_no);
  }
  return doc;
}

ConfigDocument load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Parse, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace mcgc
