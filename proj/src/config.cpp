#include "eoattn/config.hpp"

#include <algorithm>
#include <sstream>

#include "eoattn/csv.hpp"
#include "eoattn/errors.hpp"

namespace eoattn::io {

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

const std::string* ConfigDoc::Section::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

ConfigDoc ConfigDoc::parse(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string line;
  Section* current = nullptr;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw Error(ErrorCode::ParseError,
                    origin + ":" + std::to_string(line_no) + ": malformed section header");
      }
      current = &doc.section(trim(t.substr(1, t.size() - 2)));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    if (!current) {
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(line_no) + ": key before any [section]");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (current->find(key)) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) +
                                             ": duplicate key '" + key + "'");
    }
    current->entries.emplace_back(std::move(key), std::move(value));
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& path) { return parse(read_text(path), path); }

std::string ConfigDoc::serialize() const {
  std::string out;
  for (size_t i = 0; i < sections_.size(); ++i) {
    if (i) out += '\n';
    out += '[' + sections_[i].name + "]\n";
    for (const auto& [k, v] : sections_[i].entries) {
      out += k + " = " + v + '\n';
    }
  }
  return out;
}

void ConfigDoc::save(const std::string& path) const { write_text_atomic(path, serialize()); }

bool ConfigDoc::has_section(const std::string& name) const {
  return find_section(name) != nullptr;
}

const ConfigDoc::Section* ConfigDoc::find_section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

ConfigDoc::Section& ConfigDoc::section(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return s;
  sections_.push_back({name, {}});
  return sections_.back();
}

void ConfigDoc::set(const std::string& sec, const std::string& key, const std::string& value) {
  Section& s = section(sec);
  for (auto& [k, v] : s.entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  s.entries.emplace_back(key, value);
}

void ConfigDoc::set(const std::string& sec, const std::string& key, double value) {
  set(sec, key, fmt(value));
}

void ConfigDoc::set(const std::string& sec, const std::string& key, long long value) {
  set(sec, key, fmt(value));
}

const std::string& ConfigDoc::require(const std::string& sec, const std::string& key) const {
  const Section* s = find_section(sec);
  if (!s) throw Error(ErrorCode::ConfigError, "missing section [" + sec + "]");
  const std::string* v = s->find(key);
  if (!v) throw Error(ErrorCode::ConfigError, "missing key '" + key + "' in [" + sec + "]");
  return *v;
}

std::string ConfigDoc::get_string(const std::string& sec, const std::string& key) const {
  return require(sec, key);
}

double ConfigDoc::get_double(const std::string& sec, const std::string& key) const {
  return parse_double(require(sec, key), "[" + sec + "]." + key, 0);
}

long long ConfigDoc::get_int(const std::string& sec, const std::string& key) const {
  return parse_int(require(sec, key), "[" + sec + "]." + key, 0);
}

bool ConfigDoc::get_bool(const std::string& sec, const std::string& key) const {
  const std::string& v = require(sec, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, "[" + sec + "]." + key + ": expected a boolean, got '" + v + "'");
}

std::string ConfigDoc::get_string_or(const std::string& sec, const std::string& key,
                                     const std::string& fallback) const {
  const Section* s = find_section(sec);
  if (!s) return fallback;
  const std::string* v = s->find(key);
  return v ? *v : fallback;
}

double ConfigDoc::get_double_or(const std::string& sec, const std::string& key,
                                double fallback) const {
  const Section* s = find_section(sec);
  if (!s || !s->find(key)) return fallback;
  return get_double(sec, key);
}

long long ConfigDoc::get_int_or(const std::string& sec, const std::string& key,
                                long long fallback) const {
  const Section* s = find_section(sec);
  if (!s || !s->find(key)) return fallback;
  return get_int(sec, key);
}

bool ConfigDoc::get_bool_or(const std::string& sec, const std::string& key, bool fallback) const {
  const Section* s = find_section(sec);
  if (!s || !s->find(key)) return fallback;
  return get_bool(sec, key);
}

std::vector<double> ConfigDoc::get_double_list(const std::string& sec,
                                               const std::string& key) const {
  const std::string& raw = require(sec, key);
  std::vector<double> out;
  std::string cur;
  std::istringstream ss(raw);
  while (std::getline(ss, cur, ',')) {
    const std::string t = trim(cur);
    if (t.empty()) continue;
    out.push_back(parse_double(t, "[" + sec + "]." + key, 0));
  }
  if (out.empty()) {
    throw Error(ErrorCode::ConfigError, "[" + sec + "]." + key + ": empty list");
  }
  return out;
}

void ConfigDoc::validate_schema(
    const std::map<std::string, std::vector<std::string>>& schema) const {
  for (const auto& s : sections_) {
    auto it = schema.find(s.name);
    if (it == schema.end()) {
      throw Error(ErrorCode::ConfigError, "unknown section [" + s.name + "]");
    }
    const auto& allowed = it->second;
    if (std::find(allowed.begin(), allowed.end(), "*") != allowed.end()) continue;
    for (const auto& [k, v] : s.entries) {
      (void)v;
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        throw Error(ErrorCode::ConfigError, "unknown key '" + k + "' in [" + s.name + "]");
      }
    }
  }
}

}  // namespace eoattn::io
