#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eoattn::io {

/// INI-style document: `[section]` headers, `key = value` lines, `#` comments.
/// Sections and keys keep insertion order so parse -> serialize -> parse is
/// idempotent and output is deterministic.
class ConfigDoc {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const;
  };

  static ConfigDoc parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigDoc load(const std::string& path);

  std::string serialize() const;
  void save(const std::string& path) const;

  bool has_section(const std::string& name) const;
  const Section* find_section(const std::string& name) const;
  Section& section(const std::string& name);  // creates if absent

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, long long value);

  // Typed getters; throw ConfigError when the key is missing or malformed.
  std::string get_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;

  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;

  /// Parses a comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

  /// Rejects any section/key pair outside the given schema
  /// (section -> allowed keys). A "*" key entry allows any key in a section.
  void validate_schema(const std::map<std::string, std::vector<std::string>>& schema) const;

  const std::vector<Section>& sections() const { return sections_; }

 private:
  std::vector<Section> sections_;
  const std::string& require(const std::string& section, const std::string& key) const;
};

}  // namespace eoattn::io
