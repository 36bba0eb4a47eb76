#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lfd {

// Flat `key = value` text with `#` comments. Keys keep file order so a
// materialized config can be written back deterministically.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::string& path);

  void save(const std::string& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const { return index_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Keys present here but absent from `known`; used to reject typos.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double parse_double(const std::string& key, std::string_view text);
std::int64_t parse_int(const std::string& key, std::string_view text);
bool parse_bool(const std::string& key, std::string_view text);
// Comma or whitespace separated list of numbers.
std::vector<double> parse_doubles(const std::string& key, std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lfd
