#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sbt {

/// Flat "key = value" text document. Lines starting with '#' are comments;
/// keys may carry dotted sections (tmst.n_sq). Parse errors carry
/// "<source>:<line>: <message>".
class KvDocument {
 public:
  KvDocument() = default;

  static KvDocument parse(const std::string& text, const std::string& source = "<string>");
  static KvDocument load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_bool(const std::string& key, bool value);

  bool has(const std::string& key) const;

  const std::string& get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;

  /// Keys in insertion order.
  const std::vector<std::string>& keys() const { return order_; }

  /// Canonical serialization: optional '#'-prefixed banner, then one
  /// "key = value" line per entry in insertion order.
  std::string serialize(const std::string& banner = {}) const;
  void save(const std::string& path, const std::string& banner = {}) const;

  const std::string& source() const { return source_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
  std::string source_ = "<memory>";

  [[noreturn]] void missing(const std::string& key) const;
};

/// Shortest round-trip decimal form of a double (17 significant digits).
std::string format_g17(double value);

/// Strict double parse; throws std::invalid_argument naming `what` on failure.
double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);

}  // namespace sbt
