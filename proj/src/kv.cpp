#include "sbt/kv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sbt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
    throw std::invalid_argument(what + ": expected a real number, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE || text.find('-') != std::string::npos) {
    throw std::invalid_argument(what + ": expected an unsigned integer, got '" + text + "'");
  }
  return value;
}

KvDocument KvDocument::parse(const std::string& text, const std::string& source) {
  KvDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": empty key");
    }
    if (doc.values_.count(key)) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": duplicate key '" +
                                  key + "'");
    }
    doc.set(key, value);
  }
  return doc;
}

KvDocument KvDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

void KvDocument::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[key] = value;
}

void KvDocument::set_double(const std::string& key, double value) { set(key, format_g17(value)); }

void KvDocument::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void KvDocument::set_bool(const std::string& key, bool value) { set(key, value ? "true" : "false"); }

bool KvDocument::has(const std::string& key) const { return values_.count(key) > 0; }

void KvDocument::missing(const std::string& key) const {
  throw std::invalid_argument(source_ + ": missing required key '" + key + "'");
}

const std::string& KvDocument::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) missing(key);
  return it->second;
}

double KvDocument::get_double(const std::string& key) const {
  return parse_double(get_string(key), source_ + ": key '" + key + "'");
}

std::uint64_t KvDocument::get_u64(const std::string& key) const {
  return parse_u64(get_string(key), source_ + ": key '" + key + "'");
}

bool KvDocument::get_bool(const std::string& key) const {
  const std::string& v = get_string(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument(source_ + ": key '" + key + "': expected true or false, got '" + v +
                              "'");
}

std::string KvDocument::get_string_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvDocument::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t KvDocument::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

std::string KvDocument::serialize(const std::string& banner) const {
  std::ostringstream out;
  if (!banner.empty()) out << "# " << banner << "\n";
  for (const std::string& key : order_) {
    out << key << " = " << values_.at(key) << "\n";
  }
  return out.str();
}

void KvDocument::save(const std::string& path, const std::string& banner) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << serialize(banner);
}

}  // namespace sbt
