#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sleepcot {

/// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers and
/// concurrent writers of the same path only ever observe complete content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Round half away from zero to `decimals` places. A relative nudge of a few
/// ulps absorbs binary representation error (4.25 stored as 4.2499999...).
double round_half_away(double value, int decimals);

/// Runs fn(0..n-1) on at most `parallelism` threads. fn must not throw.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

/// Flat `key = value` configuration. Lines starting with '#' are comments;
/// keys are dotted paths such as `sdnn.general_min`.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  /// All keys that start with `prefix` (prefix included in the returned keys).
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace sleepcot
