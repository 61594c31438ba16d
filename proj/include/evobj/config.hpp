#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace evobj {

// Flat key/value configuration: defaults < config file < command-line flags.
// Unknown keys are rejected; every run writes the fully-resolved map next to
// its outputs.
class RunConfig {
 public:
  static RunConfig defaults();

  void merge_file(const std::string& path);
  void set(const std::string& key, const nlohmann::json& value);
  void set_from_string(const std::string& key, const std::string& text);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double get_f64(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  std::uint32_t get_u32(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::vector<std::uint32_t> get_u32_list(const std::string& key) const;

  std::string resolved_json() const;
  const std::map<std::string, nlohmann::json>& values() const { return values_; }

 private:
  const nlohmann::json& at(const std::string& key) const;
  std::map<std::string, nlohmann::json> values_;
};

}  // namespace evobj
