#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace chansel {

// Flat "key = value" configuration with defaults for every known key.
// Precedence: defaults < config file < environment < explicit overrides.
// Environment variables use the upper-cased key path with dots replaced by
// underscores (window.H -> WINDOW_H).
class ConfigMap {
  public:
    static ConfigMap defaults();
    static ConfigMap from_file(const std::string& path);  // defaults + file

    void apply_env();
    void apply_override(const std::string& key_equals_value);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    long get_long(const std::string& key) const;
    double get_double(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace chansel
