#include "chansel/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chansel {

namespace {

const std::map<std::string, std::string>& default_entries() {
    static const std::map<std::string, std::string> defaults = {
        {"channels.count", "3"},
        {"gop.duration_s", "1.0"},
        {"gop.frames", "30"},
        {"video.ref_packets", "42"},
        {"video.packet_bytes", "1400"},
        {"video.diff_min", "2"},
        {"video.diff_max", "4"},
        {"probe.count", "50"},
        {"probe.bytes", "100"},
        {"window.W", "10"},
        {"window.H", "10"},
        {"label.y_db", "40.0"},
        {"label.k", "6"},
        {"cnn.kernels", "10"},
        {"cnn.kernel_len", "5"},
        {"cnn.hidden", "64,32"},
        {"train.lr", "0.003"},
        {"train.epochs", "100"},
        {"train.batch", "64"},
        {"train.fraction", "0.75"},
        {"sim.seed", "1"},
        {"sim.rate_bps", "10000000"},
        {"sim.base_latency_s", "0.002"},
        {"sim.backlog_cap_s", "0.09"},
        {"sim.bg_deadline_s", "1.0"},
        {"sim.mobility_variance", "0.005"},
        {"bg.rate_scale", "1.0"},
        {"run.num_gops", "5000"},
        {"run.policy", "predictive"},
        {"run.rotation_period", "50"},
        {"run.inference_allowance_s", "0.000005"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    size_t a = 0;
    size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string env_name(const std::string& key) {
    std::string out;
    for (char c : key)
        out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(c)));
    return out;
}

}  // namespace

ConfigMap ConfigMap::defaults() {
    ConfigMap cfg;
    cfg.values_ = default_entries();
    return cfg;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
    ConfigMap cfg = defaults();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void ConfigMap::apply_env() {
    for (auto& [key, value] : values_) {
        if (const char* env = std::getenv(env_name(key).c_str())) value = env;
    }
}

void ConfigMap::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + key_equals_value);
    set(trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    if (!default_entries().count(key))
        throw std::invalid_argument("unknown config key: " + key);
    values_[key] = value;
}

const std::string& ConfigMap::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key: " + key);
    return it->second;
}

long ConfigMap::get_long(const std::string& key) const {
    size_t pos = 0;
    const std::string& s = get(key);
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer for " + key + ": " + s);
    return v;
}

double ConfigMap::get_double(const std::string& key) const {
    size_t pos = 0;
    const std::string& s = get(key);
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number for " + key + ": " + s);
    return v;
}

uint64_t ConfigMap::get_u64(const std::string& key) const {
    size_t pos = 0;
    const std::string& s = get(key);
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer for " + key + ": " + s);
    return v;
}

std::vector<int> ConfigMap::get_int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    return out;
}

}  // namespace chansel
