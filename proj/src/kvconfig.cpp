#include "asd/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "asd/error.hpp"

namespace asd {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string format_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<double>("list", trim(item)));
    return out;
}

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw MissingInput("config file not found: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path.string());
}

void KvConfig::merge(const KvConfig& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

std::uint64_t KvConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> KvConfig::get_doubles(const std::string& key,
                                          const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return parse_doubles(it->second);
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "': cannot parse list '" + it->second + "'");
    }
}

std::string KvConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace asd
