#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace asd {

// Flat `key = value` text, one entry per line, `#` starts a comment.
class KvConfig {
public:
    static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
    // MissingInput if the file cannot be opened.
    static KvConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    // Later entries win.
    void merge(const KvConfig& other);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    std::string to_text() const;

private:
    std::map<std::string, std::string> entries_;
};

std::string format_double(double v);
std::string format_doubles(const std::vector<double>& v);
std::vector<double> parse_doubles(const std::string& text);

}  // namespace asd
