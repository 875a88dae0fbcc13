#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "asd/kvconfig.hpp"

namespace asd {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_missing = 2, exit_numeric = 3 };

std::string sha256_hex(std::string_view bytes);
// MissingInput if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::string subcommand;
    KvConfig config;  // resolved snapshot
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::filesystem::path> outputs;
    std::map<std::string, double> timings;  // seconds

    // Checksums are taken from the output files at call time.
    std::string to_json() const;
    void write(const std::filesystem::path& path) const;
};

// Defaults < ASD_SEED < config file < --set / dedicated flags.
KvConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides);

int run_cli(int argc, char** argv);

}  // namespace asd
