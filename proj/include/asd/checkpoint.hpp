#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "asd/param_vector.hpp"

namespace asd {

// `.ckpt` layout, all integers little-endian:
//   magic    8 bytes "ASDCKPT\0"
//   version  u32 (= 1)
//   role     str            (u32 byte length + bytes)
//   meta     u32 count, then count x (str key, str value)
//   layout   u32 count, then count x (str name, u32 rank, rank x u64 dim)
//   payload  u64 count, then count x IEEE-754 binary64
struct Checkpoint {
    std::string role;  // teacher | fake | student | disc_head
    ParamVector params;
    std::map<std::string, std::string> meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// MissingInput if the file is absent; ConfigError if it is not a valid checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace asd
