#pragma once

#include "tsicl/model/config.hpp"
#include "tsicl/model/parameters.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tsicl::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers and reals little-endian):
//   "GTTD"
//   u32 version
//   u32 config_bytes, then config fields as u64 in ModelConfig declaration order
//   per tensor: u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 values
//   u32 CRC32 of every byte between the magic and the checksum

std::vector<std::uint8_t> encode_checkpoint(const Parameters& params, const ModelConfig& config);

struct Checkpoint {
    Parameters params;
    ModelConfig config;
};

/// Throws FormatError on bad magic/version, CorruptionError on truncation or
/// checksum mismatch. Nothing is returned on failure.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Parameters& params, const ModelConfig& config, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The stored trailing checksum of a checkpoint file.
std::uint32_t checkpoint_crc(const std::filesystem::path& path);

} // namespace tsicl::model
