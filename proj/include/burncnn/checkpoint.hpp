#pragma once

// BWCK checkpoint files. Layout, all integers u32 little-endian:
//
//   "BWCK" | version | entry count
//   entry*: name length | UTF-8 name | rank | dims... | f32 LE values (row-major)
//   metadata length | UTF-8 JSON metadata
//
// Entries are named "<layer>.weight" / "<layer>.bias" in layer order. The
// metadata carries the network description under "network" and training
// provenance under "training"; a file without "network" is read as the
// canonical AlexNet with the head width taken from fc8.bias.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "burncnn/network.hpp"
#include "json.hpp"

namespace burncnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'B', 'W', 'C', 'K'};

struct TrainingMetadata {
    std::size_t epochs_completed = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<std::string> class_order;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    NetworkSpec spec;
    ParameterSet params;
    TrainingMetadata meta;
};

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& chk);
/// Throws FormatError (with byte offset) on bad magic, truncation or
/// inconsistent entries, UnsupportedVersion for newer files.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& chk, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace burncnn
