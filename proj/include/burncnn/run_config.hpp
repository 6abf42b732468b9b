#pragma once

// Flat `key = value` run configuration. Blank lines and lines starting with
// '#' are ignored; unknown keys, duplicate keys and malformed values raise
// ParseError with the line number.
//
// Keys: manifest, mode, preset, learning_rate, epochs, batch_size, momentum,
// weight_decay, seed, freeze_policy, shuffle, pretrained, out, split,
// network, from_scratch.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "burncnn/dataset.hpp"
#include "burncnn/trainer.hpp"

namespace burncnn {

enum class NetworkWidth { canonical, reduced };

struct RunConfig {
    std::optional<std::filesystem::path> manifest;
    SplitMode mode = SplitMode::binary;
    std::optional<std::string> preset;
    TrainingConfig training = binary_preset();
    std::optional<std::filesystem::path> pretrained;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> split;
    NetworkWidth network = NetworkWidth::canonical;
    bool from_scratch = false;

    /// key = value lines reproducing this configuration.
    std::string to_string() const;
};

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
};

/// Raw entries keyed by name.
using ConfigEntries = std::map<std::string, ConfigEntry>;

ConfigEntries parse_config_entries(std::istream& in, const std::string& source_name);
ConfigEntries load_config_entries(const std::filesystem::path& path);

/// Preset used for training defaults: "binary" or "three-class".
std::optional<TrainingConfig> preset_config(const std::string& name);

/// Applies a preset (if named, `preset_override` wins over the file's), then
/// every explicit key in `entries`. Relative paths resolve against `base_dir`.
RunConfig resolve_run_config(const ConfigEntries& entries, const std::string& source_name,
                             const std::filesystem::path& base_dir,
                             const std::optional<std::string>& preset_override = std::nullopt);

const char* to_string(NetworkWidth w);

}  // namespace burncnn
