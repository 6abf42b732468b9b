#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace burncnn {

enum class BurnClass { full_thickness, deep_dermal, superficial_dermal };
enum class BinaryLabel { graft, non_graft };
enum class SplitMode { three_class, binary };
enum class Split { train, validation, test };

inline constexpr std::array<BurnClass, 3> kBurnClasses = {BurnClass::full_thickness, BurnClass::deep_dermal,
                                                          BurnClass::superficial_dermal};

const char* to_string(BurnClass c);
const char* to_string(BinaryLabel b);
const char* to_string(SplitMode m);
const char* to_string(Split s);
std::optional<BurnClass> parse_burn_class(std::string_view text);
std::optional<SplitMode> parse_split_mode(std::string_view text);
std::optional<Split> parse_split(std::string_view text);

/// Full-thickness and deep-dermal wounds need grafting; superficial-dermal do not.
BinaryLabel map_binary_label(BurnClass c);

/// Class names in index order: (full-thickness, deep-dermal, superficial-dermal)
/// or (graft, non-graft). Graft is class 0 and the positive class.
std::vector<std::string> class_order(SplitMode mode);
int class_index(BurnClass c, SplitMode mode);
std::string label_name(BurnClass c, SplitMode mode);

// ---- manifest -------------------------------------------------------------------

struct Sample {
    std::string id;
    std::filesystem::path image_path;
    BurnClass burn_class = BurnClass::full_thickness;
};

struct DatasetManifest {
    std::vector<Sample> samples;
    std::string provenance;

    std::map<BurnClass, std::size_t> class_counts() const;
    const Sample* find(std::string_view id) const;
};

struct ManifestOptions {
    /// Reject rows whose image file does not exist.
    bool check_files = true;
};

/// CSV with header `id,path,burn_class`. Relative paths resolve against the
/// manifest's directory. Throws ParseError carrying the offending line.
DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});
DatasetManifest parse_manifest(std::istream& in, const std::string& source_name,
                               const std::filesystem::path& base_dir, const ManifestOptions& options = {});
void write_manifest(const DatasetManifest& manifest, std::ostream& out);

// ---- splits -------------------------------------------------------------------

struct SplitAssignment {
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::three_class;
    std::map<std::string, Split> assignments;

    std::size_t count(Split s) const;
    /// Ids in the given split, sorted.
    std::vector<std::string> ids(Split s) const;

    friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

inline constexpr std::size_t kThreeClassHoldoutPerClass = 3;

/// Per-class counts for binary mode; the test set takes the remainder.
struct BinarySplitCounts {
    std::size_t train_graft = 9;
    std::size_t train_non_graft = 8;
    std::size_t validation_graft = 2;
    std::size_t validation_non_graft = 1;
};

/// Three validation and three test samples per class, the rest train.
SplitAssignment split_three_class(const DatasetManifest& manifest, std::uint64_t seed);
SplitAssignment split_binary(const DatasetManifest& manifest, std::uint64_t seed,
                             const BinarySplitCounts& counts = {});
SplitAssignment make_split(const DatasetManifest& manifest, SplitMode mode, std::uint64_t seed);

/// `{"seed": ..., "mode": ..., "assignments": {...}}`, keys sorted.
std::string split_to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const std::string& text);
SplitAssignment load_split(const std::filesystem::path& path);

/// Throws ContractViolation if the assignment does not partition the manifest.
void check_partition(const DatasetManifest& manifest, const SplitAssignment& split);

// ---- augmented training table ---------------------------------------------------------

inline constexpr std::size_t kVariantsPerImage = 16;

struct AugmentedRow {
    std::string id;
    std::size_t variant = 0;
    Split split = Split::train;
    std::string label;

    friend bool operator==(const AugmentedRow&, const AugmentedRow&) = default;
};

/// Sixteen rows per training sample (sorted by id, then variant). Validation
/// and test samples never appear.
std::vector<AugmentedRow> augment_split(const DatasetManifest& manifest, const SplitAssignment& split);

/// CSV with header `id,variant,split,label`.
void write_augmented_table(const std::vector<AugmentedRow>& rows, std::ostream& out);
std::vector<AugmentedRow> read_augmented_table(std::istream& in, const std::string& source_name);

/// Label counts of a table, keyed by label name.
std::map<std::string, std::size_t> label_counts(const std::vector<AugmentedRow>& rows);

}  // namespace burncnn
