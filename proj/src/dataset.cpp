#include "burncnn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "burncnn/errors.hpp"
#include "json.hpp"

namespace burncnn {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line, bool& ok) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    ok = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    if (quoted) ok = false;
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::string> sorted_ids(const DatasetManifest& manifest, auto&& pred) {
    std::vector<std::string> ids;
    for (const auto& s : manifest.samples) {
        if (pred(s)) ids.push_back(s.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void shuffle_ids(std::vector<std::string>& ids, std::uint64_t seed, std::uint64_t stream) {
    std::mt19937_64 gen(mix_seed(seed, stream));
    std::shuffle(ids.begin(), ids.end(), gen);
}

}  // namespace

// ---- labels -----------------------------------------------------------------------

const char* to_string(BurnClass c) {
    switch (c) {
        case BurnClass::full_thickness: return "full-thickness";
        case BurnClass::deep_dermal: return "deep-dermal";
        case BurnClass::superficial_dermal: return "superficial-dermal";
    }
    return "?";
}

const char* to_string(BinaryLabel b) { return b == BinaryLabel::graft ? "graft" : "non-graft"; }

const char* to_string(SplitMode m) { return m == SplitMode::binary ? "binary" : "three-class"; }

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

std::optional<BurnClass> parse_burn_class(std::string_view text) {
    for (auto c : kBurnClasses) {
        if (text == to_string(c)) return c;
    }
    return std::nullopt;
}

std::optional<SplitMode> parse_split_mode(std::string_view text) {
    if (text == "three-class") return SplitMode::three_class;
    if (text == "binary") return SplitMode::binary;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    return std::nullopt;
}

BinaryLabel map_binary_label(BurnClass c) {
    return c == BurnClass::superficial_dermal ? BinaryLabel::non_graft : BinaryLabel::graft;
}

std::vector<std::string> class_order(SplitMode mode) {
    if (mode == SplitMode::binary) return {"graft", "non-graft"};
    return {"full-thickness", "deep-dermal", "superficial-dermal"};
}

int class_index(BurnClass c, SplitMode mode) {
    if (mode == SplitMode::binary) return map_binary_label(c) == BinaryLabel::graft ? 0 : 1;
    return static_cast<int>(c);
}

std::string label_name(BurnClass c, SplitMode mode) {
    return mode == SplitMode::binary ? to_string(map_binary_label(c)) : to_string(c);
}

// ---- manifest ---------------------------------------------------------------------

std::map<BurnClass, std::size_t> DatasetManifest::class_counts() const {
    std::map<BurnClass, std::size_t> counts;
    for (auto c : kBurnClasses) counts[c] = 0;
    for (const auto& s : samples) ++counts[s.burn_class];
    return counts;
}

const Sample* DatasetManifest::find(std::string_view id) const {
    for (const auto& s : samples) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

DatasetManifest parse_manifest(std::istream& in, const std::string& source_name, const fs::path& base_dir,
                               const ManifestOptions& options) {
    std::string line;
    if (!read_line(in, line)) throw ParseError(source_name, 1, "missing header `id,path,burn_class`");
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line != "id,path,burn_class") {
        throw ParseError(source_name, 1, "header must be `id,path,burn_class`, got `" + line + "`");
    }

    DatasetManifest manifest;
    manifest.provenance = source_name;
    std::set<std::string> seen;
    for (std::size_t lineno = 2; read_line(in, line); ++lineno) {
        if (line.empty()) continue;
        bool ok = true;
        auto fields = split_csv_line(line, ok);
        if (!ok) throw ParseError(source_name, lineno, "unterminated quoted field");
        if (fields.size() != 3) {
            throw ParseError(source_name, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        Sample s;
        s.id = fields[0];
        if (s.id.empty()) throw ParseError(source_name, lineno, "empty id");
        if (fields[1].empty()) throw ParseError(source_name, lineno, "empty path for id '" + s.id + "'");
        const auto cls = parse_burn_class(fields[2]);
        if (!cls) {
            throw ParseError(source_name, lineno,
                             "unknown burn_class '" + fields[2] +
                                 "' (expected full-thickness, deep-dermal or superficial-dermal)");
        }
        s.burn_class = *cls;
        if (!seen.insert(s.id).second) throw ParseError(source_name, lineno, "duplicate id '" + s.id + "'");
        fs::path p(fields[1]);
        s.image_path = p.is_absolute() ? p : base_dir / p;
        if (options.check_files && !fs::is_regular_file(s.image_path)) {
            throw ParseError(source_name, lineno, "image file '" + s.image_path.string() + "' does not exist");
        }
        manifest.samples.push_back(std::move(s));
    }
    return manifest;
}

DatasetManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    return parse_manifest(in, path.string(), path.parent_path(), options);
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
    out << "id,path,burn_class\n";
    for (const auto& s : manifest.samples) {
        out << csv_field(s.id) << ',' << csv_field(s.image_path.generic_string()) << ',' << to_string(s.burn_class)
            << '\n';
    }
}

// ---- splits -----------------------------------------------------------------------

std::size_t SplitAssignment::count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(assignments.begin(), assignments.end(), [&](const auto& kv) { return kv.second == s; }));
}

std::vector<std::string> SplitAssignment::ids(Split s) const {
    std::vector<std::string> out;
    for (const auto& [id, split] : assignments) {
        if (split == s) out.push_back(id);
    }
    return out;
}

SplitAssignment split_three_class(const DatasetManifest& manifest, std::uint64_t seed) {
    SplitAssignment out;
    out.seed = seed;
    out.mode = SplitMode::three_class;
    constexpr std::size_t holdout = kThreeClassHoldoutPerClass;
    for (auto cls : kBurnClasses) {
        auto ids = sorted_ids(manifest, [&](const Sample& s) { return s.burn_class == cls; });
        if (ids.size() < 2 * holdout) {
            throw InfeasibleSplit(std::string("class ") + to_string(cls) + " has " + std::to_string(ids.size()) +
                                  " samples; the three-class split needs at least " + std::to_string(2 * holdout) +
                                  " (3 validation + 3 test)");
        }
        shuffle_ids(ids, seed, static_cast<std::uint64_t>(cls));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out.assignments[ids[i]] = i < holdout ? Split::validation : i < 2 * holdout ? Split::test : Split::train;
        }
    }
    return out;
}

SplitAssignment split_binary(const DatasetManifest& manifest, std::uint64_t seed, const BinarySplitCounts& counts) {
    SplitAssignment out;
    out.seed = seed;
    out.mode = SplitMode::binary;
    for (auto label : {BinaryLabel::graft, BinaryLabel::non_graft}) {
        auto ids = sorted_ids(manifest, [&](const Sample& s) { return map_binary_label(s.burn_class) == label; });
        const bool graft = label == BinaryLabel::graft;
        const std::size_t n_train = graft ? counts.train_graft : counts.train_non_graft;
        const std::size_t n_val = graft ? counts.validation_graft : counts.validation_non_graft;
        if (ids.size() < n_train + n_val + 1) {
            throw InfeasibleSplit(std::string("binary class ") + to_string(label) + " has " +
                                  std::to_string(ids.size()) + " samples; needs at least " +
                                  std::to_string(n_train + n_val + 1) + " (" + std::to_string(n_train) +
                                  " train + " + std::to_string(n_val) + " validation + 1 test)");
        }
        shuffle_ids(ids, seed, 16 + static_cast<std::uint64_t>(label));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out.assignments[ids[i]] = i < n_train ? Split::train : i < n_train + n_val ? Split::validation : Split::test;
        }
    }
    return out;
}

SplitAssignment make_split(const DatasetManifest& manifest, SplitMode mode, std::uint64_t seed) {
    return mode == SplitMode::binary ? split_binary(manifest, seed) : split_three_class(manifest, seed);
}

std::string split_to_json(const SplitAssignment& split) {
    nlohmann::json assignments = nlohmann::json::object();
    for (const auto& [id, s] : split.assignments) assignments[id] = to_string(s);
    nlohmann::json j;
    j["seed"] = split.seed;
    j["mode"] = to_string(split.mode);
    j["assignments"] = std::move(assignments);
    return j.dump(2) + "\n";
}

SplitAssignment split_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        SplitAssignment out;
        out.seed = j.at("seed").get<std::uint64_t>();
        const auto mode = parse_split_mode(j.at("mode").get<std::string>());
        if (!mode) throw ContractViolation("unknown split mode '" + j.at("mode").get<std::string>() + "'");
        out.mode = *mode;
        for (const auto& [id, v] : j.at("assignments").items()) {
            const auto s = parse_split(v.get<std::string>());
            if (!s) throw ContractViolation("unknown split '" + v.get<std::string>() + "' for id '" + id + "'");
            out.assignments[id] = *s;
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("invalid split JSON: ") + e.what());
    }
}

SplitAssignment load_split(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return split_from_json(ss.str());
}

void check_partition(const DatasetManifest& manifest, const SplitAssignment& split) {
    for (const auto& s : manifest.samples) {
        if (!split.assignments.contains(s.id)) throw ContractViolation("sample '" + s.id + "' is not assigned");
    }
    for (const auto& [id, _] : split.assignments) {
        if (!manifest.find(id)) throw ContractViolation("assigned id '" + id + "' is not in the manifest");
    }
}

// ---- augmented table ----------------------------------------------------------------

std::vector<AugmentedRow> augment_split(const DatasetManifest& manifest, const SplitAssignment& split) {
    check_partition(manifest, split);
    std::vector<AugmentedRow> rows;
    for (const auto& id : split.ids(Split::train)) {
        const Sample* s = manifest.find(id);
        const std::string label = label_name(s->burn_class, split.mode);
        for (std::size_t v = 0; v < kVariantsPerImage; ++v) rows.push_back({id, v, Split::train, label});
    }
    return rows;
}

void write_augmented_table(const std::vector<AugmentedRow>& rows, std::ostream& out) {
    out << "id,variant,split,label\n";
    for (const auto& r : rows) out << csv_field(r.id) << ',' << r.variant << ',' << to_string(r.split) << ',' << r.label << '\n';
}

std::vector<AugmentedRow> read_augmented_table(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!read_line(in, line) || line != "id,variant,split,label") {
        throw ParseError(source_name, 1, "header must be `id,variant,split,label`");
    }
    std::vector<AugmentedRow> rows;
    for (std::size_t lineno = 2; read_line(in, line); ++lineno) {
        if (line.empty()) continue;
        bool ok = true;
        auto f = split_csv_line(line, ok);
        if (!ok || f.size() != 4) throw ParseError(source_name, lineno, "expected 4 fields");
        AugmentedRow r;
        r.id = f[0];
        if (f[1].empty() || f[1].find_first_not_of("0123456789") != std::string::npos ||
            std::stoul(f[1]) >= kVariantsPerImage) {
            throw ParseError(source_name, lineno, "variant must be an integer in [0, 16)");
        }
        r.variant = std::stoul(f[1]);
        const auto s = parse_split(f[2]);
        if (!s) throw ParseError(source_name, lineno, "unknown split '" + f[2] + "'");
        r.split = *s;
        r.label = f[3];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::size_t> label_counts(const std::vector<AugmentedRow>& rows) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : rows) ++counts[r.label];
    return counts;
}

}  // namespace burncnn
