#include "burncnn/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "burncnn/errors.hpp"

namespace burncnn {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "manifest", "mode",          "preset",  "learning_rate", "epochs", "batch_size",
        "momentum", "weight_decay",  "seed",    "freeze_policy", "shuffle", "pretrained",
        "out",      "split",         "network", "from_scratch",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Converter {
    const std::string& source;

    [[noreturn]] void fail(const ConfigEntry& e, const std::string& key, const std::string& what) const {
        throw ParseError(source, e.line, key + ": " + what + " (got '" + e.value + "')");
    }

    double real(const std::string& key, const ConfigEntry& e) const {
        double v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) fail(e, key, "expected a number");
        return v;
    }

    std::uint64_t unsigned_int(const std::string& key, const ConfigEntry& e) const {
        std::uint64_t v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) fail(e, key, "expected a non-negative integer");
        return v;
    }

    bool flag(const std::string& key, const ConfigEntry& e) const {
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        fail(e, key, "expected true or false");
    }
};

}  // namespace

const char* to_string(NetworkWidth w) { return w == NetworkWidth::canonical ? "canonical" : "reduced"; }

ConfigEntries parse_config_entries(std::istream& in, const std::string& source_name) {
    ConfigEntries out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source_name, line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(source_name, line_no, "empty key");
        if (!known_keys().contains(key)) throw ParseError(source_name, line_no, "unknown key '" + key + "'");
        if (value.empty()) throw ParseError(source_name, line_no, "empty value for '" + key + "'");
        if (!out.emplace(key, ConfigEntry{value, line_no}).second) {
            throw ParseError(source_name, line_no, "duplicate key '" + key + "'");
        }
    }
    return out;
}

ConfigEntries load_config_entries(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse_config_entries(in, path.string());
}

std::optional<TrainingConfig> preset_config(const std::string& name) {
    if (name == "binary") return binary_preset();
    if (name == "three-class") return three_class_preset();
    return std::nullopt;
}

RunConfig resolve_run_config(const ConfigEntries& entries, const std::string& source_name, const fs::path& base_dir,
                             const std::optional<std::string>& preset_override) {
    const Converter conv{source_name};
    RunConfig rc;
    auto get = [&](const char* key) -> const ConfigEntry* {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };
    auto path_of = [&](const ConfigEntry& e) {
        fs::path p(e.value);
        return p.is_relative() ? base_dir / p : p;
    };

    std::optional<std::string> preset = preset_override;
    if (!preset) {
        if (const auto* e = get("preset")) preset = e->value;
    }
    if (preset) {
        auto cfg = preset_config(*preset);
        if (!cfg) {
            const auto* e = get("preset");
            if (preset_override || !e) throw ContractViolation("unknown preset '" + *preset + "'");
            conv.fail(*e, "preset", "expected binary or three-class");
        }
        rc.preset = preset;
        rc.training = *cfg;
        rc.mode = *preset == "binary" ? SplitMode::binary : SplitMode::three_class;
    }

    if (const auto* e = get("mode")) {
        auto m = parse_split_mode(e->value);
        if (!m) conv.fail(*e, "mode", "expected binary or three-class");
        rc.mode = *m;
    }
    if (const auto* e = get("manifest")) rc.manifest = path_of(*e);
    if (const auto* e = get("pretrained")) rc.pretrained = path_of(*e);
    if (const auto* e = get("out")) rc.out = path_of(*e);
    if (const auto* e = get("split")) rc.split = path_of(*e);
    if (const auto* e = get("network")) {
        if (e->value == "canonical") rc.network = NetworkWidth::canonical;
        else if (e->value == "reduced") rc.network = NetworkWidth::reduced;
        else conv.fail(*e, "network", "expected canonical or reduced");
    }
    if (const auto* e = get("from_scratch")) rc.from_scratch = conv.flag("from_scratch", *e);

    auto& t = rc.training;
    if (const auto* e = get("learning_rate")) t.learning_rate = conv.real("learning_rate", *e);
    if (const auto* e = get("epochs")) t.epochs = conv.unsigned_int("epochs", *e);
    if (const auto* e = get("batch_size")) t.batch_size = conv.unsigned_int("batch_size", *e);
    if (const auto* e = get("momentum")) t.momentum = conv.real("momentum", *e);
    if (const auto* e = get("weight_decay")) t.weight_decay = conv.real("weight_decay", *e);
    if (const auto* e = get("seed")) t.seed = conv.unsigned_int("seed", *e);
    if (const auto* e = get("shuffle")) t.shuffle = conv.flag("shuffle", *e);
    if (const auto* e = get("freeze_policy")) {
        auto f = parse_freeze_spec(e->value);
        if (!f) conv.fail(*e, "freeze_policy", "expected none, all-but-head or first-<k>-layers");
        t.freeze = *f;
    }
    return rc;
}

std::string RunConfig::to_string() const {
    std::ostringstream os;
    if (manifest) os << "manifest = " << manifest->string() << '\n';
    os << "mode = " << burncnn::to_string(mode) << '\n';
    if (preset) os << "preset = " << *preset << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", training.learning_rate);
    os << "learning_rate = " << buf << '\n';
    os << "epochs = " << training.epochs << '\n';
    os << "batch_size = " << training.batch_size << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", training.momentum);
    os << "momentum = " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", training.weight_decay);
    os << "weight_decay = " << buf << '\n';
    os << "seed = " << training.seed << '\n';
    os << "freeze_policy = " << burncnn::to_string(training.freeze) << '\n';
    os << "shuffle = " << (training.shuffle ? "true" : "false") << '\n';
    if (pretrained) os << "pretrained = " << pretrained->string() << '\n';
    if (out) os << "out = " << out->string() << '\n';
    if (split) os << "split = " << split->string() << '\n';
    os << "network = " << burncnn::to_string(network) << '\n';
    os << "from_scratch = " << (from_scratch ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace burncnn
