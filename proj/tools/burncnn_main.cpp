// burncnn: split, augment, train, eval, predict and inspect from the shell.
//
// Exit codes: 0 success, 2 input or validation error, 3 training diverged,
// 4 filesystem failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "burncnn/checkpoint.hpp"
#include "burncnn/dataset.hpp"
#include "burncnn/errors.hpp"
#include "burncnn/image.hpp"
#include "burncnn/metrics.hpp"
#include "burncnn/network.hpp"
#include "burncnn/run_config.hpp"
#include "burncnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace burncnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> config;
};

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw ContractViolation(what + " '" + p.string() + "' does not exist");
}

fs::path require_out(const Globals& g) {
    if (!g.out) throw ContractViolation("--out is required");
    return *g.out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

SplitMode parse_mode_flag(const std::string& text) {
    auto m = parse_split_mode(text);
    if (!m) throw ContractViolation("mode must be binary or three-class, got '" + text + "'");
    return *m;
}

std::string format_g(double v, const char* fmt = "%.9g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::vector<std::string> checkpoint_classes(const Checkpoint& chk) {
    if (chk.meta.class_order.size() == chk.spec.num_classes) return chk.meta.class_order;
    if (chk.spec.num_classes == 2) return class_order(SplitMode::binary);
    if (chk.spec.num_classes == 3) return class_order(SplitMode::three_class);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < chk.spec.num_classes; ++i) names.push_back("class" + std::to_string(i));
    return names;
}

Checkpoint load_checkpoint_arg(const std::string& path) {
    require_file(path, "checkpoint");
    return load_checkpoint(path);
}

// ---- split ---------------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    std::string mode = "three-class";
};

int cmd_split(const Globals& g, const SplitArgs& a) {
    require_file(a.manifest, "manifest");
    const fs::path out = require_out(g);
    const DatasetManifest manifest = load_manifest(a.manifest);
    const SplitAssignment split = make_split(manifest, parse_mode_flag(a.mode), g.seed.value_or(0));
    ensure_dir(out);
    write_text(out / "split.json", split_to_json(split));
    std::cout << "train=" << split.count(Split::train) << " validation=" << split.count(Split::validation)
              << " test=" << split.count(Split::test) << '\n';
    return kExitOk;
}

// ---- augment ---------------------------------------------------------------------

struct AugmentArgs {
    std::string manifest;
    std::string split;
};

int cmd_augment(const Globals& g, const AugmentArgs& a) {
    require_file(a.manifest, "manifest");
    require_file(a.split, "split file");
    const fs::path out = require_out(g);
    const DatasetManifest manifest = load_manifest(a.manifest);
    const SplitAssignment split = load_split(a.split);
    check_partition(manifest, split);
    const auto rows = augment_split(manifest, split);
    std::ostringstream csv;
    write_augmented_table(rows, csv);
    ensure_dir(out);
    write_text(out / "augmented.csv", csv.str());
    for (const auto& [label, n] : label_counts(rows)) std::cout << label << '=' << n << '\n';
    return kExitOk;
}

// ---- train -------------------------------------------------------------------------

struct TrainArgs {
    std::optional<std::string> preset;
    bool from_scratch = false;
    bool print_config = false;
    std::optional<std::string> manifest;
    std::optional<std::string> mode;
    std::optional<std::string> pretrained;
    std::optional<std::string> split;
    std::optional<std::string> network;
    std::optional<double> learning_rate;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> momentum;
    std::optional<double> weight_decay;
    std::optional<std::string> freeze;
    bool no_shuffle = false;
};

RunConfig resolve_train_config(const Globals& g, const TrainArgs& a) {
    ConfigEntries entries;
    std::string source = "<command line>";
    fs::path base = fs::current_path();
    if (g.config) {
        require_file(*g.config, "config file");
        entries = load_config_entries(*g.config);
        source = *g.config;
        base = fs::absolute(*g.config).parent_path();
    }
    if (a.preset && !preset_config(*a.preset)) {
        throw ContractViolation("--preset must be binary or three-class, got '" + *a.preset + "'");
    }
    RunConfig rc = resolve_run_config(entries, source, base, a.preset);

    if (a.manifest) rc.manifest = *a.manifest;
    if (a.mode) rc.mode = parse_mode_flag(*a.mode);
    if (a.pretrained) rc.pretrained = *a.pretrained;
    if (a.split) rc.split = *a.split;
    if (g.out) rc.out = *g.out;
    if (a.network) {
        if (*a.network == "canonical") rc.network = NetworkWidth::canonical;
        else if (*a.network == "reduced") rc.network = NetworkWidth::reduced;
        else throw ContractViolation("--network must be canonical or reduced");
    }
    if (a.from_scratch) rc.from_scratch = true;
    auto& t = rc.training;
    if (g.seed) t.seed = *g.seed;
    if (a.learning_rate) t.learning_rate = *a.learning_rate;
    if (a.epochs) t.epochs = *a.epochs;
    if (a.batch_size) t.batch_size = *a.batch_size;
    if (a.momentum) t.momentum = *a.momentum;
    if (a.weight_decay) t.weight_decay = *a.weight_decay;
    if (a.no_shuffle) t.shuffle = false;
    if (a.freeze) {
        auto f = parse_freeze_spec(*a.freeze);
        if (!f) throw ContractViolation("--freeze must be none, all-but-head or first-<k>-layers");
        t.freeze = *f;
    }
    return rc;
}

/// Checks every input before any heavy work starts.
void validate_train_config(const RunConfig& rc) {
    rc.training.validate();
    if (!rc.manifest) throw ContractViolation("no manifest given (--manifest or 'manifest' in the config)");
    require_file(*rc.manifest, "manifest");
    if (rc.split) require_file(*rc.split, "split file");
    if (!rc.from_scratch) {
        if (!rc.pretrained) throw ContractViolation("a pretrained checkpoint is required unless --from-scratch is given");
        require_file(*rc.pretrained, "pretrained checkpoint");
    }
    if (!rc.out) throw ContractViolation("no output directory given (--out or 'out' in the config)");
}

int cmd_train(const Globals& g, const TrainArgs& a) {
    const RunConfig rc = resolve_train_config(g, a);
    if (a.print_config) {
        std::cout << rc.to_string();
        return kExitOk;
    }
    validate_train_config(rc);

    const DatasetManifest manifest = load_manifest(*rc.manifest);
    SplitAssignment split = rc.split ? load_split(*rc.split) : make_split(manifest, rc.mode, rc.training.seed);
    if (split.mode != rc.mode) {
        throw ContractViolation(std::string("split file is for ") + to_string(split.mode) + " but mode is " +
                                to_string(rc.mode));
    }
    check_partition(manifest, split);
    const auto rows = augment_split(manifest, split);
    const auto classes = class_order(rc.mode);

    const AlexNetOptions opts = rc.network == NetworkWidth::reduced ? reduced_alexnet_options() : AlexNetOptions{};
    Network net;
    if (rc.from_scratch) {
        net = build_alexnet(classes.size(), rc.training.seed, opts);
        net.spec = apply_freeze(std::move(net.spec), rc.training.freeze);
    } else {
        net = transfer_surgery(load_checkpoint(*rc.pretrained), classes.size(), rc.training.freeze, rc.training.seed,
                               opts);
    }

    const fs::path out = *rc.out;
    ensure_dir(out);
    write_text(out / "config.txt", rc.to_string());
    write_text(out / "split.json", split_to_json(split));
    {
        std::ostringstream csv;
        write_augmented_table(rows, csv);
        write_text(out / "augmented.csv", csv.str());
    }

    const auto train_src = ManifestSource::from_table(manifest, rows, rc.mode, opts.input_size);
    const auto val_src = ManifestSource::from_split(manifest, split, Split::validation, opts.input_size);

    std::ofstream log(out / "train.log", std::ios::binary | std::ios::trunc);
    if (!log) throw IoError("cannot open '" + (out / "train.log").string() + "' for writing");
    auto observer = [&](const EpochRecord& r) {
        const std::string line = "epoch=" + std::to_string(r.epoch) + " train_loss=" + format_g(r.train_loss, "%.6f") +
                                 " val_acc=" + format_g(r.val_acc, "%.6f");
        std::cout << line << std::endl;
        log << line << '\n';
        log.flush();
    };

    TrainResult result;
    try {
        result = train(net.spec, net.params, train_src, val_src, rc.training, classes, observer);
    } catch (const DivergenceError& e) {
        log << "diverged: " << e.what() << '\n';
        throw;
    }
    save_checkpoint(result.best, out / "best.bwck");
    save_checkpoint(result.final, out / "final.bwck");
    write_text(out / "history.csv", result.history.to_csv());
    log << "best_epoch=" << result.best_epoch << '\n';
    if (!log) throw IoError("write to train.log failed");
    std::cout << "best_epoch=" << result.best_epoch << '\n';
    return kExitOk;
}

// ---- eval ----------------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split;
    std::string subset = "test";
    std::optional<std::string> report;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
    require_file(a.manifest, "manifest");
    require_file(a.split, "split file");
    const Checkpoint chk = load_checkpoint_arg(a.checkpoint);
    const auto which = parse_split(a.subset);
    if (!which) throw ContractViolation("--subset must be train, validation or test");
    const DatasetManifest manifest = load_manifest(a.manifest);
    const SplitAssignment split = load_split(a.split);
    check_partition(manifest, split);

    const fs::path report_path = a.report ? fs::path(*a.report) : require_out(g) / "report.json";
    const auto src = ManifestSource::from_split(manifest, split, *which, chk.spec.input.height);
    const EvalReport report = evaluate(chk, src, split.mode);

    if (report_path.has_parent_path()) ensure_dir(report_path.parent_path());
    write_text(report_path, report.to_json().dump(2) + "\n");
    if (report.roc) {
        fs::path roc_path = report_path;
        roc_path.replace_filename(report_path.stem().string() + "_roc.csv");
        write_text(roc_path, report.roc_csv());
    }
    std::cout << report.summary_table();
    return kExitOk;
}

// ---- predict ---------------------------------------------------------------------------

struct PredictArgs {
    std::string checkpoint;
    std::string image;
};

int cmd_predict(const Globals&, const PredictArgs& a) {
    const Checkpoint chk = load_checkpoint_arg(a.checkpoint);
    const auto classes = checkpoint_classes(chk);
    const auto& in = chk.spec.input;
    if (in.height != in.width) throw ContractViolation("predict needs a square network input");
    const PreparedImage img = prepare_image(fs::path(a.image), 0, {}, in.height);
    const Tensor batch = img.tensor.reshaped({1, in.channels, in.height, in.width});
    const Tensor probs = predict_probabilities(chk.spec, chk.params, batch);
    const int label = argmax_rows(probs).front();

    std::cout << "label=" << classes[static_cast<std::size_t>(label)] << " p=";
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (k) std::cout << ',';
        std::cout << format_g(probs[k]);
    }
    std::cout << '\n';
    return kExitOk;
}

// ---- inspect ---------------------------------------------------------------------------

struct InspectArgs {
    std::string checkpoint;
    bool json = false;
};

int cmd_inspect(const Globals&, const InspectArgs& a) {
    const Checkpoint chk = load_checkpoint_arg(a.checkpoint);
    if (a.json) {
        nlohmann::json j;
        j["version"] = chk.version;
        j["network"] = spec_to_json(chk.spec);
        j["parameters"] = chk.params.scalar_count();
        j["training"] = {{"epochs_completed", chk.meta.epochs_completed},
                         {"seed", chk.meta.seed},
                         {"config_digest", chk.meta.config_digest},
                         {"class_order", chk.meta.class_order}};
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }
    std::cout << "version: " << chk.version << '\n';
    std::cout << "input: " << chk.spec.input.channels << 'x' << chk.spec.input.height << 'x' << chk.spec.input.width
              << "  classes: " << chk.spec.num_classes << '\n';
    const auto shapes = chk.spec.layer_output_shapes();
    for (std::size_t i = 0; i < chk.spec.layers.size(); ++i) {
        const LayerSpec& l = chk.spec.layers[i];
        std::cout << "  " << l.name << "  " << to_string(l.kind()) << "  -> " << shape_string(shapes[i]);
        if (l.has_parameters()) {
            const auto& p = chk.params.at(l.name);
            std::cout << "  weight " << shape_string(p.weights.shape()) << " bias " << shape_string(p.bias.shape())
                      << (l.trainable ? "" : "  frozen");
        }
        std::cout << '\n';
    }
    std::cout << "parameters: " << chk.params.scalar_count() << '\n';
    std::cout << "epochs_completed: " << chk.meta.epochs_completed << "  seed: " << chk.meta.seed << '\n';
    if (!chk.meta.config_digest.empty()) std::cout << "config_digest: " << chk.meta.config_digest << '\n';
    if (!chk.meta.class_order.empty()) {
        std::cout << "class_order:";
        for (const auto& c : chk.meta.class_order) std::cout << ' ' << c;
        std::cout << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Burn-depth classification with AlexNet"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for splitting, initialization and shuffling");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--config", g.config, "Run configuration file (key = value)");

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Assign manifest samples to train/validation/test");
    split->add_option("--manifest", split_args.manifest, "Dataset manifest CSV")->required();
    split->add_option("--mode", split_args.mode, "binary or three-class");

    AugmentArgs aug_args;
    auto* aug = app.add_subcommand("augment", "Expand the training split into 16 variants per image");
    aug->add_option("--manifest", aug_args.manifest, "Dataset manifest CSV")->required();
    aug->add_option("--split", aug_args.split, "Split JSON from 'split'")->required();

    TrainArgs tr;
    auto* trn = app.add_subcommand("train", "Fine-tune (or train from scratch) and write checkpoints");
    trn->add_option("--preset", tr.preset, "binary or three-class");
    trn->add_flag("--from-scratch", tr.from_scratch, "Randomly initialize instead of loading --pretrained");
    trn->add_flag("--print-config", tr.print_config, "Print the resolved configuration and exit");
    trn->add_option("--manifest", tr.manifest, "Dataset manifest CSV");
    trn->add_option("--mode", tr.mode, "binary or three-class");
    trn->add_option("--pretrained", tr.pretrained, "BWCK checkpoint to fine-tune");
    trn->add_option("--split", tr.split, "Existing split JSON (default: split from the seed)");
    trn->add_option("--network", tr.network, "canonical or reduced");
    trn->add_option("--learning-rate", tr.learning_rate);
    trn->add_option("--epochs", tr.epochs);
    trn->add_option("--batch-size", tr.batch_size);
    trn->add_option("--momentum", tr.momentum);
    trn->add_option("--weight-decay", tr.weight_decay);
    trn->add_option("--freeze", tr.freeze, "none, all-but-head or first-<k>-layers");
    trn->add_flag("--no-shuffle", tr.no_shuffle);

    EvalArgs ev;
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    evl->add_option("--checkpoint", ev.checkpoint)->required();
    evl->add_option("--manifest", ev.manifest)->required();
    evl->add_option("--split", ev.split)->required();
    evl->add_option("--subset", ev.subset, "train, validation or test");
    evl->add_option("--report", ev.report, "Report JSON path (default <out>/report.json)");

    PredictArgs pr;
    auto* prd = app.add_subcommand("predict", "Classify one image");
    prd->add_option("--checkpoint", pr.checkpoint)->required();
    prd->add_option("--image", pr.image)->required();

    InspectArgs in;
    auto* ins = app.add_subcommand("inspect", "Describe a checkpoint");
    ins->add_option("--checkpoint", in.checkpoint)->required();
    ins->add_flag("--json", in.json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*split) return cmd_split(g, split_args);
        if (*aug) return cmd_augment(g, aug_args);
        if (*trn) return cmd_train(g, tr);
        if (*evl) return cmd_eval(g, ev);
        if (*prd) return cmd_predict(g, pr);
        if (*ins) return cmd_inspect(g, in);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}
