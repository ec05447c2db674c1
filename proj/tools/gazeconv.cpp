// gazeconv: train, apply and evaluate the raw gaze-signal networks.
//
//   gazeconv train     <segment|reconstruct|generate> --data ... --out ...
//   gazeconv segment   --model ... --input ... --output ...
//   gazeconv reconstruct --model ... --input ... --output ...
//   gazeconv generate  --model ... --length N --output ...
//   gazeconv eval      <segment|reconstruct> ...
//
// Every command is deterministic given (config, seed, data); the fully
// resolved configuration is written next to the outputs before any
// long-running work starts.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazeconv/errors.hpp"
#include "gazeconv/eval.hpp"
#include "gazeconv/gaze_data.hpp"
#include "gazeconv/genvae.hpp"
#include "gazeconv/model_io.hpp"
#include "gazeconv/reconnet.hpp"
#include "gazeconv/run_config.hpp"
#include "gazeconv/segnet.hpp"

namespace fs = std::filesystem;
using namespace gazeconv;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string data;
    std::string out = ".";
    std::string config_file;
    std::uint64_t seed = 0;
};

std::string resolve_data_path(const std::string& flag_value) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    if (const char* env = std::getenv("GAZECONV_DATA_ROOT"); env != nullptr && *env != '\0') {
        return env;
    }
    throw ConfigError("no --data given and GAZECONV_DATA_ROOT is unset");
}

KeyValueConfig load_base_config(const CommonArgs& args) {
    if (args.config_file.empty()) {
        return {};
    }
    return KeyValueConfig::parse_file(args.config_file);
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> values;
    std::string current;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (current.empty()) {
                continue;
            }
            char* end = nullptr;
            const long v = std::strtol(current.c_str(), &end, 10);
            if (end != current.c_str() + current.size()) {
                throw ConfigError(std::string(what) + ": not an integer: '" + current + "'");
            }
            values.push_back(static_cast<int>(v));
            current.clear();
        } else if (ch != ' ') {
            current += ch;
        }
    }
    if (values.empty()) {
        throw ConfigError(std::string(what) + ": empty list");
    }
    return values;
}

std::string int_list_to_string(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(values[i]);
    }
    return out;
}

std::vector<GazeSequence> sequences_of(const std::vector<LoadedSequence>& loaded) {
    std::vector<GazeSequence> out;
    out.reserve(loaded.size());
    for (const auto& l : loaded) {
        out.push_back(l.sequence);
    }
    return out;
}

void write_sanitation_reports(const std::vector<LoadedSequence>& loaded, const fs::path& out) {
    std::string text;
    for (const auto& l : loaded) {
        if (l.sanitation.clean()) {
            continue;
        }
        for (const auto& e : l.sanitation.entries) {
            text += l.sequence.subject_id + "\t" + std::to_string(e.row) + "\t" + e.reason +
                    "\n";
        }
    }
    if (!text.empty()) {
        std::ofstream file(out / "sanitation_report.txt");
        file << text;
    }
}

// --- config <-> struct plumbing -------------------------------------------

SegTrainConfig seg_config_from(const KeyValueConfig& cfg, SegArchitecture* arch) {
    SegTrainConfig c;
    c.initial_lr = cfg.get_double("segment", "initial_lr", c.initial_lr);
    c.weight_decay = cfg.get_double("segment", "weight_decay", c.weight_decay);
    c.momentum = cfg.get_double("segment", "momentum", c.momentum);
    c.lr_decay_factor = cfg.get_double("segment", "lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_every = static_cast<int>(cfg.get_long("segment", "lr_decay_every", c.lr_decay_every));
    c.stop_lr = cfg.get_double("segment", "stop_lr", c.stop_lr);
    c.jitter = cfg.get_bool("segment", "jitter", c.jitter);
    c.shift = cfg.get_bool("segment", "shift", c.shift);
    c.crop = cfg.get_bool("segment", "crop", c.crop);
    c.crop_min_fraction = cfg.get_double("segment", "crop_min_fraction", c.crop_min_fraction);
    c.batch_size = static_cast<int>(cfg.get_long("segment", "batch_size", c.batch_size));
    c.max_epochs = static_cast<int>(cfg.get_long("segment", "max_epochs", c.max_epochs));
    if (arch != nullptr) {
        if (cfg.has("segment", "kernel_heights")) {
            arch->kernel_heights =
                parse_int_list(cfg.get("segment", "kernel_heights", ""), "kernel_heights");
        }
        if (cfg.has("segment", "channels")) {
            arch->channels = parse_int_list(cfg.get("segment", "channels", ""), "channels");
        }
    }
    return c;
}

void seg_config_into(const SegTrainConfig& c, const SegArchitecture& arch,
                     KeyValueConfig& cfg) {
    cfg.set("segment", "optimizer", "sgd_momentum");
    cfg.set_double("segment", "initial_lr", c.initial_lr);
    cfg.set_double("segment", "weight_decay", c.weight_decay);
    cfg.set_double("segment", "momentum", c.momentum);
    cfg.set_double("segment", "lr_decay_factor", c.lr_decay_factor);
    cfg.set_long("segment", "lr_decay_every", c.lr_decay_every);
    cfg.set_double("segment", "stop_lr", c.stop_lr);
    cfg.set_bool("segment", "jitter", c.jitter);
    cfg.set_bool("segment", "shift", c.shift);
    cfg.set_bool("segment", "crop", c.crop);
    cfg.set_double("segment", "crop_min_fraction", c.crop_min_fraction);
    cfg.set_long("segment", "batch_size", c.batch_size);
    cfg.set_long("segment", "max_epochs", c.max_epochs);
    cfg.set("segment", "kernel_heights", int_list_to_string(arch.kernel_heights));
    cfg.set("segment", "channels", int_list_to_string(arch.channels));
}

ReconTrainConfig recon_config_from(const KeyValueConfig& cfg, ReconArchitecture* arch) {
    ReconTrainConfig c;
    c.warmup_lr = cfg.get_double("reconstruct", "warmup_lr", c.warmup_lr);
    c.warmup_epochs = static_cast<int>(cfg.get_long("reconstruct", "warmup_epochs", c.warmup_epochs));
    c.base_lr = cfg.get_double("reconstruct", "base_lr", c.base_lr);
    c.weight_decay = cfg.get_double("reconstruct", "weight_decay", c.weight_decay);
    c.beta1 = cfg.get_double("reconstruct", "beta1", c.beta1);
    c.beta2 = cfg.get_double("reconstruct", "beta2", c.beta2);
    c.loss_switch_epoch = static_cast<int>(cfg.get_long("reconstruct", "loss_switch_epoch", c.loss_switch_epoch));
    c.lr_decay_factor = cfg.get_double("reconstruct", "lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_every = static_cast<int>(cfg.get_long("reconstruct", "lr_decay_every", c.lr_decay_every));
    c.stop_lr = cfg.get_double("reconstruct", "stop_lr", c.stop_lr);
    c.jitter = cfg.get_bool("reconstruct", "jitter", c.jitter);
    c.shift = cfg.get_bool("reconstruct", "shift", c.shift);
    c.min_fraction = cfg.get_double("reconstruct", "min_fraction", c.min_fraction);
    c.max_fraction = cfg.get_double("reconstruct", "max_fraction", c.max_fraction);
    c.batch_size = static_cast<int>(cfg.get_long("reconstruct", "batch_size", c.batch_size));
    c.max_epochs = static_cast<int>(cfg.get_long("reconstruct", "max_epochs", c.max_epochs));
    if (arch != nullptr) {
        if (cfg.has("reconstruct", "kernel_heights")) {
            arch->kernel_heights = parse_int_list(cfg.get("reconstruct", "kernel_heights", ""),
                                                  "kernel_heights");
        }
        if (cfg.has("reconstruct", "channels")) {
            arch->channels =
                parse_int_list(cfg.get("reconstruct", "channels", ""), "channels");
        }
    }
    return c;
}

void recon_config_into(const ReconTrainConfig& c, const ReconArchitecture& arch,
                       KeyValueConfig& cfg) {
    cfg.set("reconstruct", "optimizer", "adam");
    cfg.set_double("reconstruct", "warmup_lr", c.warmup_lr);
    cfg.set_long("reconstruct", "warmup_epochs", c.warmup_epochs);
    cfg.set_double("reconstruct", "base_lr", c.base_lr);
    cfg.set_double("reconstruct", "weight_decay", c.weight_decay);
    cfg.set_double("reconstruct", "beta1", c.beta1);
    cfg.set_double("reconstruct", "beta2", c.beta2);
    cfg.set_long("reconstruct", "loss_switch_epoch", c.loss_switch_epoch);
    cfg.set_double("reconstruct", "lr_decay_factor", c.lr_decay_factor);
    cfg.set_long("reconstruct", "lr_decay_every", c.lr_decay_every);
    cfg.set_double("reconstruct", "stop_lr", c.stop_lr);
    cfg.set_bool("reconstruct", "jitter", c.jitter);
    cfg.set_bool("reconstruct", "shift", c.shift);
    cfg.set_double("reconstruct", "min_fraction", c.min_fraction);
    cfg.set_double("reconstruct", "max_fraction", c.max_fraction);
    cfg.set_long("reconstruct", "batch_size", c.batch_size);
    cfg.set_long("reconstruct", "max_epochs", c.max_epochs);
    cfg.set("reconstruct", "kernel_heights", int_list_to_string(arch.kernel_heights));
    cfg.set("reconstruct", "channels", int_list_to_string(arch.channels));
}

VaeTrainConfig vae_config_from(const KeyValueConfig& cfg, VaeArchitecture* arch) {
    VaeTrainConfig c;
    c.warmup_lr = cfg.get_double("generate", "warmup_lr", c.warmup_lr);
    c.warmup_epochs = static_cast<int>(cfg.get_long("generate", "warmup_epochs", c.warmup_epochs));
    c.base_lr = cfg.get_double("generate", "base_lr", c.base_lr);
    c.weight_decay = cfg.get_double("generate", "weight_decay", c.weight_decay);
    c.momentum = cfg.get_double("generate", "momentum", c.momentum);
    c.lr_decay_factor = cfg.get_double("generate", "lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_every = static_cast<int>(cfg.get_long("generate", "lr_decay_every", c.lr_decay_every));
    c.stop_lr = cfg.get_double("generate", "stop_lr", c.stop_lr);
    c.batch_size = static_cast<int>(cfg.get_long("generate", "batch_size", c.batch_size));
    c.max_epochs = static_cast<int>(cfg.get_long("generate", "max_epochs", c.max_epochs));
    if (arch != nullptr) {
        arch->width1 = static_cast<int>(cfg.get_long("generate", "width1", arch->width1));
        arch->width2 = static_cast<int>(cfg.get_long("generate", "width2", arch->width2));
        arch->kernel_height =
            static_cast<int>(cfg.get_long("generate", "kernel_height", arch->kernel_height));
    }
    return c;
}

void vae_config_into(const VaeTrainConfig& c, const VaeArchitecture& arch,
                     KeyValueConfig& cfg) {
    cfg.set("generate", "optimizer", "sgd_momentum");
    cfg.set_double("generate", "warmup_lr", c.warmup_lr);
    cfg.set_long("generate", "warmup_epochs", c.warmup_epochs);
    cfg.set_double("generate", "base_lr", c.base_lr);
    cfg.set_double("generate", "weight_decay", c.weight_decay);
    cfg.set_double("generate", "momentum", c.momentum);
    cfg.set_double("generate", "lr_decay_factor", c.lr_decay_factor);
    cfg.set_long("generate", "lr_decay_every", c.lr_decay_every);
    cfg.set_double("generate", "stop_lr", c.stop_lr);
    cfg.set_long("generate", "batch_size", c.batch_size);
    cfg.set_long("generate", "max_epochs", c.max_epochs);
    cfg.set_long("generate", "width1", arch.width1);
    cfg.set_long("generate", "width2", arch.width2);
    cfg.set_long("generate", "kernel_height", arch.kernel_height);
    cfg.set_bool("generate", "augmentation", false);
}

// The output directory is implied by the sidecar's own location and is
// deliberately not recorded: identical (config, seed, data) must produce
// byte-identical sidecars regardless of where the run lands.
void write_run_section(KeyValueConfig& cfg, const std::string& command,
                       const std::string& task, const CommonArgs& args,
                       const std::string& data_path) {
    cfg.set("run", "command", command);
    cfg.set("run", "task", task);
    cfg.set("run", "data", data_path);
    cfg.set_long("run", "seed", static_cast<long>(args.seed));
}

void write_loss_history_csv(const std::vector<TrainRecord>& history, const fs::path& path) {
    std::ofstream out(path);
    out << "epoch,lr,loss\n";
    char buf[128];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", r.epoch, r.lr, r.loss);
        out << buf;
    }
}

void write_loss_history_csv(const std::vector<ReconTrainRecord>& history,
                            const fs::path& path) {
    std::ofstream out(path);
    out << "epoch,lr,loss,loss_kind\n";
    char buf[128];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%s\n", r.epoch, r.lr, r.loss,
                      r.l1_phase ? "l1" : "l2");
        out << buf;
    }
}

void write_loss_history_csv(const std::vector<VaeTrainRecord>& history,
                            const fs::path& path) {
    std::ofstream out(path);
    out << "epoch,lr,recon_loss,kl_loss\n";
    char buf[160];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.epoch, r.lr,
                      r.recon_loss, r.kl_loss);
        out << buf;
    }
}

// --- commands ---------------------------------------------------------------

int cmd_train(const std::string& task, const CommonArgs& args) {
    if (task != "segment" && task != "reconstruct" && task != "generate") {
        throw ConfigError("unknown training task '" + task + "'");
    }
    const std::string data_path = resolve_data_path(args.data);
    fs::create_directories(args.out);
    KeyValueConfig cfg = load_base_config(args);
    write_run_section(cfg, "train", task, args, data_path);

    Rng rng(args.seed);
    const auto loaded = load_directory(data_path);
    write_sanitation_reports(loaded, args.out);
    const auto sequences = sequences_of(loaded);

    if (task == "segment") {
        SegArchitecture arch;
        const SegTrainConfig train_cfg = seg_config_from(cfg, &arch);
        seg_config_into(train_cfg, arch, cfg);
        cfg.write_file(fs::path(args.out) / "config.resolved.txt");

        SegModel model = seg_model_init(arch, rng);
        const auto history = seg_train(model, sequences, train_cfg, rng);
        save_model(model, fs::path(args.out) / "segment.model");
        write_loss_history_csv(history, fs::path(args.out) / "loss_history.csv");
    } else if (task == "reconstruct") {
        ReconArchitecture arch;
        const ReconTrainConfig train_cfg = recon_config_from(cfg, &arch);
        const int sections_per_sequence =
            static_cast<int>(cfg.get_long("reconstruct", "sections_per_sequence", 25));
        const int section_min_len =
            static_cast<int>(cfg.get_long("reconstruct", "section_min_len", 32));
        const int section_max_len =
            static_cast<int>(cfg.get_long("reconstruct", "section_max_len", 128));
        recon_config_into(train_cfg, arch, cfg);
        cfg.set_long("reconstruct", "sections_per_sequence", sections_per_sequence);
        cfg.set_long("reconstruct", "section_min_len", section_min_len);
        cfg.set_long("reconstruct", "section_max_len", section_max_len);
        cfg.write_file(fs::path(args.out) / "config.resolved.txt");

        std::vector<GazeSequence> sections;
        for (const auto& l : loaded) {
            auto drawn = sample_clean_sections(l.sequence, rng, sections_per_sequence,
                                               section_min_len, section_max_len,
                                               &l.sanitation);
            sections.insert(sections.end(), drawn.begin(), drawn.end());
        }
        ReconModel model = recon_model_init(arch, rng);
        const auto history = recon_train(model, sections, train_cfg, rng);
        save_model(model, fs::path(args.out) / "reconstruct.model");
        write_loss_history_csv(history, fs::path(args.out) / "loss_history.csv");
    } else if (task == "generate") {
        VaeArchitecture arch;
        const VaeTrainConfig train_cfg = vae_config_from(cfg, &arch);
        const int chunk_height =
            static_cast<int>(cfg.get_long("generate", "chunk_height", 64));
        vae_config_into(train_cfg, arch, cfg);
        cfg.set_long("generate", "chunk_height", chunk_height);
        cfg.write_file(fs::path(args.out) / "config.resolved.txt");

        std::vector<Tensor> corpus;
        for (const auto& seq : sequences) {
            if (seq.samples.size() < 2) {
                continue;
            }
            const Tensor deltas = to_delta_tensor(seq);
            if (chunk_height > 0) {
                for (int start = 0; start + chunk_height <= deltas.height;
                     start += chunk_height) {
                    corpus.push_back(crop(deltas, start, chunk_height));
                }
            } else if (deltas.height >= 4) {
                corpus.push_back(crop(deltas, 0, deltas.height - deltas.height % 4));
            }
        }
        if (corpus.empty()) {
            throw DataError("train generate: no delta chunks could be built from the data");
        }
        VaeModel model = vae_model_init(arch, rng);
        const auto history = vae_train(model, corpus, train_cfg, rng);
        save_model(model, fs::path(args.out) / "generate.model");
        write_loss_history_csv(history, fs::path(args.out) / "loss_history.csv");
    } else {
        throw ConfigError("unknown training task '" + task + "'");
    }
    return 0;
}

int cmd_segment(const std::string& model_path, const std::string& input,
                const std::string& output) {
    const SegModel model = load_seg_model(model_path);
    const auto loaded = load_csv(input, CsvSchema{});
    const SegPrediction prediction = seg_predict(model, loaded.sequence);

    std::ofstream out(output);
    if (!out) {
        throw IoError("cannot write " + output);
    }
    out << "t_ms,x_px,y_px,label,p_fixation,p_saccade,p_pursuit,p_noise,p_psm\n";
    char buf[256];
    for (std::size_t i = 0; i < loaded.sequence.samples.size(); ++i) {
        const auto& s = loaded.sequence.samples[i];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d", s.t, s.x, s.y,
                      prediction.labels[i]);
        out << buf;
        for (int c = 0; c < kNumClasses; ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g",
                          prediction.probabilities.at(c, static_cast<int>(i)));
            out << buf;
        }
        out << '\n';
    }
    return 0;
}

int cmd_reconstruct(const std::string& model_path, const std::string& input,
                    const std::string& output) {
    const ReconModel model = load_recon_model(model_path);
    const auto loaded = load_csv(input, CsvSchema{});
    const Tensor repaired = recon_forward(model, to_input_tensor(loaded.sequence));

    GazeSequence out_seq;
    out_seq.subject_id = loaded.sequence.subject_id;
    out_seq.samples.resize(static_cast<std::size_t>(repaired.height));
    for (int i = 0; i < repaired.height; ++i) {
        auto& s = out_seq.samples[static_cast<std::size_t>(i)];
        s.x = repaired.at(0, i) * 100.0;
        s.y = repaired.at(1, i) * 100.0;
        s.t = repaired.at(2, i) * 100.0;
    }
    save_csv(out_seq, output);
    return 0;
}

int cmd_generate(const std::string& model_path, int length, std::uint64_t seed,
                 const std::string& start_text, const std::string& output) {
    const VaeModel model = load_vae_model(model_path);
    GazeSample start;
    if (!start_text.empty()) {
        double x = 0.0;
        double y = 0.0;
        double t = 0.0;
        if (std::sscanf(start_text.c_str(), "%lf,%lf,%lf", &x, &y, &t) != 3) {
            throw ConfigError("--start must be 'x,y,t'");
        }
        start.x = x;
        start.y = y;
        start.t = t;
    }
    Rng rng(seed);
    const GazeSequence path = generate_scanpath(model, rng, length, start);
    save_csv(path, output);
    return 0;
}

int cmd_eval_segment(const CommonArgs& args, int folds) {
    const std::string data_path = resolve_data_path(args.data);
    fs::create_directories(args.out);
    KeyValueConfig cfg = load_base_config(args);
    write_run_section(cfg, "eval", "segment", args, data_path);
    cfg.set_long("run", "folds", folds);

    SegArchitecture arch;
    const SegTrainConfig train_cfg = seg_config_from(cfg, &arch);
    seg_config_into(train_cfg, arch, cfg);
    cfg.write_file(fs::path(args.out) / "config.resolved.txt");

    Rng rng(args.seed);
    const auto loaded = load_directory(data_path);
    write_sanitation_reports(loaded, args.out);
    const auto sequences = sequences_of(loaded);

    const FoldPlan plan = make_folds(sequences, folds, rng);
    {
        std::ofstream fold_file(fs::path(args.out) / "fold_plan.json");
        fold_file << fold_plan_to_json(plan);
    }

    int fold_counter = 0;
    const auto result = cross_validate(
        sequences, plan, kNumClasses,
        [&](const std::vector<const GazeSequence*>& train_set) {
            std::vector<GazeSequence> train_data;
            train_data.reserve(train_set.size());
            for (const auto* seq : train_set) {
                train_data.push_back(*seq);
            }
            Rng fold_rng = rng.fork(static_cast<std::uint64_t>(fold_counter++));
            SegModel model = seg_model_init(arch, fold_rng);
            seg_train(model, train_data, train_cfg, fold_rng);
            return model;
        },
        [](const SegModel& model, const GazeSequence& seq) {
            return seg_predict(model, seq).labels;
        });

    for (const auto& fold : result.folds) {
        const auto metrics = recall_precision(fold.cm);
        std::ofstream file(fs::path(args.out) / ("fold_" + std::to_string(fold.fold) +
                                                 "_metrics.csv"));
        file << metrics_to_csv(metrics);
    }
    const auto aggregate = recall_precision(result.aggregate);
    {
        std::ofstream file(fs::path(args.out) / "aggregate_metrics.csv");
        file << metrics_to_csv(aggregate);
    }
    {
        std::ofstream file(fs::path(args.out) / "aggregate_confusion.csv");
        file << confusion_to_csv(result.aggregate);
    }
    return 0;
}

int cmd_eval_reconstruct(const CommonArgs& args, const std::string& model_path,
                         const std::string& fractions_text) {
    const std::string data_path = resolve_data_path(args.data);
    fs::create_directories(args.out);
    KeyValueConfig cfg = load_base_config(args);
    write_run_section(cfg, "eval", "reconstruct", args, data_path);

    ReconEvalParams params;
    if (!fractions_text.empty()) {
        params.fractions.clear();
        for (int percent : parse_int_list(fractions_text, "--fractions")) {
            params.fractions.push_back(percent / 100.0);
        }
    }
    params.num_sections =
        static_cast<int>(cfg.get_long("reconstruct", "eval_sections", params.num_sections));
    params.min_len =
        static_cast<int>(cfg.get_long("reconstruct", "eval_min_len", params.min_len));
    params.max_len =
        static_cast<int>(cfg.get_long("reconstruct", "eval_max_len", params.max_len));
    cfg.set("run", "model", model_path);
    cfg.set_long("reconstruct", "eval_sections", params.num_sections);
    cfg.set_long("reconstruct", "eval_min_len", params.min_len);
    cfg.set_long("reconstruct", "eval_max_len", params.max_len);
    cfg.write_file(fs::path(args.out) / "config.resolved.txt");

    const ReconModel model = load_recon_model(model_path);
    Rng rng(args.seed);
    const auto loaded = load_directory(data_path);
    const auto sequences = sequences_of(loaded);
    const ReconEvalReport report = recon_evaluate(model, sequences, rng, params);

    {
        std::ofstream file(fs::path(args.out) / "recon_mae.csv");
        file << recon_report_to_csv(report);
    }
    {
        std::ofstream file(fs::path(args.out) / "recon_scatter.csv");
        file << recon_scatter_to_csv(report);
    }
    return 0;
}

int cmd_eval_generate(const CommonArgs& args, const std::string& model_path, int count,
                      int length, int canvas_width, int canvas_height) {
    fs::create_directories(args.out);
    KeyValueConfig cfg = load_base_config(args);
    write_run_section(cfg, "eval", "generate", args, args.data);
    cfg.set("run", "model", model_path);
    cfg.set_long("generate", "eval_count", count);
    cfg.set_long("generate", "eval_length", length);
    cfg.write_file(fs::path(args.out) / "config.resolved.txt");

    const VaeModel model = load_vae_model(model_path);
    Rng rng(args.seed);
    const Canvas canvas{canvas_width, canvas_height};
    for (int i = 0; i < count; ++i) {
        Rng path_rng = rng.fork(static_cast<std::uint64_t>(i));
        GazeSequence path = generate_scanpath(model, path_rng, length, GazeSample{});
        path = center_scanpath(path, canvas.width, canvas.height);
        const ScanpathImage image = rasterize_scanpath(path, canvas);
        write_png_rgb8(image, fs::path(args.out) /
                                  ("generated_" + std::to_string(i) + ".png"));
        save_csv(path, fs::path(args.out) / ("generated_" + std::to_string(i) + ".csv"));
    }

    // Rasterize the real data too when provided, for side-by-side inspection.
    if (!args.data.empty()) {
        const auto loaded = load_directory(args.data);
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            const GazeSequence centered =
                center_scanpath(loaded[i].sequence, canvas.width, canvas.height);
            const ScanpathImage image = rasterize_scanpath(centered, canvas);
            write_png_rgb8(image, fs::path(args.out) /
                                      ("real_" + std::to_string(i) + ".png"));
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fully convolutional networks for raw gaze-signal segmentation, "
                 "reconstruction and generation"};
    app.require_subcommand(1);

    CommonArgs train_args;
    std::string train_task;
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("task", train_task, "segment|reconstruct|generate")->required();
    train->add_option("--data", train_args.data, "data file or directory");
    train->add_option("--out", train_args.out, "output directory");
    train->add_option("--seed", train_args.seed, "rng seed");
    train->add_option("--config", train_args.config_file, "key=value config file");

    std::string seg_model;
    std::string seg_input;
    std::string seg_output;
    auto* segment = app.add_subcommand("segment", "label a recording per sample");
    segment->add_option("--model", seg_model)->required();
    segment->add_option("--input", seg_input)->required();
    segment->add_option("--output", seg_output)->required();

    std::string rec_model;
    std::string rec_input;
    std::string rec_output;
    auto* reconstruct = app.add_subcommand("reconstruct", "repair a corrupted recording");
    reconstruct->add_option("--model", rec_model)->required();
    reconstruct->add_option("--input", rec_input)->required();
    reconstruct->add_option("--output", rec_output)->required();

    std::string gen_model;
    std::string gen_output;
    std::string gen_start;
    int gen_length = 64;
    std::uint64_t gen_seed = 0;
    auto* generate = app.add_subcommand("generate", "synthesize a new scanpath");
    generate->add_option("--model", gen_model)->required();
    generate->add_option("--output", gen_output)->required();
    generate->add_option("--length", gen_length, "samples to generate (multiple of 4)");
    generate->add_option("--seed", gen_seed);
    generate->add_option("--start", gen_start, "start sample as 'x,y,t'");

    CommonArgs eval_args;
    std::string eval_task;
    std::string eval_model;
    std::string eval_fractions;
    int eval_folds = 4;
    int eval_count = 16;
    int eval_length = 64;
    int eval_canvas_w = 640;
    int eval_canvas_h = 480;
    auto* eval = app.add_subcommand("eval", "run an evaluation protocol");
    eval->add_option("task", eval_task, "segment|reconstruct|generate")->required();
    eval->add_option("--data", eval_args.data);
    eval->add_option("--out", eval_args.out);
    eval->add_option("--seed", eval_args.seed);
    eval->add_option("--config", eval_args.config_file);
    eval->add_option("--model", eval_model);
    eval->add_option("--folds", eval_folds);
    eval->add_option("--fractions", eval_fractions, "percentages, e.g. 5,10,15,20,25,30");
    eval->add_option("--count", eval_count, "generated paths for eval generate");
    eval->add_option("--length", eval_length);
    eval->add_option("--canvas-width", eval_canvas_w);
    eval->add_option("--canvas-height", eval_canvas_h);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train->parsed()) {
            return cmd_train(train_task, train_args);
        }
        if (segment->parsed()) {
            return cmd_segment(seg_model, seg_input, seg_output);
        }
        if (reconstruct->parsed()) {
            return cmd_reconstruct(rec_model, rec_input, rec_output);
        }
        if (generate->parsed()) {
            return cmd_generate(gen_model, gen_length, gen_seed, gen_start, gen_output);
        }
        if (eval->parsed()) {
            if (eval_task == "segment") {
                return cmd_eval_segment(eval_args, eval_folds);
            }
            if (eval_task == "reconstruct") {
                if (eval_model.empty()) {
                    throw ConfigError("eval reconstruct needs --model");
                }
                return cmd_eval_reconstruct(eval_args, eval_model, eval_fractions);
            }
            if (eval_task == "generate") {
                if (eval_model.empty()) {
                    throw ConfigError("eval generate needs --model");
                }
                return cmd_eval_generate(eval_args, eval_model, eval_count, eval_length,
                                         eval_canvas_w, eval_canvas_h);
            }
            throw ConfigError("unknown eval task '" + eval_task + "'");
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
