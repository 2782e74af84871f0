// tppmix command-line tool: generate | train | evaluate | export-intensity.
//
// Every command resolves its configuration as defaults <- --config file <-
// --set overrides <- dedicated flags, writes the resolved document to
// <out>/<command>.config.json, and derives all randomness from `seed`.
// Failures print one JSON line {"error": <kind>, "message": <text>} to stderr.

#include "tppmix/config.hpp"
#include "tppmix/checkpoint.hpp"
#include "tppmix/em.hpp"
#include "tppmix/intensity.hpp"
#include "tppmix/metrics.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tppmix;

namespace {

// Seed streams for the commands that need more than one.
constexpr std::uint64_t kRandomHawkesStream = 0x6861776b;
constexpr std::uint64_t kEidStream = 1;
constexpr std::uint64_t kConsistencyStream = 2;
constexpr std::uint64_t kExportTruthStream = 3;
constexpr std::uint64_t kExportPolicyStream = 4;

struct CommonFlags {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> dataset;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run-configuration file");
    cmd->add_option("-s,--set", f.overrides, "Override a config key, e.g. training.em.clusters=4")->allow_extra_args(false);
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--dataset", f.dataset, "Dataset file (one JSON record per line)");
    cmd->add_option("-o,--out", f.out, "Output directory");
    cmd->add_option("--workers", f.workers, "Concurrent tasks; 0 uses every core");
}

RunConfig resolve(const CommonFlags& f) {
    json doc = f.config.empty() ? to_json(RunConfig{}) : load_config_document(f.config);
    for (const auto& o : f.overrides) apply_override(doc, o);
    if (f.seed) doc["seed"] = *f.seed;
    if (f.dataset) doc["dataset"] = *f.dataset;
    if (f.out) doc["output_dir"] = *f.out;
    if (f.workers) doc["training"]["em"]["workers"] = *f.workers;
    return run_config_from_json(doc);
}

fs::path prepare_output(RunConfig& config, const std::string& command) {
    const fs::path out = resolve_output_dir(config);
    fs::create_directories(out);
    // the echo names its own output directory so that it reruns in place
    config.output_dir = out.string();
    std::ofstream echo(out / (command + ".config.json"));
    echo << std::setw(2) << to_json(config) << '\n';
    if (!echo) throw std::runtime_error("cannot write " + (out / (command + ".config.json")).string());
    return out;
}

Dataset load_dataset(const RunConfig& config) {
    if (config.dataset.empty()) throw std::invalid_argument("no dataset given (set 'dataset' or pass --dataset)");
    if (!fs::exists(config.dataset)) throw std::runtime_error("dataset file not found: " + config.dataset);
    return read_dataset(fs::path(config.dataset));
}

std::vector<IntensitySpec> cluster_specs(const RunConfig& config) {
    std::vector<IntensitySpec> specs;
    for (const auto& text : config.generate.clusters) specs.push_back(IntensitySpec::parse(text, config.generate.horizon));
    auto extra = random_hawkes_specs(config.generate.random_hawkes, stream_seed(config.seed, kRandomHawkesStream));
    specs.insert(specs.end(), extra.begin(), extra.end());
    if (specs.empty()) throw std::invalid_argument("generate.clusters is empty");
    return specs;
}

// ---- checkpoints -----------------------------------------------------------

std::string iteration_dir_name(std::size_t it) {
    std::ostringstream name;
    name << "iter_" << std::setw(4) << std::setfill('0') << it;
    return name.str();
}

void write_checkpoint(const fs::path& root, const MixtureState& state, const std::vector<std::int64_t>& ids) {
    const fs::path dir = root / "checkpoints" / iteration_dir_name(state.iteration);
    fs::create_directories(dir);
    for (int k = 0; k < state.clusters(); ++k) {
        const auto& agent = state.agents[static_cast<std::size_t>(k)];
        nn::write_json_file(dir / ("policy_" + std::to_string(k) + ".json"), agent.policy.to_json());
        nn::write_json_file(dir / ("discriminator_" + std::to_string(k) + ".json"), agent.discriminator.to_json());
    }
    nn::write_json_file(dir / "classifier.json", state.classifier.to_json());
    nn::write_json_file(dir / "assignment.json",
                        {{"iteration", state.iteration}, {"ids", ids}, {"assignment", state.assignment}});
}

struct LoadedCheckpoint {
    fs::path dir;
    std::vector<PolicyModel> policies;
    std::unordered_map<std::int64_t, int> assignment;
};

fs::path latest_iteration(const fs::path& root) {
    const fs::path base = fs::is_directory(root / "checkpoints") ? root / "checkpoints" : root;
    std::optional<fs::path> best;
    if (fs::is_directory(base)) {
        for (const auto& entry : fs::directory_iterator(base)) {
            const auto name = entry.path().filename().string();
            if (entry.is_directory() && name.rfind("iter_", 0) == 0 && (!best || name > best->filename().string())) {
                best = entry.path();
            }
        }
    }
    if (!best) {
        if (fs::exists(root / "policy_0.json")) return root;
        throw std::runtime_error("no checkpoint found under " + root.string());
    }
    return *best;
}

LoadedCheckpoint load_checkpoint(const fs::path& root) {
    LoadedCheckpoint ck;
    ck.dir = latest_iteration(root);
    for (int k = 0;; ++k) {
        const fs::path p = ck.dir / ("policy_" + std::to_string(k) + ".json");
        if (!fs::exists(p)) break;
        ck.policies.push_back(PolicyModel::from_json(nn::read_json_file(p)));
    }
    if (ck.policies.empty()) throw std::runtime_error("checkpoint " + ck.dir.string() + " has no policies");
    if (fs::exists(ck.dir / "assignment.json")) {
        const json doc = nn::read_json_file(ck.dir / "assignment.json");
        const auto ids = doc.at("ids").get<std::vector<std::int64_t>>();
        const auto labels = doc.at("assignment").get<std::vector<int>>();
        if (ids.size() != labels.size()) throw std::runtime_error("assignment.json: ids and labels differ in length");
        for (std::size_t i = 0; i < ids.size(); ++i) ck.assignment[ids[i]] = labels[i];
    }
    return ck;
}

std::unordered_map<std::int64_t, int> read_label_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file " + path.string());
    std::unordered_map<std::int64_t, int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.contains("id") || !rec.contains("cluster")) {
            throw std::invalid_argument("label file line " + std::to_string(lineno) + ": expected {\"id\", \"cluster\"}");
        }
        labels[rec.at("id").get<std::int64_t>()] = rec.at("cluster").get<int>();
    }
    return labels;
}

std::vector<int> labels_for(const Dataset& data, const std::unordered_map<std::int64_t, int>& by_id) {
    std::vector<int> out;
    out.reserve(data.size());
    for (const auto& s : data) {
        const auto it = by_id.find(s.id);
        if (it == by_id.end()) throw std::invalid_argument("no predicted label for sequence id " + std::to_string(s.id));
        out.push_back(it->second);
    }
    return out;
}

// ---- commands --------------------------------------------------------------

int cmd_generate(RunConfig config) {
    const auto specs = cluster_specs(config);
    const fs::path out = prepare_output(config, "generate");
    const Dataset data = generate_dataset(specs, config.generate.per_cluster, config.generate.horizon, config.seed);
    const fs::path path = config.dataset.empty() ? out / "dataset.jsonl" : fs::path(config.dataset);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_dataset(path, data);
    std::map<int, std::size_t> counts;
    for (const auto& s : data) ++counts[s.label];
    std::cout << "wrote " << data.size() << " sequences to " << path.string() << '\n';
    for (const auto& [label, n] : counts) {
        std::cout << "cluster " << label << " (" << specs[static_cast<std::size_t>(label)].to_string() << "): " << n
                  << '\n';
    }
    return 0;
}

int cmd_train(RunConfig config) {
    const Dataset data = load_dataset(config);
    const fs::path out = prepare_output(config, "train");
    std::vector<std::int64_t> ids;
    for (const auto& s : data) ids.push_back(s.id);

    std::ofstream history(out / "history.jsonl");
    std::ofstream timing(out / "timing.jsonl");
    std::ofstream log(out / "training_log.jsonl");
    RlpmmHooks hooks;
    hooks.training_log = &log;
    hooks.on_iteration = [&](const MixtureState& state, const IterationRecord& rec) {
        write_checkpoint(out, state, ids);
        json row = rec;
        // wall time varies between runs, so it lives in its own file
        row.erase("wall_seconds");
        history << row.dump() << '\n';
        history.flush();
        timing << json{{"iteration", rec.iteration}, {"wall_seconds", rec.wall_seconds}}.dump() << '\n';
        timing.flush();
        std::cerr << "iteration " << rec.iteration << ": sizes " << json(rec.sizes).dump();
        if (rec.purity) std::cerr << " purity " << *rec.purity << " rand_index " << *rec.rand_index;
        std::cerr << " change " << rec.change_fraction << '\n';
    };
    const auto result = rlpmm(data, config.training, config.seed, hooks);

    std::ofstream labels(out / "labels.jsonl");
    for (std::size_t i = 0; i < data.size(); ++i) {
        labels << json{{"id", data[i].id}, {"cluster", result.state.assignment[i]}}.dump() << '\n';
    }
    // relative, so reruns into another directory match byte for byte
    nn::write_json_file(out / "summary.json",
                        {{"iterations", result.state.iteration},
                         {"converged", result.converged},
                         {"restart", result.restart},
                         {"restart_scores", result.restart_scores},
                         {"final_checkpoint", (fs::path("checkpoints") / iteration_dir_name(result.state.iteration)).string()}});
    if (!history || !labels || !log) throw std::runtime_error("failed writing training outputs under " + out.string());
    std::cout << "trained " << result.state.iteration << " EM iterations"
              << (result.converged ? " (converged)" : "") << "; outputs in " << out.string() << '\n';
    return 0;
}

int cmd_evaluate(RunConfig config) {
    const Dataset data = load_dataset(config);
    const fs::path out = prepare_output(config, "evaluate");
    const auto& opts = config.evaluate;
    if (opts.labels.empty() && opts.checkpoint.empty()) {
        throw std::invalid_argument("evaluate needs evaluate.labels or evaluate.checkpoint");
    }
    std::optional<LoadedCheckpoint> ck;
    if (!opts.checkpoint.empty()) ck = load_checkpoint(opts.checkpoint);

    std::optional<std::vector<int>> predicted;
    if (!opts.labels.empty()) {
        predicted = labels_for(data, read_label_file(opts.labels));
    } else if (!ck->assignment.empty()) {
        predicted = labels_for(data, ck->assignment);
    }
    std::vector<int> truth;
    for (const auto& s : data) truth.push_back(s.label);

    json metrics = json::array();
    json details = json::object();
    for (const auto& name : opts.metrics) {
        double value = 0.0;
        if (name == "purity" || name == "rand_index") {
            if (!predicted) throw std::invalid_argument(name + " needs predicted labels");
            if (!has_labels(data)) throw std::invalid_argument(name + " needs a dataset with true labels");
            const ClusteringResult r{*predicted, truth};
            value = name == "purity" ? purity(r) : rand_index(r);
        } else if (name == "eid") {
            if (!ck) throw std::invalid_argument("eid needs evaluate.checkpoint");
            const auto m =
                matched_eid(ck->policies, data, opts.bin_width, opts.eid_samples, stream_seed(config.seed, kEidStream));
            value = m.mean;
            details["eid"] = {{"per_class", m.per_class}, {"policy_for_class", m.policy_for_class}};
        } else if (name == "consistency") {
            ConsistencyOptions co;
            co.trials = opts.consistency_trials;
            co.split_fraction = opts.consistency_split;
            co.seed = stream_seed(config.seed, kConsistencyStream);
            co.workers = config.training.em.workers;
            const auto c = clustering_consistency(make_mixture_runner(data, config.training), data.size(), co);
            value = c.value;
            details["consistency"] = {{"skipped_trials", c.skipped}};
        }
        metrics.push_back({{"name", name}, {"value", value}});
        std::cout << name << ' ' << std::setprecision(6) << value << '\n';
    }
    json report = {{"metrics", metrics}, {"details", details}, {"config", to_json(config)}};
    if (ck) report["checkpoint"] = ck->dir.string();
    nn::write_json_file(out / "metrics.json", report);
    return 0;
}

void write_rows(std::ostream& csv, const std::string& source, std::size_t cluster, const EmpiricalIntensity& e) {
    for (std::size_t b = 0; b < e.rates.size(); ++b) {
        csv << source << ',' << cluster << ',' << e.centers[b] << ',' << e.rates[b] << '\n';
    }
}

int cmd_export_intensity(RunConfig config) {
    const auto specs = cluster_specs(config);
    const fs::path out = prepare_output(config, "export-intensity");
    const auto& opts = config.export_intensity;
    const double horizon = config.generate.horizon;
    if (opts.samples == 0) throw std::invalid_argument("export_intensity.samples must be positive");

    std::ofstream csv(out / "intensity.csv");
    csv << std::setprecision(17) << "source,cluster,bin_center,rate\n";
    const std::uint64_t truth_seed = stream_seed(config.seed, kExportTruthStream);
    for (std::size_t k = 0; k < specs.size(); ++k) {
        Rng rng(stream_seed(truth_seed, k));
        std::vector<EventSequence> draws;
        draws.reserve(opts.samples);
        for (std::size_t i = 0; i < opts.samples; ++i) draws.push_back(simulate(specs[k], horizon, rng));
        write_rows(csv, "truth", k, empirical_intensity(std::span<const EventSequence>(draws), opts.bin_width));
    }
    if (!opts.checkpoint.empty()) {
        const auto ck = load_checkpoint(opts.checkpoint);
        const std::uint64_t policy_seed = stream_seed(config.seed, kExportPolicyStream);
        for (std::size_t k = 0; k < ck.policies.size(); ++k) {
            Rng rng(stream_seed(policy_seed, k));
            std::vector<EventSequence> draws;
            draws.reserve(opts.samples);
            for (std::size_t i = 0; i < opts.samples; ++i) draws.push_back(ck.policies[k].rollout(horizon, rng).sequence);
            write_rows(csv, "policy", k, empirical_intensity(std::span<const EventSequence>(draws), opts.bin_width));
        }
    }
    if (!csv) throw std::runtime_error("failed writing " + (out / "intensity.csv").string());
    std::cout << "wrote " << (out / "intensity.csv").string() << '\n';
    return 0;
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster event sequences with a mixture of adversarially imitated point-process policies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tppmix 0.1.0");

    CommonFlags flags;
    std::string command;
    for (const char* name : {"generate", "train", "evaluate", "export-intensity"}) {
        static const std::map<std::string, std::string> help = {
            {"generate", "Simulate a labeled dataset"},
            {"train", "Fit the policy mixture; writes checkpoints and history"},
            {"evaluate", "Score predicted labels or a checkpoint against true labels"},
            {"export-intensity", "Tabulate empirical intensities of true processes and learned policies"}};
        auto* sub = app.add_subcommand(name, help.at(name));
        add_common(sub, flags);
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        RunConfig config = resolve(flags);
        if (command == "generate") return cmd_generate(std::move(config));
        if (command == "train") return cmd_train(std::move(config));
        if (command == "evaluate") return cmd_evaluate(std::move(config));
        return cmd_export_intensity(std::move(config));
    } catch (const std::invalid_argument& e) {
        print_error("invalid_argument", e.what());
    } catch (const std::exception& e) {
        print_error("runtime_error", e.what());
    }
    return 1;
}
