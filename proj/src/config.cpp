#include "tppmix/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace tppmix {

using nlohmann::json;

namespace {

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) {
        // An integer slot must not silently take a fraction.
        return !(a.is_number_integer() && b.is_number_float());
    }
    return a.type() == b.type();
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

}  // namespace

json to_json(const RunConfig& c) {
    return {{"seed", c.seed},
            {"dataset", c.dataset},
            {"output_dir", c.output_dir},
            {"generate",
             {{"clusters", c.generate.clusters},
              {"per_cluster", c.generate.per_cluster},
              {"horizon", c.generate.horizon},
              {"random_hawkes", c.generate.random_hawkes}}},
            {"training", c.training},
            {"evaluate",
             {{"labels", c.evaluate.labels},
              {"checkpoint", c.evaluate.checkpoint},
              {"metrics", c.evaluate.metrics},
              {"bin_width", c.evaluate.bin_width},
              {"eid_samples", c.evaluate.eid_samples},
              {"consistency_trials", c.evaluate.consistency_trials},
              {"consistency_split", c.evaluate.consistency_split}}},
            {"export_intensity",
             {{"checkpoint", c.export_intensity.checkpoint},
              {"bin_width", c.export_intensity.bin_width},
              {"samples", c.export_intensity.samples}}}};
}

json merge_strict(const json& base, const json& overlay, const std::string& path) {
    if (!base.is_object()) {
        if (!same_kind(base, overlay)) {
            throw std::invalid_argument("config key '" + path + "' expects " + std::string(base.type_name()) +
                                        ", got " + std::string(overlay.type_name()));
        }
        return overlay;
    }
    if (!overlay.is_object()) throw std::invalid_argument("config key '" + path + "' expects an object");
    json out = base;
    for (const auto& [key, value] : overlay.items()) {
        const auto where = join(path, key);
        if (!base.contains(key)) throw std::invalid_argument("unknown config key '" + where + "'");
        out[key] = merge_strict(base[key], value, where);
    }
    return out;
}

RunConfig run_config_from_json(const json& doc) {
    const json merged = merge_strict(to_json(RunConfig{}), doc);
    RunConfig c;
    try {
        c.seed = merged.at("seed").get<std::uint64_t>();
        c.dataset = merged.at("dataset").get<std::string>();
        c.output_dir = merged.at("output_dir").get<std::string>();
        const auto& g = merged.at("generate");
        c.generate.clusters = g.at("clusters").get<std::vector<std::string>>();
        c.generate.per_cluster = g.at("per_cluster").get<std::size_t>();
        c.generate.horizon = g.at("horizon").get<double>();
        c.generate.random_hawkes = g.at("random_hawkes").get<std::size_t>();
        c.training = merged.at("training").get<TrainingConfig>();
        const auto& e = merged.at("evaluate");
        c.evaluate.labels = e.at("labels").get<std::string>();
        c.evaluate.checkpoint = e.at("checkpoint").get<std::string>();
        c.evaluate.metrics = e.at("metrics").get<std::vector<std::string>>();
        c.evaluate.bin_width = e.at("bin_width").get<double>();
        c.evaluate.eid_samples = e.at("eid_samples").get<std::size_t>();
        c.evaluate.consistency_trials = e.at("consistency_trials").get<std::size_t>();
        c.evaluate.consistency_split = e.at("consistency_split").get<double>();
        const auto& x = merged.at("export_intensity");
        c.export_intensity.checkpoint = x.at("checkpoint").get<std::string>();
        c.export_intensity.bin_width = x.at("bin_width").get<double>();
        c.export_intensity.samples = x.at("samples").get<std::size_t>();
    } catch (const json::exception& err) {
        throw std::invalid_argument(std::string("invalid config: ") + err.what());
    }
    c.training.validate();
    if (!(c.evaluate.bin_width > 0.0) || !(c.export_intensity.bin_width > 0.0)) {
        throw std::invalid_argument("bin_width must be positive");
    }
    if (!(c.generate.horizon > 0.0)) throw std::invalid_argument("generate.horizon must be positive");
    for (const auto& m : c.evaluate.metrics) {
        if (m != "purity" && m != "rand_index" && m != "eid" && m != "consistency") {
            throw std::invalid_argument("unknown metric '" + m + "'");
        }
    }
    return c;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw std::invalid_argument("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    // Walk the defaults to learn the target's type.
    const json defaults = to_json(RunConfig{});
    const json* slot = &defaults;
    json* target = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!slot->is_object() || !slot->contains(key)) {
            throw std::invalid_argument("unknown config key '" + path + "'");
        }
        slot = &(*slot)[key];
        if (!target->is_object()) *target = json::object();
        target = &(*target)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value;
    if (slot->is_string()) {
        value = text;
    } else {
        value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
    }
    const json base = slot->is_object() && target->is_object() ? merge_strict(*slot, *target, path) : *slot;
    *target = merge_strict(base, value, path);
}

json load_config_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("config file " + path.string() + " is not valid JSON");
    return merge_strict(to_json(RunConfig{}), doc);
}

std::filesystem::path resolve_output_dir(const RunConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("TPPMIX_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
    return "tppmix-out";
}

}  // namespace tppmix
