#include "tppmix/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace tppmix::nn {

json parameters_to_json(const ParameterList& params) {
    json arr = json::array();
    for (const auto* p : params) {
        json values = json::array();
        for (Eigen::Index r = 0; r < p->rows(); ++r) {
            for (Eigen::Index c = 0; c < p->cols(); ++c) values.push_back(p->value(r, c));
        }
        arr.push_back({{"name", p->name}, {"rows", p->rows()}, {"cols", p->cols()}, {"values", std::move(values)}});
    }
    return arr;
}

void parameters_from_json(const json& doc, const ParameterList& params) {
    if (!doc.is_array() || doc.size() != params.size()) {
        throw std::runtime_error("checkpoint: expected " + std::to_string(params.size()) + " parameters");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        const json& entry = doc[k];
        const auto name = entry.at("name").get<std::string>();
        const auto rows = entry.at("rows").get<Eigen::Index>();
        const auto cols = entry.at("cols").get<Eigen::Index>();
        if (name != p.name || rows != p.rows() || cols != p.cols()) {
            throw std::runtime_error("checkpoint: parameter " + name + " does not match " + p.name + " (" +
                                     std::to_string(p.rows()) + "x" + std::to_string(p.cols()) + ")");
        }
        const json& values = entry.at("values");
        if (values.size() != static_cast<std::size_t>(rows * cols)) {
            throw std::runtime_error("checkpoint: parameter " + name + " has the wrong number of values");
        }
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) p.value(r, c) = values[i++].get<double>();
        }
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << doc.dump(1) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return json::parse(in);
}

}  // namespace tppmix::nn
