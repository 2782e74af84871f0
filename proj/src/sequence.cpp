#include "tppmix/sequence.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tppmix {

std::vector<double> EventSequence::gaps() const {
    std::vector<double> out;
    out.reserve(times.size());
    double prev = 0.0;
    for (double t : times) {
        out.push_back(t - prev);
        prev = t;
    }
    return out;
}

void EventSequence::validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("sequence " + std::to_string(id) + ": horizon must be positive");
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev)) {
            throw std::invalid_argument("sequence " + std::to_string(id) + ": timestamps must be strictly increasing and positive");
        }
        prev = t;
    }
    if (prev > horizon) throw std::invalid_argument("sequence " + std::to_string(id) + ": timestamp beyond horizon");
}

void write_dataset(std::ostream& out, const Dataset& data) {
    for (const auto& seq : data) {
        nlohmann::json rec = {{"id", seq.id}, {"label", seq.label}, {"T", seq.horizon}, {"timestamps", seq.times}};
        out << rec.dump() << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(out, data);
}

Dataset read_dataset(std::istream& in) {
    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            EventSequence seq;
            seq.id = rec.at("id").get<std::int64_t>();
            seq.label = rec.value("label", -1);
            seq.horizon = rec.at("T").get<double>();
            seq.times = rec.at("timestamps").get<std::vector<double>>();
            seq.validate();
            data.push_back(std::move(seq));
        } catch (const std::exception& e) {
            throw std::runtime_error("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    return read_dataset(in);
}

int label_count(const Dataset& data) {
    int n = 0;
    for (const auto& s : data) n = std::max(n, s.label + 1);
    return n;
}

bool has_labels(const Dataset& data) {
    if (data.empty()) return false;
    for (const auto& s : data) {
        if (s.label < 0) return false;
    }
    return true;
}

}  // namespace tppmix
