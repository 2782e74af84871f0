// Python bindings. Configurations cross the boundary as JSON text so that
// the Python side can pass plain dicts.

#include "tppmix/config.hpp"
#include "tppmix/em.hpp"
#include "tppmix/intensity.hpp"
#include "tppmix/metrics.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tppmix;

namespace {

EventSequence to_sequence(const py::dict& d) {
    EventSequence s;
    s.id = d["id"].cast<std::int64_t>();
    s.horizon = d["horizon"].cast<double>();
    s.times = d["times"].cast<std::vector<double>>();
    s.label = d.contains("label") ? d["label"].cast<int>() : -1;
    s.validate();
    return s;
}

py::dict to_dict(const EventSequence& s) {
    py::dict d;
    d["id"] = s.id;
    d["horizon"] = s.horizon;
    d["times"] = s.times;
    d["label"] = s.label;
    return d;
}

Dataset to_dataset(const py::list& items) {
    Dataset out;
    for (const auto& item : items) out.push_back(to_sequence(item.cast<py::dict>()));
    return out;
}

py::list to_list(const Dataset& data) {
    py::list out;
    for (const auto& s : data) out.append(to_dict(s));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mixture of adversarially imitated point-process policies";

    py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);

    m.def("simulate", [](const std::string& spec, double horizon, std::uint64_t seed) {
        return to_dict(simulate(IntensitySpec::parse(spec, horizon), horizon, seed));
    }, py::arg("spec"), py::arg("horizon"), py::arg("seed"));

    m.def("generate_dataset", [](const std::vector<std::string>& specs, std::size_t per_cluster, double horizon,
                                 std::uint64_t seed) {
        std::vector<IntensitySpec> parsed;
        for (const auto& s : specs) parsed.push_back(IntensitySpec::parse(s, horizon));
        return to_list(generate_dataset(parsed, per_cluster, horizon, seed));
    }, py::arg("specs"), py::arg("per_cluster"), py::arg("horizon"), py::arg("seed"));

    m.def("empirical_intensity", [](const py::list& data, double bin_width) {
        const auto d = to_dataset(data);
        const auto e = empirical_intensity(std::span<const EventSequence>(d), bin_width);
        return py::make_tuple(e.centers, e.rates);
    }, py::arg("data"), py::arg("bin_width"));

    m.def("purity", [](std::vector<int> predicted, std::vector<int> truth) {
        return purity({std::move(predicted), std::move(truth)});
    });
    m.def("rand_index", [](std::vector<int> predicted, std::vector<int> truth) {
        return rand_index({std::move(predicted), std::move(truth)});
    });
    m.def("eid", [](const py::list& a, const py::list& b, double bin_width) {
        const auto da = to_dataset(a);
        const auto db = to_dataset(b);
        return eid(std::span<const EventSequence>(da), std::span<const EventSequence>(db), bin_width);
    }, py::arg("real"), py::arg("generated"), py::arg("bin_width") = 5.0);

    m.def("default_training_config", [] { return nlohmann::json(TrainingConfig{}).dump(); });

    m.def("fit", [](const py::list& data, const std::string& training_json, std::uint64_t seed) {
        const auto d = to_dataset(data);
        const auto config = run_config_from_json({{"training", nlohmann::json::parse(training_json)}}).training;
        RlpmmResult result;
        {
            py::gil_scoped_release release;
            result = rlpmm(d, config, seed);
        }
        py::list history;
        for (const auto& r : result.history) history.append(nlohmann::json(r).dump());
        py::dict out;
        out["assignment"] = result.state.assignment;
        out["history"] = history;
        out["converged"] = result.converged;
        out["restart"] = result.restart;
        return out;
    }, py::arg("data"), py::arg("training_json"), py::arg("seed"));
}
