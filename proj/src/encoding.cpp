#include "tppmix/encoding.hpp"

#include <stdexcept>

namespace tppmix {

void InputEncoding::validate() const {
    if (!(time_scale > 0.0)) throw std::invalid_argument("input encoding: time_scale must be positive");
}

void to_json(nlohmann::json& j, const InputEncoding& e) {
    j = {{"time_scale", e.time_scale}, {"include_elapsed", e.include_elapsed}};
}

void from_json(const nlohmann::json& j, InputEncoding& e) {
    e.time_scale = j.at("time_scale").get<double>();
    e.include_elapsed = j.at("include_elapsed").get<bool>();
    e.validate();
}

}  // namespace tppmix
