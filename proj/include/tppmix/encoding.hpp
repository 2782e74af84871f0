#pragma once

#include "tppmix/autodiff.hpp"

#include "json.hpp"

namespace tppmix {

/// How one event enters a recurrent network: the inter-event time divided by
/// `time_scale`, optionally followed by the elapsed fraction t_i / T.
struct InputEncoding {
    double time_scale = 1.0;
    bool include_elapsed = false;

    Eigen::Index dim() const { return include_elapsed ? 2 : 1; }

    nn::Vec encode(double gap, double time, double horizon) const {
        nn::Vec x(dim());
        x[0] = gap / time_scale;
        if (include_elapsed) x[1] = time / horizon;
        return x;
    }

    void validate() const;
};

void to_json(nlohmann::json& j, const InputEncoding& e);
void from_json(const nlohmann::json& j, InputEncoding& e);

}  // namespace tppmix
