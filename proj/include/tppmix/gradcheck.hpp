#pragma once

#include "tppmix/autodiff.hpp"

#include <functional>
#include <string>

namespace tppmix::nn {

/// Builds a scalar loss on the given tape. Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
    double step = 1e-5;
    /// Added to |numeric| in the denominator of the relative error.
    double epsilon = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    Eigen::Index worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares backward() against central differences for every entry of every
/// parameter. Parameter values are restored and gradients are left zeroed.
GradCheckResult finite_difference_check(const LossFn& loss, const ParameterList& params,
                                        const GradCheckOptions& options = {});

}  // namespace tppmix::nn
