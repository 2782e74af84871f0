#include "tppmix/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace tppmix::nn {

namespace {

double evaluate(const LossFn& loss) {
    Tape tape;
    return loss(tape).scalar();
}

}  // namespace

GradCheckResult finite_difference_check(const LossFn& loss, const ParameterList& params,
                                        const GradCheckOptions& options) {
    zero_grads(params);
    {
        Tape tape;
        tape.backward(loss(tape));
    }
    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (auto* p : params) analytic.push_back(p->grad);
    zero_grads(params);

    GradCheckResult result;
    const double h = options.step;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            double& entry = p.value.data()[i];
            const double saved = entry;
            entry = saved + h;
            const double up = evaluate(loss);
            entry = saved - h;
            const double down = evaluate(loss);
            entry = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k].data()[i];
            const double err = std::abs(a - numeric) / (std::abs(numeric) + options.epsilon);
            if (err > result.max_relative_error || result.worst_index < 0) {
                result.max_relative_error = std::max(result.max_relative_error, err);
                if (err >= result.max_relative_error) {
                    result.worst_parameter = p.name;
                    result.worst_index = i;
                    result.analytic = a;
                    result.numeric = numeric;
                }
            }
        }
    }
    return result;
}

}  // namespace tppmix::nn
