#pragma once

#include "tppmix/autodiff.hpp"

#include "json.hpp"

#include <cstdint>
#include <string_view>

namespace tppmix::nn {

enum class OptimizerKind { adam, sgd };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Global gradient norm clip; <= 0 disables clipping.
    double clip_norm = 5.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

double global_grad_norm(const ParameterList& params);

/// First-order optimizer. The moment buffers live in each Parameter; this
/// object only carries the configuration and the step count used for bias
/// correction.
class Optimizer {
public:
    Optimizer() = default;
    explicit Optimizer(OptimizerConfig config);

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// Returns the gradient norm before clipping.
    double step(const ParameterList& params);

    const OptimizerConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    std::int64_t steps() const { return steps_; }

private:
    OptimizerConfig config_;
    std::int64_t steps_ = 0;
};

}  // namespace tppmix::nn
