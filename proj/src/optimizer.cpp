#include "tppmix/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tppmix::nn {

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd";
}

void OptimizerConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("optimizer: learning rate must be non-negative");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("optimizer: moment decay rates must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be positive");
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
    j = {{"kind", to_string(c.kind)},
         {"learning_rate", c.learning_rate},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"epsilon", c.epsilon},
         {"clip_norm", c.clip_norm}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
    c.kind = parse_optimizer_kind(j.at("kind").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.validate();
}

double global_grad_norm(const ParameterList& params) {
    double sq = 0.0;
    for (const auto* p : params) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    config_.validate();
}

double Optimizer::step(const ParameterList& params) {
    const double norm = global_grad_norm(params);
    double factor = 1.0;
    if (config_.clip_norm > 0.0 && norm > config_.clip_norm) factor = config_.clip_norm / norm;
    ++steps_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::sgd) {
        for (auto* p : params) {
            if (lr != 0.0) p->value -= (lr * factor) * p->grad;
            p->zero_grad();
        }
        return norm;
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (auto* p : params) {
        const Mat g = p->grad * factor;
        p->moment1 = b1 * p->moment1 + (1.0 - b1) * g;
        p->moment2 = b2 * p->moment2 + (1.0 - b2) * g.cwiseProduct(g);
        if (lr != 0.0) {
            p->value.array() -= lr * (p->moment1.array() / c1) / ((p->moment2.array() / c2).sqrt() + config_.epsilon);
        }
        p->zero_grad();
    }
    return norm;
}

}  // namespace tppmix::nn
