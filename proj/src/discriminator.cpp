#include "tppmix/discriminator.hpp"

#include "tppmix/checkpoint.hpp"

#include <cmath>
#include <stdexcept>

namespace tppmix {

using nn::Tape;
using nn::Var;

void DiscriminatorConfig::validate() const {
    if (hidden_dim <= 0) throw std::invalid_argument("discriminator: hidden_dim must be positive");
    encoding.validate();
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
    j = {{"hidden_dim", c.hidden_dim}, {"cell", nn::to_string(c.cell)}, {"encoding", c.encoding}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
    c.hidden_dim = j.at("hidden_dim").get<Eigen::Index>();
    c.cell = nn::parse_cell_kind(j.at("cell").get<std::string>());
    c.encoding = j.at("encoding").get<InputEncoding>();
    c.validate();
}

Var log_sigmoid(Tape& tape, Var z) {
    return tape.scale(tape.softplus(tape.scale(z, -1.0)), -1.0);
}

Var log_one_minus_sigmoid(Tape& tape, Var z) {
    return tape.scale(tape.softplus(z), -1.0);
}

DiscriminatorModel::DiscriminatorModel(const DiscriminatorConfig& config, Rng& init_rng)
    : config_(config),
      cell_("disc.cell", config.cell, config.encoding.dim(), config.hidden_dim),
      head_("disc.logit", config.hidden_dim, 1) {
    config_.validate();
    cell_.init(init_rng);
    head_.init(init_rng);
}

std::vector<Var> DiscriminatorModel::logits(Tape& tape, const EventSequence& seq) const {
    std::vector<Var> out;
    out.reserve(seq.size());
    Var state = cell_.initial_state(tape);
    double prev = 0.0;
    for (double t : seq.times) {
        state = cell_.step(tape, state, tape.constant(config_.encoding.encode(t - prev, t, seq.horizon)));
        out.push_back(head_.forward(tape, cell_.hidden(tape, state)));
        prev = t;
    }
    return out;
}

std::vector<double> DiscriminatorModel::discriminate(const EventSequence& seq) const {
    Tape tape;
    std::vector<double> scores;
    for (Var z : logits(tape, seq)) {
        const double x = z.scalar();
        scores.push_back(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
    }
    return scores;
}

std::vector<double> DiscriminatorModel::log_scores(const EventSequence& seq) const {
    Tape tape;
    std::vector<double> out;
    for (Var z : logits(tape, seq)) {
        const double x = z.scalar();
        // log sigmoid(x) = -softplus(-x)
        out.push_back(-(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)))));
    }
    return out;
}

void DiscriminatorModel::zero_head() {
    head_.weight.value.setZero();
    head_.bias.value.setZero();
}

nn::ParameterList DiscriminatorModel::parameters() {
    auto params = cell_.parameters();
    for (auto* p : head_.parameters()) params.push_back(p);
    return params;
}

nlohmann::json DiscriminatorModel::to_json() const {
    return {{"kind", "discriminator"},
            {"config", config_},
            {"parameters", nn::parameters_to_json(const_cast<DiscriminatorModel*>(this)->parameters())}};
}

DiscriminatorModel DiscriminatorModel::from_json(const nlohmann::json& doc) {
    if (doc.at("kind").get<std::string>() != "discriminator") throw std::runtime_error("checkpoint is not a discriminator");
    DiscriminatorModel model;
    model.config_ = doc.at("config").get<DiscriminatorConfig>();
    model.cell_ = nn::RecurrentCell("disc.cell", model.config_.cell, model.config_.encoding.dim(),
                                    model.config_.hidden_dim);
    model.head_ = nn::Dense("disc.logit", model.config_.hidden_dim, 1);
    nn::parameters_from_json(doc.at("parameters"), model.parameters());
    return model;
}

}  // namespace tppmix
