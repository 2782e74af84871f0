#include "tppmix/policy.hpp"

#include "tppmix/checkpoint.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tppmix {

using nn::Tape;
using nn::Var;
using nn::Vec;

ActionDistribution parse_action_distribution(std::string_view name) {
    if (name == "exponential") return ActionDistribution::exponential;
    if (name == "rayleigh") return ActionDistribution::rayleigh;
    if (name == "weibull") return ActionDistribution::weibull;
    throw std::invalid_argument("unknown action distribution '" + std::string(name) +
                                "' (expected exponential, rayleigh or weibull)");
}

std::string_view to_string(ActionDistribution dist) {
    switch (dist) {
        case ActionDistribution::exponential: return "exponential";
        case ActionDistribution::rayleigh: return "rayleigh";
        case ActionDistribution::weibull: return "weibull";
    }
    return "?";
}

double log_density(ActionDistribution dist, double rate, double action, double shape) {
    switch (dist) {
        case ActionDistribution::exponential: return std::log(rate) - rate * action;
        case ActionDistribution::rayleigh: return std::log(rate) + std::log(action) - 0.5 * rate * action * action;
        case ActionDistribution::weibull: {
            const double l = std::log(rate) + std::log(action);
            return std::log(shape) + shape * l - std::log(action) - std::exp(shape * l);
        }
    }
    return 0.0;
}

double log_survival(ActionDistribution dist, double rate, double rest, double shape) {
    switch (dist) {
        case ActionDistribution::exponential: return -rate * rest;
        case ActionDistribution::rayleigh: return -0.5 * rate * rest * rest;
        case ActionDistribution::weibull: return -std::pow(rate * rest, shape);
    }
    return 0.0;
}

double sample_gap(ActionDistribution dist, double rate, double u, double shape) {
    switch (dist) {
        case ActionDistribution::exponential: return -std::log(u) / rate;
        case ActionDistribution::rayleigh: return std::sqrt(-2.0 * std::log(u) / rate);
        case ActionDistribution::weibull: return std::pow(-std::log(u), 1.0 / shape) / rate;
    }
    return 0.0;
}

double mean_gap(ActionDistribution dist, double rate, double shape) {
    switch (dist) {
        case ActionDistribution::exponential: return 1.0 / rate;
        case ActionDistribution::rayleigh: return std::sqrt(std::numbers::pi / (2.0 * rate));
        case ActionDistribution::weibull: return std::tgamma(1.0 + 1.0 / shape) / rate;
    }
    return 0.0;
}

double rate_for_mean_gap(ActionDistribution dist, double gap, double shape) {
    if (!(gap > 0.0)) throw std::invalid_argument("rate_for_mean_gap: gap must be positive");
    switch (dist) {
        case ActionDistribution::exponential: return 1.0 / gap;
        case ActionDistribution::rayleigh: return std::numbers::pi / (2.0 * gap * gap);
        case ActionDistribution::weibull: return std::tgamma(1.0 + 1.0 / shape) / gap;
    }
    return 0.0;
}

namespace {

constexpr double kMinShape = 0.2;

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

void PolicyConfig::validate() const {
    if (hidden_dim <= 0) throw std::invalid_argument("policy: hidden_dim must be positive");
    encoding.validate();
}

void to_json(nlohmann::json& j, const PolicyConfig& c) {
    j = {{"hidden_dim", c.hidden_dim},
         {"cell", nn::to_string(c.cell)},
         {"distribution", to_string(c.distribution)},
         {"encoding", c.encoding},
         {"max_events", c.max_events}};
}

void from_json(const nlohmann::json& j, PolicyConfig& c) {
    c.hidden_dim = j.at("hidden_dim").get<Eigen::Index>();
    c.cell = nn::parse_cell_kind(j.at("cell").get<std::string>());
    c.distribution = parse_action_distribution(j.at("distribution").get<std::string>());
    c.encoding = j.at("encoding").get<InputEncoding>();
    c.max_events = j.at("max_events").get<std::size_t>();
    c.validate();
}

PolicyModel::PolicyModel(const PolicyConfig& config, Rng& init_rng)
    : config_(config),
      cell_("policy.cell", config.cell, config.encoding.dim(), config.hidden_dim),
      head_("policy.rate", config.hidden_dim, head_outputs()) {
    config_.validate();
    cell_.init(init_rng);
    head_.init(init_rng);
    // start at shape 1, i.e. exponential
    if (config_.distribution == ActionDistribution::weibull) head_.bias.value(1, 0) = inverse_softplus(1.0 - kMinShape);
}

Eigen::Index PolicyModel::head_outputs() const {
    return config_.distribution == ActionDistribution::weibull ? 2 : 1;
}

PolicyModel::GapParams PolicyModel::gap_params(Tape& tape, Var hidden) const {
    Var z = head_.forward(tape, hidden);
    if (config_.distribution != ActionDistribution::weibull) return {tape.softplus(z), {}};
    return {tape.softplus(tape.slice(z, 0, 1)), tape.add_scalar(tape.softplus(tape.slice(z, 1, 1)), kMinShape)};
}

Var PolicyModel::log_density(Tape& tape, const GapParams& p, double a) const {
    switch (config_.distribution) {
        case ActionDistribution::exponential:
            // log r - r a
            return tape.sub(tape.log(p.rate), tape.scale(p.rate, a));
        case ActionDistribution::rayleigh:
            // log r + log a - r a^2 / 2
            return tape.add_scalar(tape.sub(tape.log(p.rate), tape.scale(p.rate, 0.5 * a * a)), std::log(a));
        case ActionDistribution::weibull: {
            // log k + k l - log a - exp(k l), l = log(r a)
            Var kl = tape.mul(p.shape, tape.add_scalar(tape.log(p.rate), std::log(a)));
            return tape.add_scalar(tape.sub(tape.add(tape.log(p.shape), kl), tape.exp(kl)), -std::log(a));
        }
    }
    throw std::logic_error("unreachable");
}

Var PolicyModel::log_survival(Tape& tape, const GapParams& p, double rest) const {
    switch (config_.distribution) {
        case ActionDistribution::exponential: return tape.scale(p.rate, -rest);
        case ActionDistribution::rayleigh: return tape.scale(p.rate, -0.5 * rest * rest);
        case ActionDistribution::weibull:
            return tape.scale(tape.exp(tape.mul(p.shape, tape.add_scalar(tape.log(p.rate), std::log(rest)))), -1.0);
    }
    throw std::logic_error("unreachable");
}

Var PolicyModel::rate(Tape& tape, Var hidden) const { return gap_params(tape, hidden).rate; }

double PolicyModel::rate(const Vec& hidden) const {
    Tape tape;
    return rate(tape, tape.constant(hidden)).scalar();
}

double PolicyModel::shape(const Vec& hidden) const {
    if (config_.distribution != ActionDistribution::weibull) return 1.0;
    Tape tape;
    return gap_params(tape, tape.constant(hidden)).shape.scalar();
}

SampledAction PolicyModel::sample_action(const Vec& hidden, double u) const {
    Tape tape;
    const auto p = gap_params(tape, tape.constant(hidden));
    const double r = p.rate.scalar();
    const double k = p.shape.valid() ? p.shape.scalar() : 1.0;
    const double a = sample_gap(config_.distribution, r, u, k);
    return {a, tppmix::log_density(config_.distribution, r, a, k)};
}

SampledAction PolicyModel::sample_action(const Vec& hidden, Rng& rng) const {
    return sample_action(hidden, rng.uniform_open());
}

std::size_t PolicyModel::event_cap(double horizon) const {
    if (config_.max_events > 0) return config_.max_events;
    return std::max<std::size_t>(1000, 10 * static_cast<std::size_t>(std::ceil(horizon)));
}

Rollout PolicyModel::rollout(double horizon, Rng& rng) const {
    if (!(horizon > 0.0)) throw std::invalid_argument("rollout: horizon must be positive");
    Rollout out;
    out.sequence.horizon = horizon;
    const std::size_t cap = event_cap(horizon);
    const auto dist = config_.distribution;
    Tape tape;
    Var state = cell_.initial_state(tape);
    double t = 0.0;
    while (true) {
        Var h = cell_.hidden(tape, state);
        const auto p = gap_params(tape, h);
        const double r = p.rate.scalar();
        const double k = p.shape.valid() ? p.shape.scalar() : 1.0;
        const double a = sample_gap(dist, r, rng.uniform_open(), k);
        const double next = t + a;
        if (!(next <= horizon)) {
            out.log_survival = tppmix::log_survival(dist, r, horizon - t, k);
            break;
        }
        // a gap below the time resolution would break strict ordering
        if (!(next > t)) {
            out.truncated = true;
            break;
        }
        if (out.steps.size() >= cap) {
            out.truncated = true;
            break;
        }
        out.steps.push_back({h.value(), a, next});
        out.log_probs.push_back(tppmix::log_density(dist, r, a, k));
        out.sequence.times.push_back(next);
        t = next;
        state = cell_.step(tape, state, tape.constant(config_.encoding.encode(a, t, horizon)));
    }
    return out;
}

PolicyModel::SequenceTerms PolicyModel::log_prob_sequence(Tape& tape, const EventSequence& seq,
                                                           bool with_survival) const {
    SequenceTerms terms;
    terms.log_probs.reserve(seq.size());
    Var state = cell_.initial_state(tape);
    double prev = 0.0;
    for (double t : seq.times) {
        const double a = t - prev;
        if (!(a > 0.0)) throw std::invalid_argument("log_prob_sequence: non-positive inter-event time");
        terms.log_probs.push_back(log_density(tape, gap_params(tape, cell_.hidden(tape, state)), a));
        prev = t;
        state = cell_.step(tape, state, tape.constant(config_.encoding.encode(a, t, seq.horizon)));
    }
    terms.total = terms.log_probs.empty() ? tape.constant(0.0) : tape.sum_scalars(terms.log_probs);
    if (with_survival) {
        terms.log_survival = log_survival(tape, gap_params(tape, cell_.hidden(tape, state)), seq.horizon - prev);
    }
    return terms;
}

double PolicyModel::log_prob_sequence(const EventSequence& seq) const {
    Tape tape;
    return log_prob_sequence(tape, seq).total.scalar();
}

void PolicyModel::set_mean_gap(double gap) {
    double k = 1.0;
    if (config_.distribution == ActionDistribution::weibull) {
        const double z = head_.bias.value(1, 0);
        k = kMinShape + (z > 30.0 ? z : std::log1p(std::exp(z)));
    }
    head_.bias.value(0, 0) = inverse_softplus(rate_for_mean_gap(config_.distribution, gap, k));
}

void PolicyModel::freeze_rate_to_bias() {
    head_.weight.value.setZero();
}

nn::ParameterList PolicyModel::parameters() {
    auto params = cell_.parameters();
    for (auto* p : head_.parameters()) params.push_back(p);
    return params;
}

nlohmann::json PolicyModel::to_json() const {
    return {{"kind", "policy"},
            {"config", config_},
            {"distribution", to_string(config_.distribution)},
            {"hidden_dim", config_.hidden_dim},
            {"parameters", nn::parameters_to_json(const_cast<PolicyModel*>(this)->parameters())}};
}

PolicyModel PolicyModel::from_json(const nlohmann::json& doc) {
    if (doc.at("kind").get<std::string>() != "policy") throw std::runtime_error("checkpoint is not a policy");
    PolicyModel model;
    model.config_ = doc.at("config").get<PolicyConfig>();
    model.cell_ = nn::RecurrentCell("policy.cell", model.config_.cell, model.config_.encoding.dim(),
                                    model.config_.hidden_dim);
    model.head_ = nn::Dense("policy.rate", model.config_.hidden_dim, model.head_outputs());
    nn::parameters_from_json(doc.at("parameters"), model.parameters());
    return model;
}

}  // namespace tppmix
