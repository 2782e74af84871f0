#include "tppmix/gail.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace tppmix {

using nn::Tape;
using nn::Var;

void GailConfig::validate() const {
    if (!(entropy_coef >= 0.0)) throw std::invalid_argument("gail: entropy_coef must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("gail: batch_size must be at least 1");
    if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("gail: discount must lie in [0, 1]");
    if (!(likelihood_weight >= 0.0)) throw std::invalid_argument("gail: likelihood_weight must be non-negative");
    policy_optimizer.validate();
    disc_optimizer.validate();
}

void to_json(nlohmann::json& j, const GailConfig& c) {
    j = {{"entropy_coef", c.entropy_coef},       {"batch_size", c.batch_size},
         {"disc_steps", c.disc_steps},           {"policy_steps", c.policy_steps},
         {"discount", c.discount},               {"center_costs", c.center_costs},
         {"baseline", c.baseline},               {"survival_term", c.survival_term},
         {"likelihood_weight", c.likelihood_weight}, {"rounds", c.rounds},
         {"policy_optimizer", c.policy_optimizer}, {"disc_optimizer", c.disc_optimizer}};
}

void from_json(const nlohmann::json& j, GailConfig& c) {
    c.entropy_coef = j.at("entropy_coef").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.disc_steps = j.at("disc_steps").get<std::size_t>();
    c.policy_steps = j.at("policy_steps").get<std::size_t>();
    c.discount = j.at("discount").get<double>();
    c.center_costs = j.at("center_costs").get<bool>();
    c.baseline = j.at("baseline").get<bool>();
    c.survival_term = j.at("survival_term").get<bool>();
    c.likelihood_weight = j.at("likelihood_weight").get<double>();
    c.rounds = j.at("rounds").get<std::size_t>();
    c.policy_optimizer = j.at("policy_optimizer").get<nn::OptimizerConfig>();
    c.disc_optimizer = j.at("disc_optimizer").get<nn::OptimizerConfig>();
    c.validate();
}

void to_json(nlohmann::json& j, const RoundDiagnostics& d) {
    j = {{"round", d.round},
         {"cluster", d.cluster},
         {"disc_loss", d.disc_loss},
         {"surrogate_loss", d.surrogate_loss},
         {"mean_len", d.mean_len}};
}

std::vector<double> reward_to_go(std::span<const double> costs, double discount) {
    std::vector<double> q(costs.size());
    double acc = 0.0;
    for (std::size_t i = costs.size(); i-- > 0;) {
        acc = costs[i] + discount * acc;
        q[i] = acc;
    }
    return q;
}

double discriminator_loss_gradient(DiscriminatorModel& disc, std::span<const EventSequence* const> policy_samples,
                                   std::span<const EventSequence* const> expert_samples) {
    std::size_t policy_pairs = 0;
    std::size_t expert_pairs = 0;
    for (const auto* s : policy_samples) policy_pairs += s->size();
    for (const auto* s : expert_samples) expert_pairs += s->size();

    double loss = 0.0;
    // Each sequence gets its own tape; gradients accumulate across them.
    auto run = [&](const EventSequence& seq, bool from_policy, double weight) {
        if (seq.empty()) return;
        Tape tape;
        std::vector<Var> terms;
        for (Var z : disc.logits(tape, seq)) {
            terms.push_back(from_policy ? log_sigmoid(tape, z) : log_one_minus_sigmoid(tape, z));
        }
        Var total = tape.scale(tape.sum_scalars(terms), -weight);
        loss += total.scalar();
        tape.backward(total);
    };
    if (policy_pairs > 0) {
        for (const auto* s : policy_samples) run(*s, true, 1.0 / static_cast<double>(policy_pairs));
    }
    if (expert_pairs > 0) {
        for (const auto* s : expert_samples) run(*s, false, 1.0 / static_cast<double>(expert_pairs));
    }
    return loss;
}

double irl_step(DiscriminatorModel& disc, nn::Optimizer& optimizer,
                std::span<const EventSequence* const> policy_samples,
                std::span<const EventSequence* const> expert_samples) {
    if (policy_samples.empty() || expert_samples.empty()) throw std::invalid_argument("irl_step: empty batch");
    auto params = disc.parameters();
    nn::zero_grads(params);
    const double loss = discriminator_loss_gradient(disc, policy_samples, expert_samples);
    if (!std::isfinite(nn::global_grad_norm(params))) {
        nn::zero_grads(params);
        throw std::runtime_error("irl_step: non-finite discriminator gradient");
    }
    optimizer.step(params);
    return loss;
}

PolicyGradientStats policy_loss_gradient(PolicyModel& policy, const DiscriminatorModel& disc,
                                         std::span<const Rollout> rollouts, const GailConfig& config,
                                         std::vector<Trajectory>* trajectories) {
    if (rollouts.empty()) throw std::invalid_argument("rl_step: empty batch");
    const std::size_t batch = rollouts.size();

    std::vector<std::vector<double>> costs(batch);
    std::size_t steps = 0;
    double cost_sum = 0.0;
    double len_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        costs[b] = disc.log_scores(rollouts[b].sequence);
        steps += costs[b].size();
        for (double c : costs[b]) cost_sum += c;
        len_sum += static_cast<double>(rollouts[b].sequence.size());
    }
    PolicyGradientStats stats;
    stats.steps = steps;
    stats.mean_length = len_sum / static_cast<double>(batch);
    stats.mean_cost = steps > 0 ? cost_sum / static_cast<double>(steps) : 0.0;
    if (trajectories != nullptr) trajectories->assign(batch, {});
    if (steps == 0 && !config.survival_term) return stats;

    // A censored rollout gets one extra action: the final draw past the
    // horizon, with zero centred cost and log-prob log_survival.
    auto censored = [&](std::size_t b) { return config.survival_term && !rollouts[b].truncated; };
    std::vector<std::vector<double>> q(batch);
    std::vector<std::vector<double>> q_log(batch);
    double q_sum = 0.0;
    double q_log_sum = 0.0;
    std::size_t actions = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        std::vector<double> c = costs[b];
        if (config.center_costs) {
            for (double& x : c) x -= stats.mean_cost;
        }
        std::vector<double> neg_log_pi(rollouts[b].log_probs.size());
        for (std::size_t i = 0; i < neg_log_pi.size(); ++i) neg_log_pi[i] = -rollouts[b].log_probs[i];
        if (censored(b)) {
            c.push_back(0.0);
            neg_log_pi.push_back(-rollouts[b].log_survival);
        }
        q[b] = reward_to_go(c, config.discount);
        q_log[b] = reward_to_go(neg_log_pi, config.discount);
        actions += q[b].size();
        for (double x : q[b]) q_sum += x;
        for (double x : q_log[b]) q_log_sum += x;
    }
    const double q_base = config.baseline && actions > 0 ? q_sum / static_cast<double>(actions) : 0.0;
    const double q_log_base = config.baseline && actions > 0 ? q_log_sum / static_cast<double>(actions) : 0.0;

    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const auto& seq = rollouts[b].sequence;
        if (q[b].empty()) continue;
        Tape tape;
        auto terms = policy.log_prob_sequence(tape, seq, censored(b));
        std::vector<Var> log_probs = terms.log_probs;
        if (censored(b)) log_probs.push_back(terms.log_survival);
        std::vector<double> weights(log_probs.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double adv = (q[b][i] - q_base) - config.entropy_coef * (q_log[b][i] - q_log_base);
            weights[i] = adv * inv_batch;
        }
        Var surrogate = tape.weighted_sum(log_probs, weights);
        stats.surrogate += surrogate.scalar();
        tape.backward(surrogate);
        if (trajectories != nullptr) {
            auto& tr = (*trajectories)[b];
            tr.steps = rollouts[b].steps;
            tr.log_probs = rollouts[b].log_probs;
            tr.scores.resize(costs[b].size());
            for (std::size_t i = 0; i < costs[b].size(); ++i) tr.scores[i] = std::exp(costs[b][i]);
            tr.reward_to_go = q[b];
        }
    }
    return stats;
}

double likelihood_gradient(PolicyModel& policy, std::span<const EventSequence* const> batch, double weight) {
    if (batch.empty()) return 0.0;
    const double w = -weight / static_cast<double>(batch.size());
    double nll = 0.0;
    for (const auto* seq : batch) {
        Tape tape;
        auto terms = policy.log_prob_sequence(tape, *seq, true);
        Var ll = tape.add(terms.total, terms.log_survival);
        nll -= ll.scalar();
        if (w != 0.0) tape.backward(tape.scale(ll, w));
    }
    return nll / static_cast<double>(batch.size());
}

RlStepResult rl_step(PolicyModel& policy, nn::Optimizer& optimizer, const DiscriminatorModel& disc,
                     std::span<const Rollout> rollouts, const GailConfig& config,
                     std::span<const EventSequence* const> expert) {
    auto params = policy.parameters();
    nn::zero_grads(params);
    RlStepResult result;
    result.stats = policy_loss_gradient(policy, disc, rollouts, config);
    if (config.likelihood_weight > 0.0) likelihood_gradient(policy, expert, config.likelihood_weight);
    result.grad_norm = nn::global_grad_norm(params);
    if (!std::isfinite(result.grad_norm)) {
        nn::zero_grads(params);
        throw std::runtime_error("rl_step: non-finite policy gradient (surrogate " +
                                 std::to_string(result.stats.surrogate) + ", mean length " +
                                 std::to_string(result.stats.mean_length) + ")");
    }
    optimizer.step(params);
    return result;
}

RlStepResult rl_step(PolicyModel& policy, nn::Optimizer& optimizer, const DiscriminatorModel& disc,
                     double horizon, const GailConfig& config, Rng& rng) {
    std::vector<Rollout> rollouts;
    rollouts.reserve(config.batch_size);
    for (std::size_t b = 0; b < config.batch_size; ++b) rollouts.push_back(policy.rollout(horizon, rng));
    return rl_step(policy, optimizer, disc, rollouts, config);
}

GailAgent make_agent(const PolicyConfig& policy, const DiscriminatorConfig& disc, const GailConfig& config,
                     Rng& init_rng) {
    GailAgent agent;
    agent.policy = PolicyModel(policy, init_rng);
    agent.discriminator = DiscriminatorModel(disc, init_rng);
    agent.policy_optimizer = nn::Optimizer(config.policy_optimizer);
    agent.disc_optimizer = nn::Optimizer(config.disc_optimizer);
    return agent;
}

std::vector<RoundDiagnostics> gail_tpp(GailAgent& agent, std::span<const EventSequence* const> data,
                                       const GailConfig& config, Rng& rng, int cluster, std::ostream* log) {
    std::vector<RoundDiagnostics> diagnostics;
    if (config.rounds == 0) return diagnostics;
    if (data.empty()) throw std::invalid_argument("gail_tpp: empty cluster");
    const double horizon = data.front()->horizon;
    diagnostics.reserve(config.rounds);

    std::vector<Rollout> rollouts(config.batch_size);
    std::vector<const EventSequence*> policy_batch(config.batch_size);
    std::vector<const EventSequence*> expert_batch(config.batch_size);
    for (std::size_t round = 0; round < config.rounds; ++round) {
        double len = 0.0;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            rollouts[b] = agent.policy.rollout(horizon, rng);
            policy_batch[b] = &rollouts[b].sequence;
            len += static_cast<double>(rollouts[b].sequence.size());
        }
        for (std::size_t b = 0; b < config.batch_size; ++b) expert_batch[b] = data[rng.below(data.size())];

        RoundDiagnostics diag;
        diag.round = round;
        diag.cluster = cluster;
        diag.mean_len = len / static_cast<double>(config.batch_size);
        for (std::size_t s = 0; s < config.disc_steps; ++s) {
            diag.disc_loss = irl_step(agent.discriminator, agent.disc_optimizer, policy_batch, expert_batch);
        }
        for (std::size_t s = 0; s < config.policy_steps; ++s) {
            diag.surrogate_loss =
                rl_step(agent.policy, agent.policy_optimizer, agent.discriminator, rollouts, config, expert_batch)
                    .stats.surrogate;
        }
        if (log != nullptr) *log << nlohmann::json(diag).dump() << '\n';
        diagnostics.push_back(diag);
    }
    return diagnostics;
}

}  // namespace tppmix
