#pragma once

// Adversarial imitation for one cluster.
//
// Convention: D(s, a) is the probability that a pair was generated by the
// policy, so log D(s, a) is the per-step cost the policy minimizes. The
// discriminator ascends
//     E_policy[log D] + E_expert[log(1 - D)]
// and the policy descends
//     E_policy[grad log pi(a|s) Q(s, a)] - lambda grad H(pi)
// with Q the discounted reward-to-go of the cost and grad H estimated with
// the reward-to-go of -log pi.

#include "tppmix/discriminator.hpp"
#include "tppmix/optimizer.hpp"
#include "tppmix/policy.hpp"
#include "tppmix/rng.hpp"

#include "json.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace tppmix {

struct GailConfig {
    double entropy_coef = 1e-3;
    std::size_t batch_size = 32;
    std::size_t disc_steps = 1;
    std::size_t policy_steps = 1;
    double discount = 0.99;
    /// Subtract the batch-mean step cost before forming reward-to-go, so a
    /// discriminator that cannot tell the streams apart yields no gradient.
    bool center_costs = true;
    /// Subtract the batch-mean reward-to-go as a baseline.
    bool baseline = true;
    /// Treat the censored draw that ends a rollout as a final zero-cost
    /// action with probability P(gap > T - t_n). Without it the score terms
    /// of the kept events are biased toward lower rates.
    bool survival_term = true;
    /// Weight of an added maximum-likelihood term, the mean negative
    /// log-likelihood (with survival) of the expert batch. 0 disables it.
    double likelihood_weight = 0.0;
    /// (irl, rl) rounds per gail_tpp call.
    std::size_t rounds = 100;
    nn::OptimizerConfig policy_optimizer;
    nn::OptimizerConfig disc_optimizer;

    void validate() const;
};

void to_json(nlohmann::json& j, const GailConfig& c);
void from_json(const nlohmann::json& j, GailConfig& c);

/// Per-step record of one policy rollout scored by the discriminator.
struct Trajectory {
    std::vector<StateAction> steps;
    std::vector<double> log_probs;
    std::vector<double> scores;
    std::vector<double> reward_to_go;
};

/// Q_i = sum_{j >= i} discount^{j - i} costs_j.
std::vector<double> reward_to_go(std::span<const double> costs, double discount);

/// Discriminator loss -(mean_policy log D + mean_expert log(1 - D)), gradients
/// accumulated into the discriminator's parameters. Returns the loss.
double discriminator_loss_gradient(DiscriminatorModel& disc, std::span<const EventSequence* const> policy_samples,
                                   std::span<const EventSequence* const> expert_samples);

/// One discriminator update. Throws if either sample set is empty.
double irl_step(DiscriminatorModel& disc, nn::Optimizer& optimizer,
                std::span<const EventSequence* const> policy_samples,
                std::span<const EventSequence* const> expert_samples);

struct PolicyGradientStats {
    double surrogate = 0.0;
    double mean_cost = 0.0;
    double mean_length = 0.0;
    std::size_t steps = 0;
};

/// Builds the policy-gradient surrogate for a batch of rollouts and
/// accumulates its gradient into the policy's parameters (no update).
PolicyGradientStats policy_loss_gradient(PolicyModel& policy, const DiscriminatorModel& disc,
                                         std::span<const Rollout> rollouts, const GailConfig& config,
                                         std::vector<Trajectory>* trajectories = nullptr);

struct RlStepResult {
    PolicyGradientStats stats;
    double grad_norm = 0.0;
};

/// Mean negative log-likelihood (event densities plus survival) of `batch`
/// scaled by `weight`; gradients accumulated. Returns the unscaled value.
double likelihood_gradient(PolicyModel& policy, std::span<const EventSequence* const> batch, double weight);

/// One policy update on the given rollouts. `expert` feeds the optional
/// likelihood term.
RlStepResult rl_step(PolicyModel& policy, nn::Optimizer& optimizer, const DiscriminatorModel& disc,
                     std::span<const Rollout> rollouts, const GailConfig& config,
                     std::span<const EventSequence* const> expert = {});
/// One policy update on a fresh batch of config.batch_size rollouts.
RlStepResult rl_step(PolicyModel& policy, nn::Optimizer& optimizer, const DiscriminatorModel& disc,
                     double horizon, const GailConfig& config, Rng& rng);

/// A policy with its discriminator and their optimizer states.
struct GailAgent {
    PolicyModel policy;
    DiscriminatorModel discriminator;
    nn::Optimizer policy_optimizer;
    nn::Optimizer disc_optimizer;
};

GailAgent make_agent(const PolicyConfig& policy, const DiscriminatorConfig& disc, const GailConfig& config,
                     Rng& init_rng);

struct RoundDiagnostics {
    std::size_t round = 0;
    int cluster = -1;
    double disc_loss = 0.0;
    double surrogate_loss = 0.0;
    double mean_len = 0.0;
};

void to_json(nlohmann::json& j, const RoundDiagnostics& d);

/// config.rounds rounds of: sample rollouts, irl_step against a batch drawn
/// with replacement from `data`, rl_step on the same rollouts. Diagnostics
/// are returned and, if `log` is set, appended there one JSON line per round.
std::vector<RoundDiagnostics> gail_tpp(GailAgent& agent, std::span<const EventSequence* const> data,
                                       const GailConfig& config, Rng& rng, int cluster = -1,
                                       std::ostream* log = nullptr);

}  // namespace tppmix
