#pragma once

// Stochastic recurrent policy over inter-event times.
//
// The state before event i is the hidden vector h_{i-1} of a recurrent cell
// fed with the previous actions (h_0 = 0). The action is the next inter-event
// time a_i ~ pi(a | rate(h_{i-1})) with rate(h) = softplus(u . h + c) and pi
// either exponential, rate * exp(-rate a), or Rayleigh,
// rate * a * exp(-rate a^2 / 2). The Weibull option adds a second head
// output, shape(h) = 0.2 + softplus(u' . h + c'), with survival
// exp(-(rate a)^shape).

#include "tppmix/autodiff.hpp"
#include "tppmix/encoding.hpp"
#include "tppmix/layers.hpp"
#include "tppmix/rng.hpp"
#include "tppmix/sequence.hpp"

#include "json.hpp"

#include <string_view>
#include <vector>

namespace tppmix {

enum class ActionDistribution { exponential, rayleigh, weibull };

ActionDistribution parse_action_distribution(std::string_view name);
std::string_view to_string(ActionDistribution dist);

// `shape` is read only by the Weibull family.
double log_density(ActionDistribution dist, double rate, double action, double shape = 1.0);
/// log P(gap > rest).
double log_survival(ActionDistribution dist, double rate, double rest, double shape = 1.0);
/// Inverse-CDF sample from a uniform u in (0, 1).
double sample_gap(ActionDistribution dist, double rate, double u, double shape = 1.0);
/// Mean inter-event time for a given rate.
double mean_gap(ActionDistribution dist, double rate, double shape = 1.0);
/// Rate whose mean inter-event time is `gap`.
double rate_for_mean_gap(ActionDistribution dist, double gap, double shape = 1.0);

struct PolicyConfig {
    Eigen::Index hidden_dim = 32;
    nn::CellKind cell = nn::CellKind::lstm;
    ActionDistribution distribution = ActionDistribution::rayleigh;
    InputEncoding encoding;
    /// Runaway guard for rollouts; 0 selects max(1000, 10 * ceil(T)).
    std::size_t max_events = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const PolicyConfig& c);
void from_json(const nlohmann::json& j, PolicyConfig& c);

struct StateAction {
    nn::Vec state;   // h_{i-1}
    double action = 0.0;
    double time = 0.0;
};

struct SampledAction {
    double action = 0.0;
    double log_prob = 0.0;
};

struct Rollout {
    EventSequence sequence;
    std::vector<StateAction> steps;
    std::vector<double> log_probs;
    /// log P(next gap > T - t_n), the probability of the censored final draw.
    double log_survival = 0.0;
    /// Stopped by the runaway guard rather than by the horizon.
    bool truncated = false;
};

class PolicyModel {
public:
    PolicyModel() = default;
    /// Randomly initialized policy.
    PolicyModel(const PolicyConfig& config, Rng& init_rng);

    const PolicyConfig& config() const { return config_; }
    Eigen::Index hidden_dim() const { return config_.hidden_dim; }

    double rate(const nn::Vec& hidden) const;
    nn::Var rate(nn::Tape& tape, nn::Var hidden) const;
    /// 1 unless the distribution is Weibull.
    double shape(const nn::Vec& hidden) const;

    SampledAction sample_action(const nn::Vec& hidden, double u) const;
    SampledAction sample_action(const nn::Vec& hidden, Rng& rng) const;

    /// Samples events until the next one would pass `horizon`; the
    /// overshooting event is dropped.
    Rollout rollout(double horizon, Rng& rng) const;

    struct SequenceTerms {
        /// Sum of the per-event log densities (no survival term).
        nn::Var total;
        std::vector<nn::Var> log_probs;
        /// log P(next gap > T - t_n); set only on request.
        nn::Var log_survival;
    };
    /// Teacher-forced pass over the sequence's own inter-event times.
    SequenceTerms log_prob_sequence(nn::Tape& tape, const EventSequence& seq, bool with_survival = false) const;
    double log_prob_sequence(const EventSequence& seq) const;

    /// Sets the rate-head bias so that rate(0) has mean inter-event time
    /// `gap`.
    void set_mean_gap(double gap);
    /// Zeroes the rate-head weights, making the rate independent of history.
    void freeze_rate_to_bias();

    std::size_t event_cap(double horizon) const;

    nn::ParameterList parameters();
    nn::RecurrentCell& cell() { return cell_; }
    nn::Dense& head() { return head_; }

    nlohmann::json to_json() const;
    static PolicyModel from_json(const nlohmann::json& doc);

private:
    PolicyConfig config_;
    struct GapParams {
        nn::Var rate;
        nn::Var shape;  // unset unless Weibull
    };
    GapParams gap_params(nn::Tape& tape, nn::Var hidden) const;
    nn::Var log_density(nn::Tape& tape, const GapParams& p, double action) const;
    nn::Var log_survival(nn::Tape& tape, const GapParams& p, double rest) const;
    Eigen::Index head_outputs() const;

    nn::RecurrentCell cell_;
    nn::Dense head_;
};

}  // namespace tppmix
