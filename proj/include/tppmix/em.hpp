#pragma once

// Mixture of policies fitted by alternating
//   E-step: train the sequence classifier on sequences generated by the
//           current policies (labels drawn in proportion to cluster sizes),
//           then relabel the dataset by the classifier's argmax;
//   M-step: adversarial imitation of each cluster's sequences by its policy.
// Early on, each cluster's training data is topped up with the outside
// sequences the classifier finds most likely to belong to it.

#include "tppmix/classifier.hpp"
#include "tppmix/discriminator.hpp"
#include "tppmix/gail.hpp"
#include "tppmix/metrics.hpp"
#include "tppmix/policy.hpp"
#include "tppmix/sequence.hpp"

#include "json.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tppmix {

struct AugmentSchedule {
    double initial_fraction = 0.2;
    double decay = 0.5;

    /// initial_fraction * decay^k, clipped at 0.
    double fraction(std::size_t iteration) const;
};

struct EmConfig {
    int clusters = 2;
    /// Generated sequences per E-step classifier training set.
    std::size_t classifier_samples = 256;
    std::size_t max_iterations = 50;
    /// Stop once fewer than this share of labels change in an E-step.
    double convergence_threshold = 0.01;
    AugmentSchedule augment;
    /// Rounds of the initial imitation on the random partition; 0 uses
    /// gail.rounds.
    std::size_t warmup_rounds = 0;
    /// Start each policy's rate head at the mean inter-event time of its
    /// initial cluster.
    bool init_rate_from_data = true;
    /// Every optimizer's learning rate is multiplied by this after each EM
    /// iteration, so later iterations move less. 1 keeps rates fixed.
    double lr_decay = 1.0;
    /// Independent EM runs from different random partitions; the one with
    /// the highest final mean assigned log-probability is kept.
    std::size_t restarts = 1;
    /// Concurrent M-step tasks; 0 uses every available core.
    std::size_t workers = 0;

    void validate() const;
};

struct TrainingConfig {
    PolicyConfig policy;
    DiscriminatorConfig discriminator;
    ClassifierConfig classifier;
    GailConfig gail;
    EmConfig em;

    void validate() const;
};

void to_json(nlohmann::json& j, const AugmentSchedule& s);
void from_json(const nlohmann::json& j, AugmentSchedule& s);
void to_json(nlohmann::json& j, const EmConfig& c);
void from_json(const nlohmann::json& j, EmConfig& c);
void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

/// The EM iterate. `assignment` is indexed like the dataset it was fitted
/// on.
struct MixtureState {
    std::vector<GailAgent> agents;
    ClassifierModel classifier;
    nn::Optimizer classifier_optimizer;
    std::vector<int> assignment;
    std::size_t iteration = 0;

    int clusters() const { return static_cast<int>(agents.size()); }
    std::vector<PolicyModel> policies() const;
};

/// Fresh models for `clusters` clusters, all drawn from `rng`.
MixtureState init_state(const TrainingConfig& config, Rng& rng);

/// Dataset indices per cluster.
std::vector<std::vector<std::size_t>> members(std::span<const int> assignment, int clusters);

struct EStepResult {
    std::vector<int> assignment;
    /// Row j is the classifier's distribution over clusters for sequence j.
    nn::Mat posterior;
    double classifier_loss = 0.0;
    /// Clusters whose policy generated only empty sequences.
    std::vector<int> silent_policies;
    /// Classifier training samples drawn from each policy.
    std::vector<std::size_t> drawn;
};

/// Samples config.em.classifier_samples sequences from the policies with
/// probability proportional to the current cluster sizes (with replacement),
/// trains the classifier on them and relabels `data`.
EStepResult e_step(MixtureState& state, std::span<const EventSequence* const> data, const TrainingConfig& config,
                   Rng& rng);

/// Per-cluster training sets: the cluster's own members plus, for each
/// cluster, floor(f(k) * |outside|) outside sequences with the highest
/// posterior for it. An empty cluster borrows at least `min_per_cluster`.
/// Ties in the ranking go to the lower index.
std::vector<std::vector<std::size_t>> augment(std::span<const int> assignment, const nn::Mat& posterior,
                                              const AugmentSchedule& schedule, std::size_t iteration,
                                              std::size_t min_per_cluster = 0);

/// Runs gail_tpp for every cluster on its training set. Cluster i draws from
/// the stream stream_seed(seed, i), so results do not depend on scheduling.
/// `workers` == 0 uses every available core.
/// A cluster with an empty training set is left unchanged.
void m_step(MixtureState& state, std::span<const EventSequence* const> data,
            const std::vector<std::vector<std::size_t>>& training_sets, const GailConfig& gail, std::uint64_t seed,
            std::size_t workers, std::ostream* log = nullptr);

/// Mean over sequences of log pi_{y_j}(x_j) under the assigned policies.
double mean_assigned_log_prob(const MixtureState& state, std::span<const EventSequence* const> data);

struct IterationRecord {
    std::size_t iteration = 0;
    std::vector<std::size_t> sizes;
    std::optional<double> purity;
    std::optional<double> rand_index;
    double mean_log_prob = 0.0;
    double change_fraction = 0.0;
    double classifier_loss = 0.0;
    double wall_seconds = 0.0;
};

void to_json(nlohmann::json& j, const IterationRecord& r);

struct RlpmmResult {
    MixtureState state;
    std::vector<IterationRecord> history;
    bool converged = false;
    /// Index of the kept run and the final score of every run.
    std::size_t restart = 0;
    std::vector<double> restart_scores;
};

inline constexpr std::uint64_t kRestartStream = 0x72657374000000ULL;

struct RlpmmHooks {
    /// Called after the warm-up (iteration 0) and after every EM iteration.
    std::function<void(const MixtureState&, const IterationRecord&)> on_iteration;
    /// Receives the per-round imitation diagnostics.
    std::ostream* training_log = nullptr;
};

/// Full EM loop. Random choices are keyed to sequence ids, not to the order
/// of `data`. Restart r > 0 uses the seed stream_seed(seed, kRestartStream + r);
/// hooks fire only for the kept run, after all runs finish.
RlpmmResult rlpmm(const Dataset& data, const TrainingConfig& config, std::uint64_t seed,
                  const RlpmmHooks& hooks = {});

/// Share of freshly generated policy samples that the classifier assigns to
/// the generating policy.
double classifier_holdout_accuracy(const MixtureState& state, double horizon, std::size_t per_cluster, Rng& rng);

/// Clustering runner for the consistency metric: fits the mixture on the
/// training fold of `data` and labels the test fold with the classifier.
/// `data` must outlive the runner.
ClusteringRunner make_mixture_runner(const Dataset& data, const TrainingConfig& config);

}  // namespace tppmix
