#pragma once

// Clustering purity, Rand index, empirical intensity deviation and
// cross-validated clustering consistency.

#include "tppmix/intensity.hpp"
#include "tppmix/policy.hpp"
#include "tppmix/sequence.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tppmix {

/// Predicted cluster per sequence and, optionally, the true class.
struct ClusteringResult {
    std::vector<int> predicted;
    std::vector<int> truth;   // empty when unknown

    void validate(bool need_truth) const;
};

/// (1/M) sum_k max_i |W_k intersect C_i|.
double purity(const ClusteringResult& result);

/// (n11 + n00) / (M (M - 1) / 2) over all pairs.
double rand_index(const ClusteringResult& result);

/// Accumulated absolute deviation sum_bins |rate_a - rate_b| * dt.
double eid(const EmpiricalIntensity& a, const EmpiricalIntensity& b);
double eid(std::span<const EventSequence* const> real, std::span<const EventSequence* const> generated,
           double bin_width);
double eid(std::span<const EventSequence> real, std::span<const EventSequence> generated, double bin_width);

/// Trains on `train` (dataset indices) and returns one label per entry of
/// `test`. Must be deterministic in `seed`.
using ClusteringRunner = std::function<std::vector<int>(std::span<const std::size_t> train,
                                                        std::span<const std::size_t> test, std::uint64_t seed)>;

struct ConsistencyOptions {
    std::size_t trials = 10;
    double split_fraction = 0.5;   // share of sequences in the training fold
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct ConsistencyResult {
    double value = 0.0;
    /// Preserved-pair proportion per trial; NaN for skipped trials.
    std::vector<double> per_trial;
    std::size_t skipped = 0;
};

/// Minimum over trials j of the share of pairs co-clustered in trial j's
/// test fold that stay co-clustered in every other trial j' whose test fold
/// also holds both sequences. Trials with no such pairs are skipped.
ConsistencyResult clustering_consistency(const ClusteringRunner& runner, std::size_t dataset_size,
                                         const ConsistencyOptions& options);

struct MatchedEid {
    /// policy_for_class[c] is the policy matched to true class c.
    std::vector<int> policy_for_class;
    std::vector<double> per_class;
    double mean = 0.0;
};

/// Greedy class-to-policy matching on the EID matrix: repeatedly take the
/// smallest remaining entry. Each policy contributes `samples` rollouts.
MatchedEid matched_eid(std::span<const PolicyModel> policies, const Dataset& labeled, double bin_width,
                       std::size_t samples, std::uint64_t seed);

/// Greedy matching on a precomputed classes x policies EID matrix.
MatchedEid greedy_match(const std::vector<std::vector<double>>& eid_matrix);

}  // namespace tppmix
