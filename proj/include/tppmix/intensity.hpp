#pragma once

// Ground-truth intensities, Ogata thinning and empirical intensity estimates.

#include "tppmix/rng.hpp"
#include "tppmix/sequence.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tppmix {

enum class IntensityKind { hawkes, sine, negative_sine, constant, bimodal };

/// Parameters of one ground-truth intensity.
///
///   hawkes:        base + alpha * sum_{t' < t} exp(-decay (t - t'))
///   sine:          sin(pi t / 50) / 10 + 0.1
///   negative-sine: -sin(pi t / 50) / 10 + 0.1
///   constant:      0.1
///   bimodal:       0.15 exp(-(t - T/4)^2 / (2 (T/8)^2))   on (0, T/2]
///                  0.15 exp(-(t - 3T/4)^2 / (2 (T/8)^2))  on (T/2, T)
///
/// `horizon` is the T of the bimodal bumps; the other kinds ignore it.
struct IntensitySpec {
    IntensityKind kind = IntensityKind::constant;
    double base = 0.0;
    double alpha = 0.0;
    double decay = 1.0;
    double horizon = 100.0;
    /// Accept alpha/decay >= 1 (explosive Hawkes) with a warning instead of
    /// rejecting the spec.
    bool allow_unstable = false;

    static IntensitySpec hawkes(double base, double alpha, double decay);
    static IntensitySpec sine();
    static IntensitySpec negative_sine();
    static IntensitySpec constant();
    static IntensitySpec bimodal(double horizon = 100.0);

    /// Parses "sine", "negative-sine", "constant", "bimodal" or
    /// "hawkes:<base>,<alpha>,<decay>".
    static IntensitySpec parse(const std::string& text, double horizon = 100.0);
    std::string to_string() const;

    void validate() const;
    /// Supremum over (0, T) for the deterministic kinds.
    double upper_bound() const;
};

/// lambda(t | history). `history` holds the earlier event times in increasing
/// order; entries >= t are rejected.
double intensity_at(const IntensitySpec& spec, double t, std::span<const double> history);

/// Ogata thinning on (0, horizon].
EventSequence simulate(const IntensitySpec& spec, double horizon, Rng& rng);
EventSequence simulate(const IntensitySpec& spec, double horizon, std::uint64_t seed);

struct EmpiricalIntensity {
    double bin_width = 0.0;
    std::vector<double> centers;
    std::vector<double> rates;
};

/// Per-bin rate (mean event count in the bin) / dt over ceil(T / dt) bins of
/// [0, T].
EmpiricalIntensity empirical_intensity(std::span<const EventSequence> sequences, double bin_width);
EmpiricalIntensity empirical_intensity(std::span<const EventSequence* const> sequences, double bin_width);

/// `per_cluster` sequences from each spec, shuffled. Sequence j (in generation
/// order, cluster-major) uses the stream stream_seed(seed, j) and gets id j
/// and label equal to its spec index.
Dataset generate_dataset(const std::vector<IntensitySpec>& specs, std::size_t per_cluster, double horizon,
                         std::uint64_t seed);

/// K Hawkes specs with base and alpha drawn uniformly from [0, 1) and decay 1.
std::vector<IntensitySpec> random_hawkes_specs(std::size_t count, std::uint64_t seed);

}  // namespace tppmix
