#include "tppmix/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tppmix {

namespace {

double bump(double t, double center, double width) {
    const double z = t - center;
    return 0.15 * std::exp(-(z * z) / (2.0 * width * width));
}

double deterministic_rate(const IntensitySpec& spec, double t) {
    switch (spec.kind) {
        case IntensityKind::sine:
            return std::sin(std::numbers::pi * t / 50.0) / 10.0 + 0.1;
        case IntensityKind::negative_sine:
            return -std::sin(std::numbers::pi * t / 50.0) / 10.0 + 0.1;
        case IntensityKind::constant:
            return 0.1;
        case IntensityKind::bimodal: {
            const double T = spec.horizon;
            return t <= T / 2.0 ? bump(t, T / 4.0, T / 8.0) : bump(t, 3.0 * T / 4.0, T / 8.0);
        }
        case IntensityKind::hawkes:
            break;
    }
    throw std::logic_error("deterministic_rate: hawkes has history dependence");
}

EventSequence simulate_hawkes(const IntensitySpec& spec, double horizon, Rng& rng) {
    EventSequence seq;
    seq.horizon = horizon;
    double t = 0.0;
    // excitation = alpha * sum exp(-decay (t - t_i)) at the current time t
    double excitation = 0.0;
    double bound = spec.base;
    while (true) {
        if (!(bound > 0.0)) break;
        const double step = rng.exponential(bound);
        const double candidate = t + step;
        if (candidate > horizon) break;
        excitation *= std::exp(-spec.decay * step);
        t = candidate;
        const double rate = spec.base + excitation;
        if (rng.uniform_open() * bound <= rate) {
            seq.times.push_back(t);
            excitation += spec.alpha;
        }
        // intensity only decays until the next event
        bound = spec.base + excitation;
    }
    return seq;
}

}  // namespace

IntensitySpec IntensitySpec::hawkes(double base, double alpha, double decay) {
    IntensitySpec s;
    s.kind = IntensityKind::hawkes;
    s.base = base;
    s.alpha = alpha;
    s.decay = decay;
    return s;
}

IntensitySpec IntensitySpec::sine() {
    IntensitySpec s;
    s.kind = IntensityKind::sine;
    return s;
}

IntensitySpec IntensitySpec::negative_sine() {
    IntensitySpec s;
    s.kind = IntensityKind::negative_sine;
    return s;
}

IntensitySpec IntensitySpec::constant() {
    IntensitySpec s;
    s.kind = IntensityKind::constant;
    return s;
}

IntensitySpec IntensitySpec::bimodal(double horizon) {
    IntensitySpec s;
    s.kind = IntensityKind::bimodal;
    s.horizon = horizon;
    return s;
}

IntensitySpec IntensitySpec::parse(const std::string& text, double horizon) {
    IntensitySpec spec;
    if (text == "sine") {
        spec = sine();
    } else if (text == "negative-sine") {
        spec = negative_sine();
    } else if (text == "constant") {
        spec = constant();
    } else if (text == "bimodal") {
        spec = bimodal(horizon);
    } else if (text.rfind("hawkes:", 0) == 0) {
        std::istringstream in(text.substr(7));
        double values[3];
        char sep = 0;
        if (!(in >> values[0] >> sep) || sep != ',' || !(in >> values[1] >> sep) || sep != ',' || !(in >> values[2]) ||
            !in.eof()) {
            throw std::invalid_argument("intensity '" + text + "': expected hawkes:<base>,<alpha>,<decay>");
        }
        spec = hawkes(values[0], values[1], values[2]);
    } else {
        throw std::invalid_argument("unknown intensity '" + text + "'");
    }
    spec.horizon = horizon;
    spec.validate();
    return spec;
}

std::string IntensitySpec::to_string() const {
    switch (kind) {
        case IntensityKind::sine: return "sine";
        case IntensityKind::negative_sine: return "negative-sine";
        case IntensityKind::constant: return "constant";
        case IntensityKind::bimodal: return "bimodal";
        case IntensityKind::hawkes: {
            std::ostringstream out;
            out.precision(17);
            out << "hawkes:" << base << ',' << alpha << ',' << decay;
            return out.str();
        }
    }
    return "?";
}

void IntensitySpec::validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("intensity: horizon must be positive");
    if (kind != IntensityKind::hawkes) return;
    if (!(base >= 0.0) || !(alpha >= 0.0)) throw std::invalid_argument("hawkes: base and alpha must be non-negative");
    if (!(decay > 0.0)) throw std::invalid_argument("hawkes: decay must be positive");
    if (alpha / decay >= 1.0) {
        if (!allow_unstable) {
            throw std::invalid_argument("hawkes: alpha/decay >= 1 is explosive (set allow_unstable to override)");
        }
        std::cerr << "warning: hawkes alpha/decay = " << alpha / decay << " >= 1, process is not stationary\n";
    }
}

double IntensitySpec::upper_bound() const {
    switch (kind) {
        case IntensityKind::sine:
        case IntensityKind::negative_sine: return 0.2;
        case IntensityKind::constant: return 0.1;
        case IntensityKind::bimodal: return 0.15;
        case IntensityKind::hawkes: break;
    }
    throw std::logic_error("upper_bound: hawkes intensity is unbounded a priori");
}

double intensity_at(const IntensitySpec& spec, double t, std::span<const double> history) {
    if (t < 0.0) throw std::invalid_argument("intensity_at: negative time");
    double prev = -std::numeric_limits<double>::infinity();
    for (double h : history) {
        if (!(h > prev)) throw std::invalid_argument("intensity_at: history is not sorted");
        if (!(h < t)) throw std::invalid_argument("intensity_at: history must precede t");
        prev = h;
    }
    if (spec.kind != IntensityKind::hawkes) return deterministic_rate(spec, t);
    double rate = spec.base;
    for (double h : history) rate += spec.alpha * std::exp(-spec.decay * (t - h));
    return rate;
}

EventSequence simulate(const IntensitySpec& spec, double horizon, Rng& rng) {
    spec.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
    if (spec.kind == IntensityKind::hawkes) return simulate_hawkes(spec, horizon, rng);

    EventSequence seq;
    seq.horizon = horizon;
    const double bound = spec.upper_bound();
    double t = 0.0;
    while (true) {
        t += rng.exponential(bound);
        if (t > horizon) break;
        if (rng.uniform_open() * bound <= deterministic_rate(spec, t)) seq.times.push_back(t);
    }
    return seq;
}

EventSequence simulate(const IntensitySpec& spec, double horizon, std::uint64_t seed) {
    Rng rng(seed);
    return simulate(spec, horizon, rng);
}

EmpiricalIntensity empirical_intensity(std::span<const EventSequence* const> sequences, double bin_width) {
    if (sequences.empty()) throw std::invalid_argument("empirical_intensity: no sequences");
    if (!(bin_width > 0.0)) throw std::invalid_argument("empirical_intensity: bin width must be positive");
    const double horizon = sequences.front()->horizon;
    for (const auto* s : sequences) {
        if (s->horizon != horizon) throw std::invalid_argument("empirical_intensity: sequences have different horizons");
    }
    const auto bins = static_cast<std::size_t>(std::ceil(horizon / bin_width - 1e-12));
    EmpiricalIntensity out;
    out.bin_width = bin_width;
    out.centers.resize(bins);
    out.rates.assign(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) out.centers[b] = (static_cast<double>(b) + 0.5) * bin_width;
    for (const auto* s : sequences) {
        for (double t : s->times) {
            auto b = static_cast<std::size_t>(t / bin_width);
            // t == T lands on the right edge of the last bin
            if (b >= bins) b = bins - 1;
            out.rates[b] += 1.0;
        }
    }
    const double scale = 1.0 / (static_cast<double>(sequences.size()) * bin_width);
    for (auto& r : out.rates) r *= scale;
    return out;
}

EmpiricalIntensity empirical_intensity(std::span<const EventSequence> sequences, double bin_width) {
    std::vector<const EventSequence*> ptrs;
    ptrs.reserve(sequences.size());
    for (const auto& s : sequences) ptrs.push_back(&s);
    return empirical_intensity(std::span<const EventSequence* const>(ptrs), bin_width);
}

Dataset generate_dataset(const std::vector<IntensitySpec>& specs, std::size_t per_cluster, double horizon,
                         std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("generate_dataset: no cluster specs");
    if (per_cluster == 0) throw std::invalid_argument("generate_dataset: per-cluster count must be positive");
    Dataset data;
    data.reserve(specs.size() * per_cluster);
    std::uint64_t j = 0;
    for (std::size_t c = 0; c < specs.size(); ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i, ++j) {
            EventSequence seq = simulate(specs[c], horizon, stream_seed(seed, j));
            seq.id = static_cast<std::int64_t>(j);
            seq.label = static_cast<int>(c);
            data.push_back(std::move(seq));
        }
    }
    // Fisher-Yates on a stream disjoint from the per-sequence ones
    Rng shuffle_rng(stream_seed(~seed, 0x5eed));
    for (std::size_t i = data.size(); i > 1; --i) {
        const auto k = static_cast<std::size_t>(shuffle_rng.below(i));
        std::swap(data[i - 1], data[k]);
    }
    return data;
}

std::vector<IntensitySpec> random_hawkes_specs(std::size_t count, std::uint64_t seed) {
    Rng rng(stream_seed(seed, 0x4a3c));
    std::vector<IntensitySpec> specs;
    for (std::size_t k = 0; k < count; ++k) {
        const double base = rng.uniform(0.0, 1.0);
        const double alpha = rng.uniform(0.0, 1.0);
        specs.push_back(IntensitySpec::hawkes(base, alpha, 1.0));
    }
    return specs;
}

}  // namespace tppmix
