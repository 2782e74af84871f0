#include "tppmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace tppmix {

namespace {

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

void ClusteringResult::validate(bool need_truth) const {
    if (need_truth && truth.empty() && !predicted.empty()) throw std::invalid_argument("metric requires true labels");
    if (!truth.empty() && truth.size() != predicted.size()) {
        throw std::invalid_argument("predicted and true labels differ in length");
    }
    for (int p : predicted) {
        if (p < 0) throw std::invalid_argument("predicted label out of range");
    }
    for (int t : truth) {
        if (t < 0) throw std::invalid_argument("true label missing or out of range");
    }
}

double purity(const ClusteringResult& result) {
    result.validate(true);
    if (result.predicted.empty()) throw std::invalid_argument("purity: no sequences");
    std::map<int, std::map<int, std::size_t>> table;
    for (std::size_t i = 0; i < result.predicted.size(); ++i) ++table[result.predicted[i]][result.truth[i]];
    std::size_t majority = 0;
    for (const auto& [cluster, counts] : table) {
        std::size_t best = 0;
        for (const auto& [cls, n] : counts) best = std::max(best, n);
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(result.predicted.size());
}

double rand_index(const ClusteringResult& result) {
    result.validate(true);
    const std::size_t m = result.predicted.size();
    if (m < 2) throw std::invalid_argument("rand_index: need at least two sequences");
    std::map<std::pair<int, int>, std::size_t> joint;
    std::map<int, std::size_t> by_cluster;
    std::map<int, std::size_t> by_class;
    for (std::size_t i = 0; i < m; ++i) {
        ++joint[{result.predicted[i], result.truth[i]}];
        ++by_cluster[result.predicted[i]];
        ++by_class[result.truth[i]];
    }
    double n11 = 0.0;
    for (const auto& [key, n] : joint) n11 += pairs(static_cast<double>(n));
    double same_cluster = 0.0;
    for (const auto& [key, n] : by_cluster) same_cluster += pairs(static_cast<double>(n));
    double same_class = 0.0;
    for (const auto& [key, n] : by_class) same_class += pairs(static_cast<double>(n));
    const double total = pairs(static_cast<double>(m));
    const double n00 = total - same_cluster - same_class + n11;
    return (n11 + n00) / total;
}

double eid(const EmpiricalIntensity& a, const EmpiricalIntensity& b) {
    if (a.rates.size() != b.rates.size() || a.bin_width != b.bin_width) {
        throw std::invalid_argument("eid: intensities use different bins");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < a.rates.size(); ++k) total += std::abs(a.rates[k] - b.rates[k]) * a.bin_width;
    return total;
}

double eid(std::span<const EventSequence* const> real, std::span<const EventSequence* const> generated,
           double bin_width) {
    if (real.empty() || generated.empty()) throw std::invalid_argument("eid: empty sequence set");
    if (real.front()->horizon != generated.front()->horizon) throw std::invalid_argument("eid: horizons differ");
    return eid(empirical_intensity(real, bin_width), empirical_intensity(generated, bin_width));
}

double eid(std::span<const EventSequence> real, std::span<const EventSequence> generated, double bin_width) {
    if (real.empty() || generated.empty()) throw std::invalid_argument("eid: empty sequence set");
    if (real.front().horizon != generated.front().horizon) throw std::invalid_argument("eid: horizons differ");
    return eid(empirical_intensity(real, bin_width), empirical_intensity(generated, bin_width));
}

ConsistencyResult clustering_consistency(const ClusteringRunner& runner, std::size_t dataset_size,
                                         const ConsistencyOptions& options) {
    if (options.trials < 2) throw std::invalid_argument("clustering_consistency: need at least two trials");
    if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0)) {
        throw std::invalid_argument("clustering_consistency: split fraction must lie in (0, 1)");
    }
    const std::size_t J = options.trials;
    const auto train_size = static_cast<std::size_t>(std::floor(options.split_fraction * static_cast<double>(dataset_size)));
    if (train_size == 0 || train_size >= dataset_size) throw std::invalid_argument("clustering_consistency: empty fold");

    // label[j][m] = cluster of sequence m in trial j, -1 if m was in the training fold
    std::vector<std::vector<int>> label(J, std::vector<int>(dataset_size, -1));
    std::vector<std::vector<std::size_t>> tests(J);
    auto run_trial = [&](std::size_t j) {
        Rng rng(stream_seed(options.seed, j));
        std::vector<std::size_t> order(dataset_size);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
        std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        const auto labels = runner(train, test, stream_seed(options.seed ^ 0xc0ffee, j));
        if (labels.size() != test.size()) throw std::runtime_error("clustering runner returned the wrong number of labels");
        for (std::size_t k = 0; k < test.size(); ++k) label[j][test[k]] = labels[k];
        tests[j] = std::move(test);
    };
    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    for (std::size_t start = 0; start < J; start += workers) {
        std::vector<std::future<void>> jobs;
        for (std::size_t j = start; j < std::min(J, start + workers); ++j) {
            jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_trial, j));
        }
        for (auto& job : jobs) job.get();
    }

    ConsistencyResult result;
    result.per_trial.assign(J, std::numeric_limits<double>::quiet_NaN());
    result.value = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J; ++j) {
        const auto& test = tests[j];
        std::size_t preserved = 0;
        std::size_t considered = 0;
        for (std::size_t a = 0; a < test.size(); ++a) {
            for (std::size_t b = a + 1; b < test.size(); ++b) {
                const std::size_t m = test[a];
                const std::size_t n = test[b];
                if (label[j][m] != label[j][n]) continue;
                for (std::size_t other = 0; other < J; ++other) {
                    if (other == j) continue;
                    const int km = label[other][m];
                    const int kn = label[other][n];
                    if (km < 0 || kn < 0) continue;
                    ++considered;
                    if (km == kn) ++preserved;
                }
            }
        }
        if (considered == 0) {
            ++result.skipped;
            continue;
        }
        result.per_trial[j] = static_cast<double>(preserved) / static_cast<double>(considered);
        result.value = std::min(result.value, result.per_trial[j]);
    }
    if (result.skipped == J) throw std::runtime_error("clustering_consistency: every trial had an empty pair set");
    return result;
}

MatchedEid greedy_match(const std::vector<std::vector<double>>& eid_matrix) {
    const std::size_t classes = eid_matrix.size();
    if (classes == 0) throw std::invalid_argument("greedy_match: empty matrix");
    const std::size_t policies = eid_matrix.front().size();
    if (policies != classes) throw std::invalid_argument("matched_eid: number of classes and policies differ");
    MatchedEid out;
    out.policy_for_class.assign(classes, -1);
    out.per_class.assign(classes, 0.0);
    std::vector<bool> used(policies, false);
    for (std::size_t round = 0; round < classes; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bc = 0;
        std::size_t bp = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (out.policy_for_class[c] >= 0) continue;
            for (std::size_t p = 0; p < policies; ++p) {
                if (used[p]) continue;
                if (eid_matrix[c][p] < best) {
                    best = eid_matrix[c][p];
                    bc = c;
                    bp = p;
                }
            }
        }
        out.policy_for_class[bc] = static_cast<int>(bp);
        out.per_class[bc] = best;
        used[bp] = true;
    }
    out.mean = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) / static_cast<double>(classes);
    return out;
}

MatchedEid matched_eid(std::span<const PolicyModel> policies, const Dataset& labeled, double bin_width,
                       std::size_t samples, std::uint64_t seed) {
    if (!has_labels(labeled)) throw std::invalid_argument("matched_eid: dataset needs true labels");
    const int classes = label_count(labeled);
    if (static_cast<std::size_t>(classes) != policies.size()) {
        throw std::invalid_argument("matched_eid: " + std::to_string(classes) + " classes but " +
                                    std::to_string(policies.size()) + " policies");
    }
    const double horizon = labeled.front().horizon;
    std::vector<std::vector<const EventSequence*>> by_class(static_cast<std::size_t>(classes));
    for (const auto& s : labeled) by_class[static_cast<std::size_t>(s.label)].push_back(&s);

    std::vector<EmpiricalIntensity> generated;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        Rng rng(stream_seed(seed, p));
        std::vector<EventSequence> draws;
        draws.reserve(samples);
        for (std::size_t k = 0; k < samples; ++k) draws.push_back(policies[p].rollout(horizon, rng).sequence);
        generated.push_back(empirical_intensity(std::span<const EventSequence>(draws), bin_width));
    }
    std::vector<std::vector<double>> matrix(static_cast<std::size_t>(classes));
    for (std::size_t c = 0; c < matrix.size(); ++c) {
        if (by_class[c].empty()) throw std::invalid_argument("matched_eid: class " + std::to_string(c) + " is empty");
        const auto real = empirical_intensity(std::span<const EventSequence* const>(by_class[c]), bin_width);
        for (const auto& g : generated) matrix[c].push_back(eid(real, g));
    }
    return greedy_match(matrix);
}

}  // namespace tppmix
