#include "tppmix/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace tppmix {

double AugmentSchedule::fraction(std::size_t iteration) const {
    return std::max(0.0, initial_fraction * std::pow(decay, static_cast<double>(iteration)));
}

void EmConfig::validate() const {
    if (clusters < 2) throw std::invalid_argument("em: clusters must be at least 2");
    if (classifier_samples < static_cast<std::size_t>(clusters)) {
        throw std::invalid_argument("em: classifier_samples must be at least the number of clusters");
    }
    if (!(convergence_threshold >= 0.0 && convergence_threshold <= 1.0)) {
        throw std::invalid_argument("em: convergence_threshold must lie in [0, 1]");
    }
    if (!(augment.initial_fraction >= 0.0 && augment.initial_fraction <= 1.0)) {
        throw std::invalid_argument("em: augment.initial_fraction must lie in [0, 1]");
    }
    if (restarts == 0) throw std::invalid_argument("em: restarts must be at least 1");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("em: lr_decay must lie in (0, 1]");
    if (!(augment.decay >= 0.0 && augment.decay <= 1.0)) throw std::invalid_argument("em: augment.decay must lie in [0, 1]");
}

void TrainingConfig::validate() const {
    policy.validate();
    discriminator.validate();
    classifier.validate();
    gail.validate();
    em.validate();
}

void to_json(nlohmann::json& j, const AugmentSchedule& s) {
    j = {{"initial_fraction", s.initial_fraction}, {"decay", s.decay}};
}

void from_json(const nlohmann::json& j, AugmentSchedule& s) {
    s.initial_fraction = j.at("initial_fraction").get<double>();
    s.decay = j.at("decay").get<double>();
}

void to_json(nlohmann::json& j, const EmConfig& c) {
    j = {{"clusters", c.clusters},
         {"classifier_samples", c.classifier_samples},
         {"max_iterations", c.max_iterations},
         {"convergence_threshold", c.convergence_threshold},
         {"augment", c.augment},
         {"warmup_rounds", c.warmup_rounds},
         {"init_rate_from_data", c.init_rate_from_data},
         {"lr_decay", c.lr_decay},
         {"restarts", c.restarts},
         {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, EmConfig& c) {
    c.clusters = j.at("clusters").get<int>();
    c.classifier_samples = j.at("classifier_samples").get<std::size_t>();
    c.max_iterations = j.at("max_iterations").get<std::size_t>();
    c.convergence_threshold = j.at("convergence_threshold").get<double>();
    c.augment = j.at("augment").get<AugmentSchedule>();
    c.warmup_rounds = j.at("warmup_rounds").get<std::size_t>();
    c.init_rate_from_data = j.at("init_rate_from_data").get<bool>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.restarts = j.at("restarts").get<std::size_t>();
    c.workers = j.at("workers").get<std::size_t>();
    c.validate();
}

void to_json(nlohmann::json& j, const TrainingConfig& c) {
    j = {{"policy", c.policy},
         {"discriminator", c.discriminator},
         {"classifier", c.classifier},
         {"gail", c.gail},
         {"em", c.em}};
}

void from_json(const nlohmann::json& j, TrainingConfig& c) {
    c.policy = j.at("policy").get<PolicyConfig>();
    c.discriminator = j.at("discriminator").get<DiscriminatorConfig>();
    c.classifier = j.at("classifier").get<ClassifierConfig>();
    c.gail = j.at("gail").get<GailConfig>();
    c.em = j.at("em").get<EmConfig>();
}

void to_json(nlohmann::json& j, const IterationRecord& r) {
    j = {{"iteration", r.iteration},
         {"sizes", r.sizes},
         {"mean_log_prob", r.mean_log_prob},
         {"change_fraction", r.change_fraction},
         {"classifier_loss", r.classifier_loss},
         {"wall_seconds", r.wall_seconds}};
    j["purity"] = r.purity ? nlohmann::json(*r.purity) : nlohmann::json(nullptr);
    j["rand_index"] = r.rand_index ? nlohmann::json(*r.rand_index) : nlohmann::json(nullptr);
}

std::vector<PolicyModel> MixtureState::policies() const {
    std::vector<PolicyModel> out;
    out.reserve(agents.size());
    for (const auto& a : agents) out.push_back(a.policy);
    return out;
}

MixtureState init_state(const TrainingConfig& config, Rng& rng) {
    config.validate();
    MixtureState state;
    for (int k = 0; k < config.em.clusters; ++k) {
        state.agents.push_back(make_agent(config.policy, config.discriminator, config.gail, rng));
    }
    state.classifier = ClassifierModel(config.em.clusters, config.classifier, rng);
    state.classifier_optimizer = nn::Optimizer(config.classifier.optimizer);
    return state;
}

std::vector<std::vector<std::size_t>> members(std::span<const int> assignment, int clusters) {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(clusters));
    for (std::size_t j = 0; j < assignment.size(); ++j) {
        const int k = assignment[j];
        if (k < 0 || k >= clusters) throw std::invalid_argument("members: assignment out of range");
        out[static_cast<std::size_t>(k)].push_back(j);
    }
    return out;
}

EStepResult e_step(MixtureState& state, std::span<const EventSequence* const> data, const TrainingConfig& config,
                   Rng& rng) {
    const int N = state.clusters();
    if (data.empty()) throw std::invalid_argument("e_step: empty dataset");
    if (state.assignment.size() != data.size()) throw std::invalid_argument("e_step: assignment/data size mismatch");
    const double horizon = data.front()->horizon;

    // Cluster sizes only, so the draw does not depend on the data order.
    std::vector<std::size_t> sizes(static_cast<std::size_t>(N), 0);
    for (int k : state.assignment) ++sizes[static_cast<std::size_t>(k)];

    const std::size_t m = config.em.classifier_samples;
    std::vector<EventSequence> samples;
    std::vector<int> labels;
    samples.reserve(m);
    labels.reserve(m);
    std::vector<std::size_t> drawn(static_cast<std::size_t>(N), 0);
    std::vector<std::size_t> nonempty(static_cast<std::size_t>(N), 0);
    for (std::size_t s = 0; s < m; ++s) {
        std::size_t r = rng.below(data.size());
        int k = 0;
        while (r >= sizes[static_cast<std::size_t>(k)]) r -= sizes[static_cast<std::size_t>(k++)];
        samples.push_back(state.agents[static_cast<std::size_t>(k)].policy.rollout(horizon, rng).sequence);
        labels.push_back(k);
        ++drawn[static_cast<std::size_t>(k)];
        if (!samples.back().empty()) ++nonempty[static_cast<std::size_t>(k)];
    }

    EStepResult out;
    for (int k = 0; k < N; ++k) {
        if (drawn[static_cast<std::size_t>(k)] > 0 && nonempty[static_cast<std::size_t>(k)] == 0) {
            out.silent_policies.push_back(k);
        }
    }
    out.drawn = drawn;
    out.classifier_loss = train_classifier(state.classifier, state.classifier_optimizer, samples, labels, rng);
    out.posterior.resize(static_cast<Eigen::Index>(data.size()), N);
    out.assignment.resize(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const nn::Vec p = state.classifier.probabilities(*data[j]);
        out.posterior.row(static_cast<Eigen::Index>(j)) = p.transpose();
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < p.size(); ++k) {
            if (p[k] > p[best]) best = k;
        }
        out.assignment[j] = static_cast<int>(best);
    }
    return out;
}

std::vector<std::vector<std::size_t>> augment(std::span<const int> assignment, const nn::Mat& posterior,
                                              const AugmentSchedule& schedule, std::size_t iteration,
                                              std::size_t min_per_cluster) {
    const int N = static_cast<int>(posterior.cols());
    if (static_cast<std::size_t>(posterior.rows()) != assignment.size()) {
        throw std::invalid_argument("augment: posterior/assignment size mismatch");
    }
    auto sets = members(assignment, N);
    const double f = schedule.fraction(iteration);
    for (int k = 0; k < N; ++k) {
        auto& own = sets[static_cast<std::size_t>(k)];
        const std::size_t outside = assignment.size() - own.size();
        auto borrow = static_cast<std::size_t>(std::floor(f * static_cast<double>(outside)));
        if (own.empty()) borrow = std::max(borrow, min_per_cluster);
        borrow = std::min(borrow, outside);
        if (borrow == 0) continue;
        std::vector<std::size_t> candidates;
        candidates.reserve(outside);
        for (std::size_t j = 0; j < assignment.size(); ++j) {
            if (assignment[j] != k) candidates.push_back(j);
        }
        std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
            return posterior(static_cast<Eigen::Index>(a), k) > posterior(static_cast<Eigen::Index>(b), k);
        });
        own.insert(own.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(borrow));
        std::sort(own.begin(), own.end());
    }
    return sets;
}

void m_step(MixtureState& state, std::span<const EventSequence* const> data,
            const std::vector<std::vector<std::size_t>>& training_sets, const GailConfig& gail, std::uint64_t seed,
            std::size_t workers, std::ostream* log) {
    const auto N = static_cast<std::size_t>(state.clusters());
    if (training_sets.size() != N) throw std::invalid_argument("m_step: one training set per cluster required");
    std::vector<std::ostringstream> logs(N);
    auto run = [&](std::size_t k) {
        const auto& set = training_sets[k];
        if (set.empty()) return;
        std::vector<const EventSequence*> subset;
        subset.reserve(set.size());
        for (std::size_t j : set) subset.push_back(data[j]);
        Rng rng(stream_seed(seed, k));
        gail_tpp(state.agents[k], subset, gail, rng, static_cast<int>(k), log != nullptr ? &logs[k] : nullptr);
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1) {
        for (std::size_t k = 0; k < N; ++k) run(k);
    } else {
        for (std::size_t start = 0; start < N; start += workers) {
            std::vector<std::future<void>> jobs;
            for (std::size_t k = start; k < std::min(N, start + workers); ++k) {
                jobs.push_back(std::async(std::launch::async, run, k));
            }
            for (auto& job : jobs) job.get();
        }
    }
    if (log != nullptr) {
        for (auto& l : logs) *log << l.str();
        log->flush();
    }
}

double mean_assigned_log_prob(const MixtureState& state, std::span<const EventSequence* const> data) {
    if (data.empty()) return 0.0;
    if (state.assignment.size() != data.size()) throw std::invalid_argument("log prob: assignment/data size mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
        total += state.agents[static_cast<std::size_t>(state.assignment[j])].policy.log_prob_sequence(*data[j]);
    }
    return total / static_cast<double>(data.size());
}

namespace {

void check_dataset(const Dataset& data, int clusters) {
    if (data.empty()) throw std::invalid_argument("dataset is empty");
    if (data.size() < static_cast<std::size_t>(clusters)) {
        throw std::invalid_argument("dataset has fewer sequences than clusters");
    }
    std::unordered_set<std::int64_t> ids;
    for (const auto& s : data) {
        s.validate();
        if (s.horizon != data.front().horizon) throw std::invalid_argument("sequences have different horizons");
        if (!ids.insert(s.id).second) throw std::invalid_argument("duplicate sequence id " + std::to_string(s.id));
    }
}

double mean_gap_of(std::span<const EventSequence* const> data, std::span<const std::size_t> set) {
    double span = 0.0;
    std::size_t events = 0;
    for (std::size_t j : set) {
        span += data[j]->horizon;
        events += data[j]->size();
    }
    return span / static_cast<double>(std::max<std::size_t>(1, events));
}

void decay_learning_rates(MixtureState& state, double factor) {
    for (auto& agent : state.agents) {
        agent.policy_optimizer.set_learning_rate(agent.policy_optimizer.config().learning_rate * factor);
        agent.disc_optimizer.set_learning_rate(agent.disc_optimizer.config().learning_rate * factor);
    }
    state.classifier_optimizer.set_learning_rate(state.classifier_optimizer.config().learning_rate * factor);
}

}  // namespace

namespace {

RlpmmResult rlpmm_once(const Dataset& data, const TrainingConfig& config, std::uint64_t seed, const RlpmmHooks& hooks) {
    const int N = config.em.clusters;
    check_dataset(data, N);
    const std::size_t M = data.size();
    const bool labeled = has_labels(data);

    // Canonical order by id; `canon[r]` is the dataset position of rank r.
    std::vector<std::size_t> canon(M);
    std::iota(canon.begin(), canon.end(), std::size_t{0});
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
    std::vector<const EventSequence*> ranked(M);
    for (std::size_t r = 0; r < M; ++r) ranked[r] = &data[canon[r]];
    std::vector<const EventSequence*> in_order(M);
    for (std::size_t j = 0; j < M; ++j) in_order[j] = &data[j];

    Rng rng(seed);
    RlpmmResult result;
    auto& state = result.state;
    state = init_state(config, rng);

    std::vector<int> assign(M);   // by rank
    {
        std::vector<std::size_t> order(M);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = M; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t r = 0; r < M; ++r) assign[order[r]] = static_cast<int>(r % static_cast<std::size_t>(N));
    }
    auto publish = [&] {
        state.assignment.assign(M, 0);
        for (std::size_t r = 0; r < M; ++r) state.assignment[canon[r]] = assign[r];
    };
    auto record = [&](std::size_t iteration, double change, double loss, double seconds) {
        publish();
        IterationRecord rec;
        rec.iteration = iteration;
        rec.sizes.assign(static_cast<std::size_t>(N), 0);
        for (int k : assign) ++rec.sizes[static_cast<std::size_t>(k)];
        if (labeled) {
            ClusteringResult cr;
            cr.predicted = state.assignment;
            for (const auto& s : data) cr.truth.push_back(s.label);
            rec.purity = purity(cr);
            rec.rand_index = rand_index(cr);
        }
        rec.mean_log_prob = mean_assigned_log_prob(state, in_order);
        rec.change_fraction = change;
        rec.classifier_loss = loss;
        rec.wall_seconds = seconds;
        state.iteration = iteration;
        result.history.push_back(rec);
        if (hooks.on_iteration) hooks.on_iteration(state, rec);
    };
    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    auto t0 = clock::now();
    auto sets = members(assign, N);
    if (config.em.init_rate_from_data) {
        for (int k = 0; k < N; ++k) {
            state.agents[static_cast<std::size_t>(k)].policy.set_mean_gap(
                mean_gap_of(ranked, sets[static_cast<std::size_t>(k)]));
        }
    }
    GailConfig warmup = config.gail;
    if (config.em.warmup_rounds > 0) warmup.rounds = config.em.warmup_rounds;
    m_step(state, ranked, sets, warmup, stream_seed(seed, 0), config.em.workers, hooks.training_log);
    record(0, 0.0, 0.0, seconds_since(t0));

    // An emptied cluster is refilled with at least m / N borrowed sequences.
    const std::size_t min_borrow =
        (config.em.classifier_samples + static_cast<std::size_t>(N) - 1) / static_cast<std::size_t>(N);
    for (std::size_t it = 1; it <= config.em.max_iterations; ++it) {
        t0 = clock::now();
        state.assignment = assign;   // e_step reads only the cluster sizes
        auto e = e_step(state, ranked, config, rng);
        std::size_t changed = 0;
        for (std::size_t r = 0; r < M; ++r) changed += e.assignment[r] != assign[r] ? 1 : 0;
        const double change = static_cast<double>(changed) / static_cast<double>(M);
        assign = e.assignment;
        if (change < config.em.convergence_threshold) {
            result.converged = true;
            record(it, change, e.classifier_loss, seconds_since(t0));
            break;
        }
        sets = augment(assign, e.posterior, config.em.augment, it - 1, min_borrow);
        m_step(state, ranked, sets, config.gail, stream_seed(seed, it), config.em.workers, hooks.training_log);
        record(it, change, e.classifier_loss, seconds_since(t0));
        if (config.em.lr_decay != 1.0) decay_learning_rates(state, config.em.lr_decay);
    }
    publish();
    return result;
}

}  // namespace

RlpmmResult rlpmm(const Dataset& data, const TrainingConfig& config, std::uint64_t seed, const RlpmmHooks& hooks) {
    config.validate();
    const std::size_t restarts = config.em.restarts;
    if (restarts <= 1) {
        auto result = rlpmm_once(data, config, seed, hooks);
        result.restart_scores = {result.history.back().mean_log_prob};
        return result;
    }
    // Hooks see only the selected run, so buffer each run's callbacks.
    struct Buffered {
        RlpmmResult result;
        std::vector<std::pair<MixtureState, IterationRecord>> snapshots;
        std::ostringstream log;
    };
    std::vector<double> scores;
    std::unique_ptr<Buffered> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto run = std::make_unique<Buffered>();
        RlpmmHooks local;
        if (hooks.on_iteration) {
            local.on_iteration = [&](const MixtureState& s, const IterationRecord& rec) { run->snapshots.emplace_back(s, rec); };
        }
        if (hooks.training_log != nullptr) local.training_log = &run->log;
        run->result = rlpmm_once(data, config, r == 0 ? seed : stream_seed(seed, kRestartStream + r), local);
        run->result.restart = r;
        const double score = run->result.history.back().mean_log_prob;
        scores.push_back(score);
        // strict comparison keeps the earliest restart on ties
        if (!best || score > best->result.history.back().mean_log_prob) best = std::move(run);
    }
    if (hooks.training_log != nullptr) *hooks.training_log << best->log.str();
    if (hooks.on_iteration) {
        for (const auto& [s, rec] : best->snapshots) hooks.on_iteration(s, rec);
    }
    best->result.restart_scores = std::move(scores);
    return std::move(best->result);
}

double classifier_holdout_accuracy(const MixtureState& state, double horizon, std::size_t per_cluster, Rng& rng) {
    std::size_t hits = 0;
    std::size_t total = 0;
    for (int k = 0; k < state.clusters(); ++k) {
        for (std::size_t s = 0; s < per_cluster; ++s) {
            const auto seq = state.agents[static_cast<std::size_t>(k)].policy.rollout(horizon, rng).sequence;
            hits += state.classifier.predict(seq) == k ? 1 : 0;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

ClusteringRunner make_mixture_runner(const Dataset& data, const TrainingConfig& config) {
    return [&data, config](std::span<const std::size_t> train, std::span<const std::size_t> test,
                           std::uint64_t seed) {
        Dataset fold;
        fold.reserve(train.size());
        for (std::size_t j : train) fold.push_back(data[j]);
        const auto fit = rlpmm(fold, config, seed);
        std::vector<int> labels;
        labels.reserve(test.size());
        for (std::size_t j : test) labels.push_back(fit.state.classifier.predict(data[j]));
        return labels;
    };
}

}  // namespace tppmix
