#include "doctest.h"

#include "tppmix/em.hpp"
#include "tppmix/intensity.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

using namespace tppmix;

namespace {

TrainingConfig small_config(int clusters = 2) {
    TrainingConfig c;
    c.policy.hidden_dim = 6;
    c.policy.cell = nn::CellKind::tanh;
    c.policy.distribution = ActionDistribution::exponential;
    c.policy.encoding.time_scale = 10.0;
    c.discriminator.hidden_dim = 6;
    c.discriminator.cell = nn::CellKind::tanh;
    c.discriminator.encoding.time_scale = 10.0;
    c.classifier.embed_dim = 6;
    c.classifier.hidden_dim = 6;
    c.classifier.cell = nn::CellKind::tanh;
    c.classifier.encoding.time_scale = 10.0;
    c.classifier.epochs = 5;
    c.classifier.optimizer.learning_rate = 3e-3;
    c.gail.rounds = 3;
    c.gail.batch_size = 8;
    c.em.clusters = clusters;
    c.em.classifier_samples = 64;
    c.em.max_iterations = 2;
    c.em.workers = 1;
    return c;
}

// Policies pinned to Poisson rates so that their samples are separable.
void pin_rates(MixtureState& state, const std::vector<double>& rates) {
    for (std::size_t k = 0; k < rates.size(); ++k) {
        auto& p = state.agents[k].policy;
        p.freeze_rate_to_bias();
        p.set_mean_gap(1.0 / rates[k]);
    }
}

Dataset poisson_mixture(const std::vector<double>& rates, std::size_t per, double T, std::uint64_t seed) {
    std::vector<IntensitySpec> specs;
    for (double r : rates) specs.push_back(IntensitySpec::hawkes(r, 0.0, 1.0));
    return generate_dataset(specs, per, T, seed);
}

std::vector<const EventSequence*> pointers(const Dataset& d) {
    std::vector<const EventSequence*> out;
    for (const auto& s : d) out.push_back(&s);
    return out;
}

std::vector<double> flat(MixtureState& s) {
    std::vector<double> out;
    for (auto& a : s.agents) {
        for (auto* p : a.policy.parameters()) out.insert(out.end(), p->value.data(), p->value.data() + p->size());
        for (auto* p : a.discriminator.parameters()) out.insert(out.end(), p->value.data(), p->value.data() + p->size());
    }
    return out;
}

}  // namespace

TEST_CASE("untrained zero-output classifier is uniform") {
    ClassifierConfig c;
    Rng rng(1);
    for (int n : {2, 3, 5}) {
        ClassifierModel m(n, c, rng);
        m.zero_output();
        EventSequence s{0, 10.0, {1.0, 4.0}, -1};
        const auto p = m.probabilities(s);
        for (Eigen::Index k = 0; k < n; ++k) CHECK(p[k] == doctest::Approx(1.0 / n));
        CHECK(m.predict(s) == 0);  // ties go to the lowest index
    }
}

TEST_CASE("e_step") {
    auto config = small_config();
    config.em.classifier_samples = 256;
    config.classifier.epochs = 20;
    const auto data = poisson_mixture({0.1, 1.0}, 60, 30.0, 2);
    const auto ptrs = pointers(data);

    SUBCASE("separable frozen policies relabel a true mixture") {
        Rng rng(3);
        auto state = init_state(config, rng);
        pin_rates(state, {0.1, 1.0});
        state.assignment.assign(data.size(), 0);
        for (std::size_t j = 0; j < data.size(); j += 2) state.assignment[j] = 1;
        const auto e = e_step(state, ptrs, config, rng);
        std::vector<int> truth;
        for (const auto& s : data) truth.push_back(s.label);
        CHECK(purity({e.assignment, truth}) > 0.95);
        // partition validity: every sequence in exactly one cluster
        const auto sets = members(e.assignment, 2);
        CHECK(sets[0].size() + sets[1].size() == data.size());
        Rng hr(4);
        CHECK(classifier_holdout_accuracy(state, 30.0, 100, hr) >= 0.9);
    }
    SUBCASE("an empty cluster contributes no classifier samples") {
        Rng rng(5);
        auto state = init_state(config, rng);
        state.assignment.assign(data.size(), 0);
        const auto e = e_step(state, ptrs, config, rng);
        CHECK(e.drawn[0] == config.em.classifier_samples);
        CHECK(e.drawn[1] == 0);
    }
    SUBCASE("same seed gives the same partition") {
        auto run = [&] {
            Rng rng(6);
            auto state = init_state(config, rng);
            state.assignment.assign(data.size(), 1);
            state.assignment[0] = 0;
            return e_step(state, ptrs, config, rng).assignment;
        };
        CHECK(run() == run());
    }
    SUBCASE("silent policies are reported") {
        Rng rng(7);
        auto state = init_state(config, rng);
        pin_rates(state, {1e-9, 1.0});
        state.assignment.assign(data.size(), 0);
        state.assignment[0] = 1;
        const auto e = e_step(state, ptrs, config, rng);
        CHECK(e.silent_policies == std::vector<int>{0});
    }
}

TEST_CASE("augment") {
    const std::size_t M = 400;
    std::vector<int> assign(M);
    for (std::size_t j = 0; j < M; ++j) assign[j] = j < 150 ? 0 : 1;
    nn::Mat post(M, 2);
    Rng rng(8);
    for (std::size_t j = 0; j < M; ++j) {
        const double p = rng.uniform(0.0, 1.0);
        post(static_cast<Eigen::Index>(j), 0) = p;
        post(static_cast<Eigen::Index>(j), 1) = 1.0 - p;
    }
    SUBCASE("zero fraction leaves the partition unchanged") {
        const auto sets = augment(assign, post, AugmentSchedule{0.0, 0.5}, 0);
        CHECK(sets == members(assign, 2));
    }
    SUBCASE("top fraction of outside sequences") {
        const auto sets = augment(assign, post, AugmentSchedule{0.1, 0.5}, 0);
        CHECK(sets[0].size() - 150 == 25);   // floor(0.1 * 250)
        CHECK(sets[1].size() - 250 == 15);   // floor(0.1 * 150)
        CHECK(sets[0].size() - 150 <= 40);
        CHECK(sets[1].size() - 250 <= 40);
        // borrowed ones are the highest-posterior outsiders
        double min_borrowed = 1.0;
        for (std::size_t j : sets[0]) {
            if (assign[j] != 0) min_borrowed = std::min(min_borrowed, post(static_cast<Eigen::Index>(j), 0));
        }
        std::size_t above = 0;
        for (std::size_t j = 150; j < M; ++j) above += post(static_cast<Eigen::Index>(j), 0) > min_borrowed ? 1 : 0;
        CHECK(above < 25);
    }
    SUBCASE("schedule decays") {
        const AugmentSchedule s{0.2, 0.5};
        CHECK(s.fraction(0) == 0.2);
        CHECK(s.fraction(2) == doctest::Approx(0.05));
        const auto sets = augment(assign, post, s, 1);
        CHECK(sets[0].size() - 150 == 25);   // floor(0.1 * 250)
    }
    SUBCASE("balanced example from the reference setting") {
        std::vector<int> half(M);
        for (std::size_t j = 0; j < M; ++j) half[j] = static_cast<int>(j % 2);
        const auto sets = augment(half, post, AugmentSchedule{0.1, 0.5}, 0);
        for (const auto& s : sets) CHECK(s.size() - 200 <= 40);
    }
    SUBCASE("an empty cluster borrows at least the floor") {
        std::vector<int> all0(M, 0);
        const auto sets = augment(all0, post, AugmentSchedule{0.0, 0.5}, 0, 128);
        CHECK(sets[1].size() == 128);
        CHECK(sets[0].size() == M);
    }
    SUBCASE("ties go to the lower index") {
        nn::Mat flat_post = nn::Mat::Constant(M, 2, 0.5);
        const auto sets = augment(assign, flat_post, AugmentSchedule{0.1, 0.5}, 0);
        std::vector<std::size_t> borrowed;
        for (std::size_t j : sets[0]) {
            if (assign[j] != 0) borrowed.push_back(j);
        }
        std::vector<std::size_t> expected(25);
        std::iota(expected.begin(), expected.end(), std::size_t{150});
        CHECK(borrowed == expected);
    }
}

TEST_CASE("m_step") {
    auto config = small_config();
    const auto data = poisson_mixture({0.2, 0.5}, 10, 20.0, 9);
    const auto ptrs = pointers(data);
    const auto sets = std::vector<std::vector<std::size_t>>{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9, 10}};
    SUBCASE("zero rounds leave the state unchanged") {
        Rng rng(10);
        auto state = init_state(config, rng);
        auto g = config.gail;
        g.rounds = 0;
        const auto before = flat(state);
        m_step(state, ptrs, sets, g, 11, 1);
        CHECK(flat(state) == before);
    }
    SUBCASE("results do not depend on the number of workers") {
        auto run = [&](std::size_t workers) {
            Rng rng(12);
            auto state = init_state(config, rng);
            std::ostringstream log;
            m_step(state, ptrs, sets, config.gail, 13, workers, &log);
            return std::make_pair(flat(state), log.str());
        };
        const auto one = run(1);
        const auto two = run(2);
        CHECK(one.first == two.first);
        CHECK(one.second == two.second);
    }
    SUBCASE("an empty training set leaves that cluster unchanged") {
        Rng rng(14);
        auto state = init_state(config, rng);
        const auto before = state.agents[1].policy.head().bias.value;
        m_step(state, ptrs, {{0, 1}, {}}, config.gail, 15, 1);
        CHECK(state.agents[1].policy.head().bias.value == before);
    }
}

TEST_CASE("m_step on one constant cluster approaches ten events") {
    auto config = small_config();
    config.em.clusters = 2;
    config.policy.hidden_dim = 8;
    config.policy.encoding.include_elapsed = true;
    config.discriminator.encoding = config.policy.encoding;
    config.gail.rounds = 1500;
    config.gail.batch_size = 32;
    config.gail.discount = 0.9;
    config.gail.disc_steps = 3;
    config.gail.policy_optimizer.learning_rate = 1e-3;
    config.gail.disc_optimizer.learning_rate = 1e-3;
    const auto data = generate_dataset({IntensitySpec::constant()}, 200, 100.0, 16);
    const auto ptrs = pointers(data);
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng rng(17);
    auto state = init_state(config, rng);
    state.agents[0].policy.set_mean_gap(3.0);
    m_step(state, ptrs, {all, {}}, config.gail, 18, 1);
    Rng r(19);
    double total = 0.0;
    for (int i = 0; i < 500; ++i) total += static_cast<double>(state.agents[0].policy.rollout(100.0, r).sequence.size());
    CHECK(std::abs(total / 500.0 - 10.0) < 1.5);
}

TEST_CASE("rlpmm") {
    auto config = small_config();
    const auto data = generate_dataset({IntensitySpec::sine(), IntensitySpec::negative_sine()}, 15, 100.0, 20);
    SUBCASE("zero iterations return the warm-started state") {
        config.em.max_iterations = 0;
        const auto r = rlpmm(data, config, 21);
        REQUIRE(r.history.size() == 1);
        CHECK(r.history[0].iteration == 0);
        CHECK(r.state.iteration == 0);
        const auto sizes = r.history[0].sizes;
        CHECK(sizes[0] == 15);
        CHECK(sizes[1] == 15);
    }
    SUBCASE("history and hooks") {
        std::vector<std::size_t> seen;
        RlpmmHooks hooks;
        hooks.on_iteration = [&](const MixtureState& s, const IterationRecord& rec) {
            seen.push_back(rec.iteration);
            CHECK(s.assignment.size() == data.size());
            CHECK(rec.purity.has_value());
        };
        const auto r = rlpmm(data, config, 22, hooks);
        CHECK(seen.front() == 0);
        CHECK(seen.size() == r.history.size());
        CHECK(r.history.size() <= config.em.max_iterations + 1);
    }
    SUBCASE("permuting the dataset order gives the same labels per id") {
        auto shuffled = data;
        std::reverse(shuffled.begin(), shuffled.end());
        std::swap(shuffled[0], shuffled[7]);
        const auto a = rlpmm(data, config, 23);
        const auto b = rlpmm(shuffled, config, 23);
        std::map<std::int64_t, int> la, lb;
        for (std::size_t j = 0; j < data.size(); ++j) {
            la[data[j].id] = a.state.assignment[j];
            lb[shuffled[j].id] = b.state.assignment[j];
        }
        CHECK(la == lb);
        CHECK(a.history.back().purity == b.history.back().purity);
        CHECK(a.history.back().rand_index == b.history.back().rand_index);
        CHECK(a.history.back().mean_log_prob == b.history.back().mean_log_prob);
    }
    SUBCASE("worker count does not change the result") {
        config.em.workers = 1;
        const auto a = rlpmm(data, config, 24);
        config.em.workers = 2;
        const auto b = rlpmm(data, config, 24);
        CHECK(a.state.assignment == b.state.assignment);
        CHECK(a.history.back().mean_log_prob == b.history.back().mean_log_prob);
    }
    SUBCASE("restarts keep the run with the best final log-probability") {
        config.em.max_iterations = 1;
        const auto single = rlpmm(data, config, 27);
        config.em.restarts = 3;
        std::size_t calls = 0;
        std::ostringstream log;
        RlpmmHooks hooks;
        hooks.on_iteration = [&](const MixtureState&, const IterationRecord&) { ++calls; };
        hooks.training_log = &log;
        const auto r = rlpmm(data, config, 27, hooks);
        REQUIRE(r.restart_scores.size() == 3);
        CHECK(r.restart_scores[0] == single.history.back().mean_log_prob);
        CHECK(r.history.back().mean_log_prob == *std::max_element(r.restart_scores.begin(), r.restart_scores.end()));
        CHECK(r.restart_scores[r.restart] == r.history.back().mean_log_prob);
        CHECK(calls == r.history.size());
        CHECK_FALSE(log.str().empty());
        config.em.restarts = 0;
        CHECK_THROWS_AS(rlpmm(data, config, 27), std::invalid_argument);
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(rlpmm({}, config, 1), std::invalid_argument);
        auto dup = data;
        dup[1].id = dup[0].id;
        CHECK_THROWS_AS(rlpmm(dup, config, 1), std::invalid_argument);
        auto c1 = config;
        c1.em.clusters = 1;
        CHECK_THROWS_AS(rlpmm(data, c1, 1), std::invalid_argument);
        auto few = Dataset(data.begin(), data.begin() + 1);
        CHECK_THROWS_AS(rlpmm(few, config, 1), std::invalid_argument);
    }
}

TEST_CASE("mixture runner labels the test fold") {
    auto config = small_config();
    config.em.max_iterations = 1;
    const auto data = generate_dataset({IntensitySpec::sine(), IntensitySpec::negative_sine()}, 10, 100.0, 25);
    const auto runner = make_mixture_runner(data, config);
    std::vector<std::size_t> train(10), test(10);
    std::iota(train.begin(), train.end(), std::size_t{0});
    std::iota(test.begin(), test.end(), std::size_t{10});
    const auto labels = runner(train, test, 26);
    CHECK(labels.size() == 10);
    for (int l : labels) {
        CHECK(l >= 0);
        CHECK(l < 2);
    }
    CHECK(runner(train, test, 26) == labels);
}

TEST_CASE("training configuration") {
    TrainingConfig c;
    c.em.clusters = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainingConfig{};
    c.em.lr_decay = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainingConfig{};
    c.em.convergence_threshold = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainingConfig{};
    nlohmann::json j = c;
    CHECK(j["em"]["classifier_samples"] == 256);
    CHECK(j["em"]["max_iterations"] == 50);
    CHECK(j["em"]["convergence_threshold"] == 0.01);
    CHECK(j["em"]["augment"]["initial_fraction"] == 0.2);
    CHECK(j["em"]["augment"]["decay"] == 0.5);
    CHECK(j["classifier"]["epochs"] == 20);
    CHECK(j["em"]["restarts"] == 1);
    const auto back = j.get<TrainingConfig>();
    CHECK(nlohmann::json(back) == j);
}
