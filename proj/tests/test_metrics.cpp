#include "doctest.h"

#include "tppmix/metrics.hpp"
#include "tppmix/rng.hpp"

#include <algorithm>
#include <numeric>

using namespace tppmix;

namespace {

double brute_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    double agree = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            agree += ((a[i] == a[j]) == (b[i] == b[j])) ? 1.0 : 0.0;
            pairs += 1.0;
        }
    }
    return agree / pairs;
}

double brute_purity(const std::vector<int>& pred, const std::vector<int>& truth) {
    const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    double total = 0.0;
    for (int k = 0; k < kp; ++k) {
        int best = 0;
        for (int c = 0; c < kt; ++c) {
            int n = 0;
            for (std::size_t j = 0; j < pred.size(); ++j) n += (pred[j] == k && truth[j] == c) ? 1 : 0;
            best = std::max(best, n);
        }
        total += best;
    }
    return total / static_cast<double>(pred.size());
}

Dataset poisson(double rate, std::size_t n, double T, std::uint64_t seed) {
    return generate_dataset({IntensitySpec::hawkes(rate, 0.0, 1.0)}, n, T, seed);
}

}  // namespace

TEST_CASE("purity examples") {
    CHECK(purity({{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 1, 1, 1, 1, 1, 0}}) == doctest::Approx(0.8));
    CHECK(purity({{0, 0, 0, 0}, {0, 0, 1, 1}}) == doctest::Approx(0.5));
    CHECK(purity({{1, 1, 0, 0}, {0, 0, 1, 1}}) == doctest::Approx(1.0));
}

TEST_CASE("rand index examples") {
    CHECK(rand_index({{0, 0, 1, 1}, {0, 1, 0, 1}}) == doctest::Approx(2.0 / 6.0));
    CHECK(rand_index({{0, 0, 0, 0}, {0, 0, 1, 1}}) == doctest::Approx(2.0 / 6.0));
    CHECK(rand_index({{0, 0, 1}, {0, 1, 1}}) == doctest::Approx(1.0 / 3.0));
    CHECK(rand_index({{0, 1, 2, 3}, {0, 1, 2, 3}}) == doctest::Approx(1.0));
    // one of two pairs disagrees
    CHECK(rand_index({{0, 0, 1}, {0, 0, 0}}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("metrics agree with brute-force oracles") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform(0.0, 40.0));
        const int k = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
        std::vector<int> a(n), b(n);
        for (std::size_t j = 0; j < n; ++j) {
            a[j] = static_cast<int>(rng.uniform(0.0, k));
            b[j] = static_cast<int>(rng.uniform(0.0, k));
        }
        CAPTURE(trial);
        CHECK(rand_index({a, b}) == doctest::Approx(brute_rand_index(a, b)).epsilon(1e-12));
        CHECK(purity({a, b}) == doctest::Approx(brute_purity(a, b)).epsilon(1e-12));
        // relabelling the prediction leaves both metrics alone
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        std::reverse(perm.begin(), perm.end());
        std::vector<int> a2(n);
        for (std::size_t j = 0; j < n; ++j) a2[j] = perm[static_cast<std::size_t>(a[j])];
        CHECK(rand_index({a2, b}) == doctest::Approx(rand_index({a, b})));
        CHECK(purity({a2, b}) == doctest::Approx(purity({a, b})));
        CHECK(rand_index({a, b}) == doctest::Approx(rand_index({b, a})));
    }
}

TEST_CASE("clustering metrics reject malformed input") {
    CHECK_THROWS_AS(purity({{0, 1}, {0}}), std::invalid_argument);
    CHECK_THROWS_AS(purity({{}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(purity({{0, -1}, {0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(rand_index({{0}, {0}}), std::invalid_argument);
    CHECK_THROWS_AS(rand_index({{0, 1}, {}}), std::invalid_argument);
}

TEST_CASE("eid") {
    const auto a = poisson(0.1, 2000, 100.0, 32);
    SUBCASE("identical sets give zero") { CHECK(eid(a, a, 5.0) == 0.0); }
    SUBCASE("symmetric") {
        const auto b = poisson(0.3, 300, 100.0, 33);
        CHECK(eid(a, b, 5.0) == doctest::Approx(eid(b, a, 5.0)).epsilon(1e-14));
    }
    SUBCASE("rate 0.1 against 0.2 over 100 time units") {
        const auto b = poisson(0.2, 2000, 100.0, 34);
        CHECK(std::abs(eid(a, b, 5.0) - 10.0) < 1.0);
    }
    SUBCASE("hand-built intensities") {
        EmpiricalIntensity x{2.0, {1.0, 3.0}, {0.5, 1.0}};
        EmpiricalIntensity y{2.0, {1.0, 3.0}, {1.0, 0.0}};
        CHECK(eid(x, y) == doctest::Approx(0.5 * 2.0 + 1.0 * 2.0));
        EmpiricalIntensity z{1.0, {0.5}, {1.0}};
        CHECK_THROWS_AS(eid(x, z), std::invalid_argument);
    }
}

TEST_CASE("greedy matching") {
    SUBCASE("takes the smallest entry first") {
        const auto m = greedy_match({{1.0, 5.0}, {0.5, 4.0}});
        CHECK(m.policy_for_class == std::vector<int>{1, 0});
        CHECK(m.per_class == std::vector<double>{5.0, 0.5});
        CHECK(m.mean == doctest::Approx(2.75));
    }
    SUBCASE("swapping policies swaps the match") {
        const std::vector<std::vector<double>> m1{{0.2, 3.0, 2.0}, {1.0, 0.1, 4.0}, {2.5, 2.0, 0.3}};
        std::vector<std::vector<double>> m2 = m1;
        for (auto& row : m2) std::swap(row[0], row[2]);
        const auto a = greedy_match(m1);
        const auto b = greedy_match(m2);
        CHECK(a.mean == doctest::Approx(b.mean));
        CHECK(a.policy_for_class == std::vector<int>{0, 1, 2});
        CHECK(b.policy_for_class == std::vector<int>{2, 1, 0});
    }
}

TEST_CASE("matched eid of a Poisson policy") {
    PolicyConfig c;
    c.hidden_dim = 4;
    Rng rng(35);
    PolicyModel p(c, rng);
    p.freeze_rate_to_bias();
    p.set_mean_gap(10.0);
    auto data = poisson(0.1, 400, 100.0, 36);
    const std::vector<PolicyModel> ps{p};
    const auto m = matched_eid(ps, data, 5.0, 400, 37);
    CHECK(m.policy_for_class == std::vector<int>{0});
    CHECK(m.mean < 2.0);
    CHECK(matched_eid(ps, data, 5.0, 400, 37).mean == m.mean);
}

TEST_CASE("clustering consistency") {
    const std::size_t M = 60;
    SUBCASE("a runner that puts everything together scores one") {
        const ClusteringRunner one = [](std::span<const std::size_t>, std::span<const std::size_t> test,
                                        std::uint64_t) { return std::vector<int>(test.size(), 0); };
        const auto r = clustering_consistency(one, M, {5, 0.5, 38, 1});
        CHECK(r.value == 1.0);
        CHECK(r.per_trial.size() == 5);
    }
    SUBCASE("a fixed labelling is consistent") {
        const ClusteringRunner fixed = [](std::span<const std::size_t>, std::span<const std::size_t> test,
                                          std::uint64_t) {
            std::vector<int> out;
            for (std::size_t j : test) out.push_back(static_cast<int>(j % 3));
            return out;
        };
        CHECK(clustering_consistency(fixed, M, {2, 0.5, 39, 1}).value == 1.0);
    }
    SUBCASE("random binary labels keep about half of the pairs") {
        const ClusteringRunner coin = [](std::span<const std::size_t>, std::span<const std::size_t> test,
                                         std::uint64_t seed) {
            Rng r(seed);
            std::vector<int> out;
            for (std::size_t i = 0; i < test.size(); ++i) out.push_back(r.uniform(0.0, 1.0) < 0.5 ? 0 : 1);
            return out;
        };
        const auto r = clustering_consistency(coin, 400, {6, 0.5, 40, 1});
        for (double v : r.per_trial) CHECK(std::abs(v - 0.5) < 0.1);
        // worker count is not observable
        const auto r2 = clustering_consistency(coin, 400, {6, 0.5, 40, 2});
        CHECK(r2.per_trial == r.per_trial);
    }
    SUBCASE("bad options") {
        const ClusteringRunner one = [](std::span<const std::size_t>, std::span<const std::size_t> test,
                                        std::uint64_t) { return std::vector<int>(test.size(), 0); };
        CHECK_THROWS_AS(clustering_consistency(one, M, {1, 0.5, 0, 1}), std::invalid_argument);
        CHECK_THROWS_AS(clustering_consistency(one, M, {3, 1.0, 0, 1}), std::invalid_argument);
    }
}
