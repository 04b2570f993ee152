#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <bandit_collab/centralized.hpp>

using namespace bandit_collab;
using Catch::Approx;

namespace {

// Radius written out independently of the library.
double radius(double t, double delta, double n) { return std::sqrt(std::log(4.0 * n * t * t / delta) / (2.0 * t)); }

std::uint64_t first_separating_epoch(double gap, double delta, double n) {
    std::uint64_t t = 1;
    while (!(2.0 * radius(double(t), delta, n) < gap)) ++t;
    return t;
}

}  // namespace

TEST_CASE("SE on a single arm returns it without pulling") {
    SeededRng rng(1);
    const auto inst = Instance::from_means({0.3, 0.9, 0.1});
    const std::vector<std::size_t> arms{2};
    const auto r = successive_elimination(inst, arms, 0.1, std::nullopt, rng);
    REQUIRE(r.kind == SeKind::BestArm);
    REQUIRE(r.arm == 2u);
    REQUIRE(r.pulls_used == 0);
}

TEST_CASE("SE deterministic trace on degenerate rewards") {
    SeededRng rng(1);
    const auto inst = Instance::from_means({1.0, 0.0});
    const auto r = successive_elimination(inst, all_arms(inst), 0.1, std::nullopt, rng);
    const std::uint64_t t_star = first_separating_epoch(1.0, 0.1, 2.0);
    REQUIRE(t_star == 21);
    REQUIRE(r.kind == SeKind::BestArm);
    REQUIRE(r.arm == 0u);
    REQUIRE(r.pulls_used == 2 * t_star);
}

TEST_CASE("SE input errors") {
    SeededRng rng(1);
    const auto inst = Instance::from_means({1.0, 0.0});
    const std::vector<std::size_t> none;
    REQUIRE_THROWS_AS(successive_elimination(inst, none, 0.1, std::nullopt, rng), usage_error);
    REQUIRE_THROWS_AS(successive_elimination(inst, all_arms(inst), 0.0, std::nullopt, rng), usage_error);
}

TEST_CASE("SE cap") {
    const auto inst = Instance::from_means({1.0, 0.0});
    SeededRng rng(1);
    auto r0 = successive_elimination(inst, all_arms(inst), 0.1, std::uint64_t{0}, rng);
    REQUIRE(r0.kind == SeKind::BudgetExhausted);
    REQUIRE_FALSE(r0.arm);
    REQUIRE(r0.pulls_used == 0);

    auto r_short = successive_elimination(inst, all_arms(inst), 0.1, std::uint64_t{41}, rng);
    REQUIRE(r_short.kind == SeKind::BudgetExhausted);
    REQUIRE(r_short.pulls_used == 41);

    auto r_exact = successive_elimination(inst, all_arms(inst), 0.1, std::uint64_t{42}, rng);
    REQUIRE(r_exact.kind == SeKind::BestArm);
    REQUIRE(r_exact.pulls_used == 42);
}

TEST_CASE("SE cap property on random instances") {
    SeededRng gen(77);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + gen.uniform_below(6);
        std::vector<double> means(n);
        for (auto& m : means) m = gen.uniform01();
        const auto inst = Instance::from_means(means);
        const std::uint64_t cap = gen.uniform_below(400);
        SeededRng rng(trial);
        const auto r = successive_elimination(inst, all_arms(inst), 0.05, cap, rng);
        REQUIRE(r.pulls_used <= cap);
        SeededRng again(trial);
        const auto full = successive_elimination(inst, all_arms(inst), 0.05, std::uint64_t{200000}, again);
        // Same stream: the capped run is a prefix of the longer one.
        if (full.pulls_used <= cap) {
            REQUIRE(r.kind == SeKind::BestArm);
            REQUIRE(r.arm == full.arm);
        } else {
            REQUIRE(r.kind == SeKind::BudgetExhausted);
        }
    }
}

TEST_CASE("SE never eliminates an arm within one radius of the leader") {
    SeededRng gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + gen.uniform_below(5);
        std::vector<double> means(n);
        for (auto& m : means) m = 0.3 + 0.4 * gen.uniform01();
        const auto inst = Instance::from_means(means);
        SeededRng rng(trial + 1000);
        std::size_t epochs = 0;
        auto r = successive_elimination(
            inst, all_arms(inst), 0.1, std::uint64_t{20000}, rng, [&](const SeEpoch& e) {
                ++epochs;
                double lead = 0.0;
                for (double m : e.empirical) lead = std::max(lead, m);
                for (std::size_t k = 0; k < e.active.size(); ++k) {
                    const bool dropped =
                        std::find(e.eliminated.begin(), e.eliminated.end(), e.active[k]) != e.eliminated.end();
                    if (lead - e.empirical[k] <= e.radius) REQUIRE_FALSE(dropped);
                    REQUIRE(dropped == (lead - e.empirical[k] > 2.0 * e.radius));
                }
                REQUIRE(e.radius == Approx(radius(double(e.t), 0.1, double(n))));
            });
        REQUIRE(epochs > 0);
        REQUIRE(r.pulls_used <= 20000);
    }
}

TEST_CASE("SE is reproducible under a fixed seed") {
    const auto inst = Instance::from_means({0.5, 0.45, 0.3, 0.48});
    SeededRng a(99), b(99);
    const auto ra = successive_elimination(inst, all_arms(inst), 0.05, std::nullopt, a);
    const auto rb = successive_elimination(inst, all_arms(inst), 0.05, std::nullopt, b);
    REQUIRE(ra.arm == rb.arm);
    REQUIRE(ra.pulls_used == rb.pulls_used);
}

TEST_CASE("SE error on a two-arm instance stays below delta") {
    const auto inst = Instance::from_means({0.6, 0.4});
    const int trials = 2000;
    int wrong = 0;
    for (int t = 0; t < trials; ++t) {
        SeededRng rng(123, t);
        wrong += successive_elimination(inst, all_arms(inst), 0.05, std::nullopt, rng).arm != 0u;
    }
    const double sigma = std::sqrt(0.05 * 0.95 / trials);
    REQUIRE(wrong / double(trials) <= 0.05 + 3 * sigma);
}

TEST_CASE("cost bound examples") {
    REQUIRE(se_cost_bound(Instance::from_means({0.7}), 0.1).bound == 0.0);
    // One suboptimal arm with gap 0.5: the first epoch with 2r < 0.5, found by a linear scan.
    const auto est = se_cost_bound(Instance::from_means({0.75, 0.25}), 0.1);
    REQUIRE(est.bound == double(first_separating_epoch(0.5, 0.1, 2.0)));
    REQUIRE(est.bound == 111.0);
    REQUIRE(est.inverse_gaps.size() == 1);
    REQUIRE(est.inverse_gaps[0] == Approx(2.0));
    REQUIRE(se_separation_epoch(1.0, 0.1, 2) == 21);
    REQUIRE_THROWS_AS(se_separation_epoch(0.0, 0.1, 2), usage_error);
}

TEST_CASE("cost bound matches a linear scan") {
    SeededRng gen(31);
    for (int i = 0; i < 40; ++i) {
        const double gap = 0.05 + 0.9 * gen.uniform01();
        const std::size_t n = 2 + gen.uniform_below(30);
        const double delta = 0.001 + 0.2 * gen.uniform01();
        REQUIRE(se_separation_epoch(gap, delta, n) == first_separating_epoch(gap, delta, double(n)));
    }
}

TEST_CASE("cost bound is monotone in the inverse gaps") {
    SeededRng gen(2024);
    for (int pair = 0; pair < 1000; ++pair) {
        const std::size_t n = 2 + gen.uniform_below(8);
        std::vector<double> lo(n), hi(n);
        lo[0] = hi[0] = 0.9;
        for (std::size_t i = 1; i < n; ++i) {
            const double small_gap = 0.02 + 0.4 * gen.uniform01();
            const double big_gap = small_gap + (0.85 - small_gap) * gen.uniform01();
            hi[i] = 0.9 - small_gap;  // larger inverse gap
            lo[i] = 0.9 - big_gap;
        }
        const double delta = 0.01 + 0.1 * gen.uniform01();
        REQUIRE(se_cost_bound(Instance::from_means(lo), delta).bound <=
                se_cost_bound(Instance::from_means(hi), delta).bound);
    }
}

TEST_CASE("log bar and the rejects schedule") {
    REQUIRE(log_bar(1) == 0.5);
    REQUIRE(log_bar(2) == 1.0);
    REQUIRE(log_bar(4) == Approx(0.5 + 0.5 + 1.0 / 3 + 0.25));
    REQUIRE(successive_rejects_schedule(1, 100).empty());
    REQUIRE(successive_rejects_schedule(2, 11) == std::vector<std::uint64_t>{5});
    const auto s = successive_rejects_schedule(4, 1000);
    REQUIRE(s.size() == 3);
    const double lb = 0.5 + 0.5 + 1.0 / 3 + 0.25;
    for (std::size_t k = 1; k <= 3; ++k) REQUIRE(s[k - 1] == std::uint64_t(std::floor(1000 / (lb * (5 - k)))));
    REQUIRE(fixed_budget_error_bound(8, 175.0, 350.0) == Approx(64 * std::exp(-350.0 / (2 * log_bar(8) * 175.0))));
}

TEST_CASE("successive rejects basics") {
    SeededRng rng(3);
    const auto inst = Instance::from_means({1.0, 0.0});
    const auto r = successive_rejects(inst, 10, rng);
    REQUIRE(r.arm == 0);
    REQUIRE(r.pulls_used == 10);
    REQUIRE(r.rejected == std::vector<std::size_t>{1});

    const auto odd = successive_rejects(inst, 11, rng);
    REQUIRE(odd.pulls_used == 10);  // floor(11/2) pulls each

    REQUIRE_THROWS_AS(successive_rejects(inst, 1, rng), usage_error);
    REQUIRE_THROWS_AS(successive_rejects(Instance::from_means({0.4}), 5, rng), usage_error);
}

TEST_CASE("successive rejects budget and rejection count") {
    SeededRng gen(12);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 2 + gen.uniform_below(10);
        std::vector<double> means(n);
        for (auto& m : means) m = gen.uniform01();
        const auto inst = Instance::from_means(means);
        const std::uint64_t W = n + gen.uniform_below(2000);
        SeededRng rng(i);
        std::vector<std::uint64_t> pulls(n, 0);
        const auto arms = all_arms(inst);
        const auto r = successive_rejects(arms, W, [&](std::size_t a) {
            ++pulls[a];
            return pull(inst, a, rng);
        });
        std::uint64_t total = 0;
        for (auto p : pulls) total += p;
        REQUIRE(total == r.pulls_used);
        REQUIRE(total <= W);
        REQUIRE(r.rejected.size() == n - 1);
        REQUIRE(std::find(r.rejected.begin(), r.rejected.end(), r.arm) == r.rejected.end());
    }
}

TEST_CASE("successive rejects error stays below the evaluated bound") {
    const auto inst = Instance::from_means({0.6, 0.4, 0.4});
    const std::uint64_t W = 3000;
    const int trials = 2000;
    int wrong = 0;
    for (int t = 0; t < trials; ++t) {
        SeededRng rng(55, t);
        wrong += successive_rejects(inst, W, rng).arm != 0;
    }
    const double bound = fixed_budget_error_bound(3, hardness(inst), double(W));
    REQUIRE(wrong / double(trials) <= bound);
}

TEST_CASE("SE pull counts against the cost function") {
    const std::vector<std::vector<double>> cases = {
        {0.6, 0.4}, {0.75, 0.25}, {0.5, 0.45, 0.3, 0.2}, {0.9, 0.8, 0.8, 0.7, 0.1}};
    const double delta = 0.05;
    for (const auto& means : cases) {
        const auto inst = Instance::from_means(means);
        const double fc = se_cost_bound(inst, delta).bound;
        const int trials = 500;
        int within = 0;
        double total = 0.0;
        for (int t = 0; t < trials; ++t) {
            SeededRng rng(606, t);
            const auto r = successive_elimination(inst, all_arms(inst), delta, std::nullopt, rng);
            within += double(r.pulls_used) <= 100.0 * fc;
            total += double(r.pulls_used);
        }
        INFO("f_C = " << fc << ", mean pulls = " << total / trials);
        REQUIRE(within >= (1.0 - delta) * trials);
        REQUIRE(total / trials >= fc);
    }
}
