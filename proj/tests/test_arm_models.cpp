#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <bandit_collab/arm_models.hpp>
#include <bandit_collab/io.hpp>

using namespace bandit_collab;
using Catch::Approx;

TEST_CASE("pull on degenerate arms") {
    SeededRng rng(1);
    const auto one = Instance::from_means({1.0});
    const auto two = Instance::from_means({0.0, 0.5});
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(pull(one, 0, rng) == 1);
        REQUIRE(pull(two, 0, rng) == 0);
    }
}

TEST_CASE("pull rejects out-of-range arms") {
    SeededRng rng(1);
    const auto inst = Instance::from_means({0.5, 0.2});
    REQUIRE_THROWS_AS(pull(inst, 2, rng), usage_error);
}

TEST_CASE("pull sample mean concentrates") {
    SeededRng rng(20240611);
    const auto inst = Instance::from_means({0.5});
    const int n = 1'000'000;
    long sum = 0;
    for (int i = 0; i < n; ++i) sum += pull(inst, 0, rng);
    REQUIRE(std::abs(static_cast<double>(sum) / n - 0.5) <= 0.002);
}

TEST_CASE("pull is reproducible per stream and call index") {
    const auto inst = Instance::from_means({0.3, 0.6, 0.5});
    SeededRng a(5, 11), b(5, 11);
    for (int i = 0; i < 500; ++i) REQUIRE(pull(inst, i % 3, a) == pull(inst, i % 3, b));
}

TEST_CASE("gap") {
    const auto a = Instance::from_means({0.9, 0.5});
    REQUIRE(gap(a, 1) == Approx(0.4));
    const auto b = Instance::from_means({0.8, 0.7, 0.5});
    REQUIRE(gap(b, 2) == Approx(0.3));
    REQUIRE_THROWS_AS(gap(b, 0), usage_error);
    REQUIRE(min_gap(b) == Approx(0.1));
}

TEST_CASE("hardness") {
    REQUIRE(hardness(Instance::from_means({0.9, 0.5})) == Approx(6.25));
    REQUIRE(hardness(one_spike(5, 0.1)) == Approx(400.0));
    REQUIRE(hardness(Instance::from_means({0.8, 0.7, 0.5})) == Approx(100.0 + 1.0 / 0.09));
    REQUIRE(hardness(Instance::from_means({0.4})) == 0.0);

    const auto inst = Instance::from_means({0.8, 0.7, 0.5});
    const std::vector<std::size_t> sub{1, 2};
    REQUIRE(hardness(inst, sub) == Approx(25.0));
    const auto tied = Instance::from_means({0.9, 0.5, 0.5});
    const std::vector<std::size_t> tie{1, 2};
    REQUIRE_THROWS_AS(hardness(tied, tie), usage_error);
}

TEST_CASE("hardness of one-spike is (n-1)/delta^2") {
    for (std::size_t n : {2u, 3u, 17u, 64u})
        for (double d : {0.05, 0.2, 0.25, 0.49})
            REQUIRE(hardness(one_spike(n, d)) == Approx(static_cast<double>(n - 1) / (d * d)).epsilon(1e-12));
}

TEST_CASE("instance validation") {
    REQUIRE_NOTHROW(custom_instance({0.9, 0.1}));
    REQUIRE_THROWS_AS(custom_instance({0.5, 0.5}), usage_error);
    REQUIRE_THROWS_AS(custom_instance({1.2}), usage_error);
    REQUIRE_THROWS_AS(custom_instance({-0.1, 0.3}), usage_error);
    REQUIRE_THROWS_AS(custom_instance({}), usage_error);
    REQUIRE_THROWS_AS(custom_instance({std::nan("")}), usage_error);
    REQUIRE(custom_instance({0.1, 0.7, 0.3}).best() == 1);
}

TEST_CASE("one-spike generator") {
    const auto a = one_spike(3, 0.1);
    REQUIRE(a.mean(0) == Approx(0.5));
    REQUIRE(a.mean(1) == Approx(0.4));
    REQUIRE(a.mean(2) == Approx(0.4));
    const auto b = one_spike(2, 0.25);
    REQUIRE(b.mean(0) == 0.5);
    REQUIRE(b.mean(1) == 0.25);
    REQUIRE(one_spike(4, 0.2, 3).best() == 3);
    REQUIRE_THROWS_AS(one_spike(3, 0.0), usage_error);
    REQUIRE_THROWS_AS(one_spike(3, 0.5), usage_error);
    REQUIRE_THROWS_AS(one_spike(3, -0.1), usage_error);
    REQUIRE_THROWS_AS(one_spike(3, 0.1, 3), usage_error);

    SeededRng rng(4);
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 4000; ++i) ++hits[one_spike(4, 0.1, rng).best()];
    for (int h : hits) REQUIRE(std::abs(h - 1000) < 5 * std::sqrt(4000 * 0.25 * 0.75));
}

TEST_CASE("signid generator") {
    REQUIRE(signid_instance(0.25).mean(0) == 0.75);
    REQUIRE(signid_instance(-0.125).mean(0) == 0.375);
    REQUIRE_THROWS_AS(signid_instance(0.0), usage_error);
}

TEST_CASE("pyramid level probabilities") {
    const PyramidDistribution d23(2, 3);
    REQUIRE(d23.lambda() == Approx(64.0 / 21.0));
    REQUIRE(d23.probabilities()[0] == Approx(16.0 / 21.0));
    REQUIRE(d23.probabilities()[1] == Approx(4.0 / 21.0));
    REQUIRE(d23.probabilities()[2] == Approx(1.0 / 21.0));
    // mean 1/2 - B^{-l}
    REQUIRE(d23.level_mean(1) == Approx(0.0));
    REQUIRE(d23.level_mean(2) == Approx(0.25));
    REQUIRE(d23.level_mean(3) == Approx(0.375));
    REQUIRE_THROWS_AS(d23.level_mean(4), usage_error);

    const PyramidDistribution d22(2, 2);
    REQUIRE(d22.probabilities()[0] == Approx(0.8));
    REQUIRE(d22.probabilities()[1] == Approx(0.2));
    REQUIRE(d22.coupled_arm_count() == Approx(16.0 / (16.0 / 5.0)));

    REQUIRE_THROWS_AS(PyramidDistribution(1, 3), usage_error);
    REQUIRE_THROWS_AS(PyramidDistribution(2, 1), usage_error);
}

namespace {

void check_level_frequencies(std::uint64_t B, std::uint64_t L, int draws, double sigmas) {
    const PyramidDistribution dist(B, L);
    SeededRng rng(B * 1000 + L);
    std::vector<int> counts(L, 0);
    for (int i = 0; i < draws; ++i) ++counts[dist.sample_level(rng) - 1];
    // independent target: lambda B^{-2l}, normalized here from scratch
    std::vector<double> target(L);
    double total = 0.0;
    for (std::uint64_t l = 1; l <= L; ++l) total += target[l - 1] = std::pow(double(B), -2.0 * double(l));
    for (std::uint64_t l = 0; l < L; ++l) {
        const double p = target[l] / total;
        const double sd = std::sqrt(p * (1 - p) / draws);
        INFO("B=" << B << " L=" << L << " level " << l + 1);
        REQUIRE(std::abs(counts[l] / double(draws) - p) <= sigmas * sd + 1e-12);
    }
}

}  // namespace

TEST_CASE("pyramid level frequencies") {
    check_level_frequencies(4, 3, 10'000, 3.0);
    check_level_frequencies(2, 3, 100'000, 5.0);
    check_level_frequencies(3, 4, 100'000, 5.0);
}

TEST_CASE("pyramid instances are valid") {
    SeededRng rng(8);
    for (int i = 0; i < 50; ++i) {
        const auto inst = pyramid({2, 3, 12}, rng);
        REQUIRE(inst.size() == 12);
        for (double m : inst.means()) {
            const bool is_level = m == 0.0 || m == 0.25 || m == 0.375;
            REQUIRE(is_level);
        }
        int at_best = 0;
        for (double m : inst.means()) at_best += m == inst.mean(inst.best());
        REQUIRE(at_best == 1);
    }
    REQUIRE(pyramid({2, 2, 1}, rng).size() == 1);
}

TEST_CASE("pyramid retry budget surfaces as a generator error") {
    // With thousands of arms the top level is almost surely tied.
    SeededRng rng(9);
    REQUIRE_THROWS_AS(pyramid({2, 2, 5000}, rng, 3), generator_error);
}

TEST_CASE("instance JSON round trip") {
    const auto inst = Instance::from_means({0.25, 0.75, 0.5});
    const json j = instance_to_json(inst);
    REQUIRE(j.dump() == R"({"means":[0.25,0.75,0.5],"best":1})");
    REQUIRE(instance_from_json(j) == inst);
    REQUIRE(instance_from_json(json::parse(R"({"means":[0.1,0.2]})")).best() == 1);
    REQUIRE_THROWS_AS(instance_from_json(json::parse(R"({"means":[0.1,0.2],"best":0})")), usage_error);
    REQUIRE_THROWS_AS(instance_from_json(json::parse(R"({"best":0})")), usage_error);
    REQUIRE_THROWS_AS(instance_from_json(json::parse(R"({"means":[0.4,0.4]})")), usage_error);
}
