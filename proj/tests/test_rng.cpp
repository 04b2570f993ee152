#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <set>

#include <bandit_collab/rng.hpp>

using bandit_collab::SeededRng;

TEST_CASE("equal seed and stream give equal sequences") {
    SeededRng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams diverge") {
    SeededRng a(42, 0), b(42, 1), c(43, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        same_ab += x == b.next_u64();
        same_ac += x == c.next_u64();
    }
    REQUIRE(same_ab == 0);
    REQUIRE(same_ac == 0);
}

TEST_CASE("split is a pure function of the parent identity") {
    SeededRng parent(9, 3);
    const SeededRng c1 = parent.split(5);
    parent.next_u64();
    SeededRng c2 = parent.split(5);
    SeededRng c1copy = c1;
    for (int i = 0; i < 100; ++i) REQUIRE(c1copy.next_u64() == c2.next_u64());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t child = 0; child < 1000; ++child) firsts.insert(parent.split(child).next_u64());
    REQUIRE(firsts.size() == 1000);
}

TEST_CASE("uniform01 stays in [0,1) and has the right mean") {
    SeededRng rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // sd of the mean is 1/sqrt(12 n)
    REQUIRE(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("uniform_below covers the range evenly") {
    SeededRng rng(2);
    std::array<int, 7> counts{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.uniform_below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    const double p = 1.0 / 7.0;
    const double sd = std::sqrt(n * p * (1 - p));
    for (int c : counts) REQUIRE(std::abs(c - n * p) < 5 * sd);
    REQUIRE(rng.uniform_below(1) == 0);
}

TEST_CASE("bernoulli edge probabilities are degenerate") {
    SeededRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(rng.bernoulli(1.0));
        REQUIRE_FALSE(rng.bernoulli(0.0));
    }
}
