#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "arm_models.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace bandit_collab {

inline constexpr std::size_t kOracleMaxPulls = 24;

/// A two-arm policy whose pulls do not depend on observed rewards:
/// schedule[k] is the arm pulled at step k. The decision is the higher
/// empirical mean, ties to arm 0.
struct FixedSchedulePolicy {
    std::vector<std::size_t> schedule;

    std::uint64_t pulls_of(std::size_t arm) const {
        std::uint64_t n = 0;
        for (auto a : schedule) n += a == arm ? 1 : 0;
        return n;
    }
};

namespace detail {

inline void check_two_arm(const Instance& instance, const FixedSchedulePolicy& policy) {
    if (instance.size() != 2) throw usage_error("fixed-schedule policies need a two-arm instance");
    if (policy.schedule.size() > kOracleMaxPulls)
        throw usage_error("schedule has " + std::to_string(policy.schedule.size()) + " pulls, limit is " +
                          std::to_string(kOracleMaxPulls));
    for (auto a : policy.schedule)
        if (a > 1) throw usage_error("schedule refers to an arm other than 0 and 1");
    if (policy.pulls_of(0) == 0 || policy.pulls_of(1) == 0)
        throw usage_error("schedule must pull each arm at least once");
}

/// Decision from reward sums: compares s0/n0 with s1/n1 exactly.
inline std::size_t schedule_decision(std::uint64_t s0, std::uint64_t n0, std::uint64_t s1, std::uint64_t n1) {
    return s1 * n0 > s0 * n1 ? 1 : 0;
}

inline std::vector<double> binomial_pmf(std::uint64_t n, double p) {
    std::vector<double> pmf(n + 1);
    double choose = 1.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
        pmf[k] = choose * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
        choose = choose * static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
    return pmf;
}

}  // namespace detail

/// Exact probability that the policy names the wrong arm, by summing over
/// every pair of Binomial reward totals.
inline double exact_error_oracle(const Instance& instance, const FixedSchedulePolicy& policy) {
    detail::check_two_arm(instance, policy);
    const std::uint64_t n0 = policy.pulls_of(0);
    const std::uint64_t n1 = policy.pulls_of(1);
    const auto pmf0 = detail::binomial_pmf(n0, instance.mean(0));
    const auto pmf1 = detail::binomial_pmf(n1, instance.mean(1));
    double error = 0.0;
    for (std::uint64_t s0 = 0; s0 <= n0; ++s0)
        for (std::uint64_t s1 = 0; s1 <= n1; ++s1)
            if (detail::schedule_decision(s0, n0, s1, n1) != instance.best()) error += pmf0[s0] * pmf1[s1];
    return error;
}

/// Simulates the policy once.
inline std::size_t run_fixed_schedule(const Instance& instance, const FixedSchedulePolicy& policy, SeededRng& rng) {
    detail::check_two_arm(instance, policy);
    std::uint64_t sums[2] = {0, 0};
    for (auto arm : policy.schedule) sums[arm] += static_cast<std::uint64_t>(pull(instance, arm, rng));
    return detail::schedule_decision(sums[0], policy.pulls_of(0), sums[1], policy.pulls_of(1));
}

}  // namespace bandit_collab
