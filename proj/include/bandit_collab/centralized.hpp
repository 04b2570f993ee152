#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "arm_models.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace bandit_collab {

// ---------------------------------------------------------------------------
// Successive elimination (fixed confidence)
// ---------------------------------------------------------------------------

enum class SeKind { BestArm, BudgetExhausted };

struct SeResult {
    SeKind kind = SeKind::BudgetExhausted;
    std::optional<std::size_t> arm;  // set iff kind == BestArm
    std::uint64_t pulls_used = 0;
};

/// Anytime confidence radius after t pulls of each of n arms:
/// sqrt(ln(4 n t^2 / delta) / (2 t)).
inline double se_radius(std::uint64_t t, double delta, std::size_t n) {
    const double td = static_cast<double>(t);
    return std::sqrt(std::log(4.0 * static_cast<double>(n) * td * td / delta) / (2.0 * td));
}

/// State of one elimination epoch, reported after the epoch's pulls and
/// before its eliminations.
struct SeEpoch {
    std::uint64_t t = 0;
    double radius = 0.0;
    std::size_t leader = 0;
    std::vector<std::size_t> active;
    std::vector<double> empirical;  // parallel to active
    std::vector<std::size_t> eliminated;
};

using SeObserver = std::function<void(const SeEpoch&)>;

/// Successive elimination over `arms`.
///
/// Each epoch pulls every active arm once; an arm is dropped when its
/// empirical mean trails the empirical leader by more than twice the radius.
/// `sample(arm)` returns a reward in {0,1}. With a cap, the run stops before
/// the first pull that would exceed it.
template <class Sampler>
SeResult successive_elimination(std::span<const std::size_t> arms, Sampler&& sample, double delta,
                                std::optional<std::uint64_t> cap = std::nullopt,
                                const SeObserver& observer = {}) {
    if (arms.empty()) throw usage_error("successive elimination needs a non-empty arm set");
    if (!(delta > 0.0 && delta < 1.0)) throw usage_error("successive elimination delta must lie in (0,1)");

    SeResult result;
    if (arms.size() == 1) {
        result.kind = SeKind::BestArm;
        result.arm = arms.front();
        return result;
    }

    std::vector<std::size_t> active(arms.begin(), arms.end());
    std::sort(active.begin(), active.end());
    std::vector<std::uint64_t> sums(active.size(), 0);
    const std::size_t n = active.size();

    for (std::uint64_t t = 1;; ++t) {
        for (std::size_t k = 0; k < active.size(); ++k) {
            if (cap && result.pulls_used >= *cap) return result;
            sums[k] += static_cast<std::uint64_t>(sample(active[k]));
            ++result.pulls_used;
        }
        // All active arms have exactly t pulls, so sums order like means.
        std::size_t lead = 0;
        for (std::size_t k = 1; k < active.size(); ++k)
            if (sums[k] > sums[lead]) lead = k;
        const double radius = se_radius(t, delta, n);
        const double td = static_cast<double>(t);
        const double leader_mean = static_cast<double>(sums[lead]) / td;

        SeEpoch epoch;
        if (observer) {
            epoch.t = t;
            epoch.radius = radius;
            epoch.leader = active[lead];
            epoch.active = active;
            for (auto s : sums) epoch.empirical.push_back(static_cast<double>(s) / td);
        }

        std::size_t keep = 0;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const double m = static_cast<double>(sums[k]) / td;
            if (leader_mean - m > 2.0 * radius) {
                if (observer) epoch.eliminated.push_back(active[k]);
                continue;
            }
            active[keep] = active[k];
            sums[keep] = sums[k];
            ++keep;
        }
        active.resize(keep);
        sums.resize(keep);
        if (observer) observer(epoch);

        if (active.size() == 1) {
            result.kind = SeKind::BestArm;
            result.arm = active.front();
            return result;
        }
    }
}

inline SeResult successive_elimination(const Instance& instance, std::span<const std::size_t> arms, double delta,
                                       std::optional<std::uint64_t> cap, SeededRng& rng,
                                       const SeObserver& observer = {}) {
    return successive_elimination(
        arms, [&](std::size_t arm) { return pull(instance, arm, rng); }, delta, cap, observer);
}

inline std::vector<std::size_t> all_arms(const Instance& instance) {
    std::vector<std::size_t> arms(instance.size());
    for (std::size_t i = 0; i < arms.size(); ++i) arms[i] = i;
    return arms;
}

// ---------------------------------------------------------------------------
// Cost function f_C for successive elimination
// ---------------------------------------------------------------------------

struct CostFunctionEstimate {
    std::vector<double> inverse_gaps;  // 1/Delta_i for the suboptimal arms, in arm order
    double delta = 0.0;
    double bound = 0.0;  // pulls
};

/// Smallest epoch t with 2 r(t, delta, n) < gap.
inline std::uint64_t se_separation_epoch(double gap_value, double delta, std::size_t n) {
    if (!(gap_value > 0.0)) throw usage_error("separation epoch needs a positive gap");
    auto separated = [&](std::uint64_t t) { return 2.0 * se_radius(t, delta, n) < gap_value; };
    std::uint64_t hi = 1;
    while (!separated(hi)) hi *= 2;
    std::uint64_t lo = hi / 2;  // not separated (or 0)
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (separated(mid) ? hi : lo) = mid;
    }
    return hi;
}

/// f_C(S, delta): sum over suboptimal arms in S of the epoch at which the
/// radius schedule separates that arm's gap. Non-decreasing in every
/// inverse gap for a fixed |S|.
inline CostFunctionEstimate se_cost_bound(const Instance& instance, std::span<const std::size_t> arms, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw usage_error("cost bound delta must lie in (0,1)");
    CostFunctionEstimate est;
    est.delta = delta;
    if (arms.size() <= 1) return est;
    std::size_t best = arms.front();
    for (std::size_t a : arms)
        if (instance.mean(a) > instance.mean(best)) best = a;
    std::vector<std::size_t> sorted(arms.begin(), arms.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t a : sorted) {
        if (a == best) continue;
        const double d = instance.mean(best) - instance.mean(a);
        if (d <= 0.0) throw usage_error("arm subset has a tied maximum mean");
        est.inverse_gaps.push_back(1.0 / d);
        est.bound += static_cast<double>(se_separation_epoch(d, delta, arms.size()));
    }
    return est;
}

inline CostFunctionEstimate se_cost_bound(const Instance& instance, double delta) {
    const auto arms = all_arms(instance);
    return se_cost_bound(instance, arms, delta);
}

// ---------------------------------------------------------------------------
// Successive rejects (fixed budget)
// ---------------------------------------------------------------------------

/// log-bar(n) = 1/2 + sum_{i=2}^n 1/i.
inline double log_bar(std::size_t n) {
    double v = 0.5;
    for (std::size_t i = 2; i <= n; ++i) v += 1.0 / static_cast<double>(i);
    return v;
}

/// Cumulative per-arm pull targets n_1..n_{n-1} for budget W.
inline std::vector<std::uint64_t> successive_rejects_schedule(std::size_t n, std::uint64_t budget) {
    std::vector<std::uint64_t> targets;
    if (n < 2) return targets;
    const double lb = log_bar(n);
    for (std::size_t k = 1; k < n; ++k)
        targets.push_back(static_cast<std::uint64_t>(
            std::floor(static_cast<double>(budget) / (lb * static_cast<double>(n + 1 - k)))));
    return targets;
}

/// Error bound n^2 exp(-W / (2 logbar(n) H)) for successive rejects.
inline double fixed_budget_error_bound(std::size_t n, double H, double budget) {
    const double nn = static_cast<double>(n);
    return nn * nn * std::exp(-budget / (2.0 * log_bar(n) * H));
}

struct SrResult {
    std::size_t arm = 0;
    std::uint64_t pulls_used = 0;
    std::vector<std::size_t> rejected;  // in rejection order
};

/// Successive rejects with budget W over `arms`: n-1 phases, each topping
/// every surviving arm up to the phase target and rejecting the empirically
/// worst (ties reject the highest index).
template <class Sampler>
SrResult successive_rejects(std::span<const std::size_t> arms, std::uint64_t budget, Sampler&& sample) {
    if (arms.size() < 2) throw usage_error("successive rejects needs at least two arms");
    if (budget < arms.size()) throw usage_error("successive rejects budget W must be at least the number of arms");

    std::vector<std::size_t> active(arms.begin(), arms.end());
    std::sort(active.begin(), active.end());
    std::vector<std::uint64_t> sums(active.size(), 0);
    std::uint64_t pulled_each = 0;
    SrResult result;

    for (std::uint64_t target : successive_rejects_schedule(active.size(), budget)) {
        for (std::size_t k = 0; k < active.size(); ++k)
            for (std::uint64_t j = pulled_each; j < target; ++j) sums[k] += static_cast<std::uint64_t>(sample(active[k]));
        if (target > pulled_each) {
            result.pulls_used += (target - pulled_each) * active.size();
            pulled_each = target;
        }
        std::size_t worst = 0;
        for (std::size_t k = 1; k < active.size(); ++k)
            if (sums[k] <= sums[worst]) worst = k;
        result.rejected.push_back(active[worst]);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
        sums.erase(sums.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    result.arm = active.front();
    return result;
}

inline SrResult successive_rejects(const Instance& instance, std::span<const std::size_t> arms, std::uint64_t budget,
                                   SeededRng& rng) {
    return successive_rejects(arms, budget, [&](std::size_t arm) { return pull(instance, arm, rng); });
}

inline SrResult successive_rejects(const Instance& instance, std::uint64_t budget, SeededRng& rng) {
    const auto arms = all_arms(instance);
    return successive_rejects(instance, arms, budget, rng);
}

}  // namespace bandit_collab
