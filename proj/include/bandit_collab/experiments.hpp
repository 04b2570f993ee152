#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "arm_models.hpp"
#include "centralized.hpp"
#include "collab_engine.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace bandit_collab {

// ---------------------------------------------------------------------------
// Error estimates
// ---------------------------------------------------------------------------

/// Two-sided Hoeffding half-width for a mean of `trials` [0,1] variables at
/// the given confidence: sqrt(ln(2 / (1 - confidence)) / (2 trials)).
inline double hoeffding_halfwidth(std::uint64_t trials, double confidence) {
    if (trials == 0) return 1.0;
    return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(trials)));
}

/// Trials needed for a Hoeffding half-width of at most `eps`.
inline std::uint64_t hoeffding_trials(double eps, double confidence) {
    return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / (1.0 - confidence)) / (2.0 * eps * eps)));
}

struct ErrorEstimate {
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double confidence = 0.99;
};

inline ErrorEstimate make_estimate(std::uint64_t trials, std::uint64_t failures, double confidence = 0.99) {
    if (trials == 0) throw usage_error("an error estimate needs at least one trial");
    ErrorEstimate e;
    e.trials = trials;
    e.failures = failures;
    e.confidence = confidence;
    e.rate = static_cast<double>(failures) / static_cast<double>(trials);
    const double hw = hoeffding_halfwidth(trials, confidence);
    e.ci_low = std::max(0.0, e.rate - hw);
    e.ci_high = std::min(1.0, e.rate + hw);
    return e;
}

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

/// Worker count: BANDIT_COLLAB_THREADS if set and positive, else the
/// hardware concurrency.
inline unsigned default_worker_count() {
    if (const char* env = std::getenv("BANDIT_COLLAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs `failed(trial_rng)` for trials 0..trials-1, trial t on stream
/// SeededRng(seed, t), and counts failures. The count does not depend on the
/// worker count.
template <class TrialFn>
std::uint64_t count_failures(std::uint64_t trials, std::uint64_t seed, TrialFn&& failed, unsigned workers = 0) {
    if (workers == 0) workers = default_worker_count();
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(trials, 1)));
    if (workers <= 1) {
        std::uint64_t failures = 0;
        for (std::uint64_t t = 0; t < trials; ++t) failures += failed(SeededRng(seed, t)) ? 1 : 0;
        return failures;
    }
    std::vector<std::uint64_t> partial(workers, 0);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::uint64_t t = w; t < trials; t += workers) partial[w] += failed(SeededRng(seed, t)) ? 1 : 0;
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::uint64_t failures = 0;
    for (auto f : partial) failures += f;
    return failures;
}

// ---------------------------------------------------------------------------
// Algorithm configurations
// ---------------------------------------------------------------------------

/// An algorithm as the harness sees it: instance + stream -> arm or abstain.
using Policy = std::function<std::optional<std::size_t>(const Instance&, const SeededRng&)>;

enum class AlgoKind { SuccessiveElimination, SuccessiveRejects, Basic, ImprovedRRounds, RandomThreshold, Meta };

inline const char* to_string(AlgoKind kind) {
    switch (kind) {
        case AlgoKind::SuccessiveElimination: return "se";
        case AlgoKind::SuccessiveRejects: return "sr";
        case AlgoKind::Basic: return "basic";
        case AlgoKind::ImprovedRRounds: return "improved";
        case AlgoKind::RandomThreshold: return "random-threshold";
        case AlgoKind::Meta: return "meta";
    }
    return "?";
}

inline AlgoKind parse_algo_kind(const std::string& name) {
    for (AlgoKind k : {AlgoKind::SuccessiveElimination, AlgoKind::SuccessiveRejects, AlgoKind::Basic,
                       AlgoKind::ImprovedRRounds, AlgoKind::RandomThreshold, AlgoKind::Meta})
        if (name == to_string(k)) return k;
    throw usage_error("unknown variant '" + name + "'");
}

struct AlgoConfig {
    AlgoKind kind = AlgoKind::Basic;
    std::size_t K = 1;
    std::uint64_t T = 1;  // horizon; budget W for SR; optional cap for SE (0 = none)
    std::size_t R = 1;
    double delta = 0.05;  // SE confidence
    double se_delta = 0.01;  // preparation SE confidence inside collaborative runs
};

inline CollabConfig to_collab(const AlgoConfig& a) {
    CollabConfig c;
    c.K = a.K;
    c.T = a.T;
    c.R = a.R;
    c.se_delta = a.se_delta;
    switch (a.kind) {
        case AlgoKind::Basic: c.variant = Variant::Basic; break;
        case AlgoKind::ImprovedRRounds: c.variant = Variant::ImprovedRRounds; break;
        case AlgoKind::RandomThreshold: c.variant = Variant::RandomThreshold; break;
        case AlgoKind::Meta: c.variant = Variant::Meta; break;
        default: throw usage_error("not a collaborative variant");
    }
    return c;
}

inline Policy make_policy(const AlgoConfig& a) {
    switch (a.kind) {
        case AlgoKind::SuccessiveElimination:
            return [a](const Instance& inst, const SeededRng& rng) -> std::optional<std::size_t> {
                SeededRng r = rng;
                const auto arms = all_arms(inst);
                const auto cap = a.T > 0 ? std::optional<std::uint64_t>(a.T) : std::nullopt;
                return successive_elimination(inst, arms, a.delta, cap, r).arm;
            };
        case AlgoKind::SuccessiveRejects:
            return [a](const Instance& inst, const SeededRng& rng) -> std::optional<std::size_t> {
                if (inst.size() == 1) return 0;
                SeededRng r = rng;
                return successive_rejects(inst, a.T, r).arm;
            };
        default: {
            const CollabConfig c = to_collab(a);
            validate(c);
            return [c](const Instance& inst, const SeededRng& rng) { return run_collab(inst, c, rng).arm; };
        }
    }
}

struct EstimateOptions {
    double confidence = 0.99;
    unsigned workers = 0;  // 0 = default_worker_count()
};

/// Failure = anything other than the best arm, abstaining included.
inline ErrorEstimate estimate_error(const Policy& policy, const Instance& instance, std::uint64_t trials,
                                    std::uint64_t seed, const EstimateOptions& opts = {}) {
    if (trials < 1) throw usage_error("trials must be >= 1");
    const std::uint64_t failures = count_failures(
        trials, seed, [&](const SeededRng& rng) { return policy(instance, rng) != std::optional(instance.best()); },
        opts.workers);
    return make_estimate(trials, failures, opts.confidence);
}

inline ErrorEstimate estimate_error(const AlgoConfig& algo, const Instance& instance, std::uint64_t trials,
                                    std::uint64_t seed, const EstimateOptions& opts = {}) {
    return estimate_error(make_policy(algo), instance, trials, seed, opts);
}

// ---------------------------------------------------------------------------
// Minimal horizon search
// ---------------------------------------------------------------------------

/// Which statistic a tested horizon must bring under the target.
enum class Acceptance { Point, Optimistic /* ci_low */, Pessimistic /* ci_high */ };

struct SearchOptions {
    std::uint64_t floor = 1;
    std::uint64_t ceiling = std::uint64_t{1} << 34;
    Acceptance acceptance = Acceptance::Point;
    std::optional<double> slack;  // allowed ci_high excess over target; default: the CI half-width
    EstimateOptions estimate;
};

struct SearchStep {
    std::uint64_t T = 0;
    ErrorEstimate estimate;
    bool accepted = false;
};

struct SearchResult {
    std::uint64_t T_star = 0;
    std::vector<SearchStep> trace;  // in evaluation order
};

/// Smallest horizon whose estimated error meets `target_err`: doubling from
/// the floor until a horizon is accepted, then bisection. Every horizon is
/// evaluated on the same trial streams.
inline SearchResult min_time_for_error(const std::function<Policy(std::uint64_t)>& family, const Instance& instance,
                                       double target_err, std::uint64_t trials, std::uint64_t seed,
                                       const SearchOptions& opts = {}) {
    if (!(target_err > 0.0 && target_err < 1.0)) throw usage_error("target error must lie in (0,1)");
    if (opts.floor < 1 || opts.floor > opts.ceiling) throw usage_error("search floor must lie in [1, ceiling]");
    SearchResult result;
    const double hw = hoeffding_halfwidth(trials, opts.estimate.confidence);
    const double slack = opts.slack.value_or(hw);
    if (opts.acceptance == Acceptance::Pessimistic && hw >= target_err)
        throw usage_error("pessimistic acceptance needs a CI half-width below the target; use at least " +
                          std::to_string(hoeffding_trials(target_err, opts.estimate.confidence)) + " trials");

    auto accept = [&](std::uint64_t T) {
        const ErrorEstimate e = estimate_error(family(T), instance, trials, seed, opts.estimate);
        bool ok = false;
        switch (opts.acceptance) {
            case Acceptance::Point: ok = e.rate <= target_err && e.ci_high <= target_err + slack; break;
            case Acceptance::Optimistic: ok = e.ci_low <= target_err; break;
            case Acceptance::Pessimistic: ok = e.ci_high <= target_err; break;
        }
        result.trace.push_back({T, e, ok});
        return ok;
    };

    std::uint64_t lo = 0;  // largest rejected horizon (0 = none)
    std::uint64_t hi = opts.floor;
    while (!accept(hi)) {
        lo = hi;
        if (hi >= opts.ceiling) throw search_not_found(opts.ceiling);
        hi = std::min(opts.ceiling, hi * 2);
    }
    if (lo == 0) lo = opts.floor - 1;
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (accept(mid) ? hi : lo) = mid;
    }
    result.T_star = hi;
    return result;
}

// ---------------------------------------------------------------------------
// Speedup table
// ---------------------------------------------------------------------------

struct SpeedupRow {
    std::size_t R = 1;  // rounds
    std::uint64_t T_star = 0;
    std::uint64_t baseline_T = 0;
    double empirical_speedup = 0.0;
    // Band from the optimistic / pessimistic searches (equal to the point
    // value when bands are disabled).
    double speedup_low = 0.0;
    double speedup_high = 0.0;
};

struct SpeedupOptions {
    bool bands = false;
    std::uint64_t ceiling = std::uint64_t{1} << 30;
    double se_delta = 0.01;
    EstimateOptions estimate;
};

/// Collaborative algorithm with exactly `rounds` rounds. One round allows no
/// communication, so it is the centralized baseline on a single agent.
inline Policy rounds_policy(std::size_t K, std::size_t rounds, std::uint64_t T, double se_delta = 0.01) {
    if (rounds < 1) throw usage_error("rounds must be >= 1");
    AlgoConfig a;
    a.K = K;
    a.T = T;
    a.R = rounds;
    a.se_delta = se_delta;
    a.kind = rounds == 1 ? AlgoKind::SuccessiveRejects : AlgoKind::ImprovedRRounds;
    return make_policy(a);
}

inline constexpr std::uint64_t kBaselineSeedTag = 0x5EEDBA5E;

/// Baseline horizon from successive rejects, then the minimal horizon of the
/// R-round collaborative algorithm for each R; speedup = baseline / T_star.
inline std::vector<SpeedupRow> speedup_table(const Instance& instance, std::size_t K, std::vector<std::size_t> R_list,
                                             double target_err, std::uint64_t trials, std::uint64_t seed,
                                             const SpeedupOptions& opts = {}) {
    if (R_list.empty()) throw usage_error("speedup table needs at least one R");
    std::sort(R_list.begin(), R_list.end());
    const std::uint64_t baseline_seed = mix64(seed ^ kBaselineSeedTag);

    auto search = [&](const std::function<Policy(std::uint64_t)>& family, std::uint64_t floor, std::uint64_t s,
                      Acceptance acc) {
        SearchOptions so;
        so.floor = floor;
        so.ceiling = std::max(opts.ceiling, floor);
        so.acceptance = acc;
        so.estimate = opts.estimate;
        return min_time_for_error(family, instance, target_err, trials, s, so).T_star;
    };

    auto baseline_family = [](std::uint64_t T) {
        AlgoConfig a;
        a.kind = AlgoKind::SuccessiveRejects;
        a.T = T;
        return make_policy(a);
    };
    const std::uint64_t base_floor = instance.size();
    const std::uint64_t baseline = search(baseline_family, base_floor, baseline_seed, Acceptance::Point);
    std::uint64_t base_opt = baseline, base_pess = baseline;
    if (opts.bands) {
        base_opt = search(baseline_family, base_floor, baseline_seed, Acceptance::Optimistic);
        base_pess = search(baseline_family, base_floor, baseline_seed, Acceptance::Pessimistic);
    }

    std::vector<SpeedupRow> rows;
    for (std::size_t R : R_list) {
        auto family = [&, R](std::uint64_t T) { return rounds_policy(K, R, T, opts.se_delta); };
        const std::uint64_t floor = R == 1 ? instance.size() : 2 * R;
        const std::uint64_t row_seed = mix64(seed + R);
        SpeedupRow row;
        row.R = R;
        row.baseline_T = baseline;
        row.T_star = search(family, floor, row_seed, Acceptance::Point);
        row.empirical_speedup = static_cast<double>(baseline) / static_cast<double>(row.T_star);
        row.speedup_low = row.speedup_high = row.empirical_speedup;
        if (opts.bands) {
            const std::uint64_t opt = search(family, floor, row_seed, Acceptance::Optimistic);
            const std::uint64_t pess = search(family, floor, row_seed, Acceptance::Pessimistic);
            row.speedup_low = static_cast<double>(base_opt) / static_cast<double>(pess);
            row.speedup_high = static_cast<double>(base_pess) / static_cast<double>(opt);
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// SignId reduction
// ---------------------------------------------------------------------------

/// Two-arm instance J: reference arm 0 at 1/2, unknown arm 1 at 1/2 + delta.
inline Instance signid_reduction_instance(double delta) {
    const Instance single = signid_instance(delta);
    return Instance::from_means({0.5, single.mean(0)});
}

enum class Sign { Positive, Negative };

/// Sign decision from a best-arm answer on J: unknown arm -> '>0',
/// reference -> '<0', abstain -> none.
inline std::optional<Sign> sign_from_answer(std::optional<std::size_t> answer) {
    if (!answer) return std::nullopt;
    return *answer == 1 ? Sign::Positive : Sign::Negative;
}

/// Runs the collaborative algorithm on J and scores sign decisions; wrong
/// sign and abstain both count as failures.
inline ErrorEstimate signid_run(double delta, std::size_t K, std::uint64_t T, std::size_t R, std::uint64_t trials,
                                std::uint64_t seed, Variant variant = Variant::Basic,
                                const EstimateOptions& opts = {}) {
    const Instance J = signid_reduction_instance(delta);
    CollabConfig c;
    c.K = K;
    c.T = T;
    c.R = R;
    c.variant = variant;
    validate(c);
    const Sign truth = delta > 0 ? Sign::Positive : Sign::Negative;
    const std::uint64_t failures = count_failures(
        trials, seed, [&](const SeededRng& rng) { return sign_from_answer(run_collab(J, c, rng).arm) != truth; },
        opts.workers);
    return make_estimate(trials, failures, opts.confidence);
}

}  // namespace bandit_collab
