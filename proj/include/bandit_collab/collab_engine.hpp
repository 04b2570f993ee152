#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arm_models.hpp"
#include "centralized.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "transcript.hpp"

namespace bandit_collab {

enum class Variant { Basic, ImprovedRRounds, RandomThreshold, Meta };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::Basic: return "basic";
        case Variant::ImprovedRRounds: return "improved";
        case Variant::RandomThreshold: return "random-threshold";
        case Variant::Meta: return "meta";
    }
    return "?";
}

/// The two preparation-phase SE caps of the randomized-threshold variant.
enum class ThresholdChoice { Short /* T/200 */, Long /* T/2 */ };

inline std::uint64_t threshold_value(ThresholdChoice choice, std::uint64_t T) {
    return choice == ThresholdChoice::Short ? T / 200 : T / 2;
}

inline ThresholdChoice draw_threshold(SeededRng& rng) {
    return rng.uniform_below(2) == 0 ? ThresholdChoice::Short : ThresholdChoice::Long;
}

struct CollabConfig {
    std::size_t K = 1;    // agents
    std::uint64_t T = 1;  // time horizon
    std::size_t R = 1;    // communication steps (Basic, RandomThreshold, Meta) or rounds (ImprovedRRounds)
    Variant variant = Variant::Basic;
    double se_delta = 0.01;
    bool retain_transcript = false;

    /// RandomThreshold and Meta only: pin every agent's cap (test hook).
    std::optional<ThresholdChoice> forced_threshold;
    /// ImprovedRRounds only: each arm goes to floor(replication * K^{1/R}) agents. Defaults to 100.
    std::optional<double> replication;
};

inline void validate(const CollabConfig& config) {
    if (config.K < 1) throw usage_error("K must be >= 1");
    if (config.T < 1) throw usage_error("T must be >= 1");
    if (config.R < 1) throw usage_error("R must be >= 1");
    if (!(config.se_delta > 0.0 && config.se_delta < 1.0)) throw usage_error("SE delta must lie in (0,1)");
    if (config.forced_threshold && config.variant != Variant::RandomThreshold && config.variant != Variant::Meta)
        throw usage_error("forced_threshold applies only to the random-threshold and meta variants");
    if (config.replication && config.variant != Variant::ImprovedRRounds)
        throw usage_error("replication applies only to the improved variant");
    if (config.replication && !(*config.replication > 0.0)) throw usage_error("replication must be positive");
}

/// One level s of the meta algorithm.
struct MetaLevel {
    std::uint64_t s = 0;
    std::uint64_t horizon = 0;
    std::uint64_t runs = 0;
    std::optional<std::size_t> plurality_arm;
    std::uint64_t plurality_count = 0;
    double frequency = 0.0;
    bool qualified = false;  // frequency > 0.9
};

struct Outcome {
    std::optional<std::size_t> arm;  // empty = abstain
    std::uint64_t rounds_used = 1;
    std::uint64_t time_used = 0;
    std::optional<Transcript> transcript;
    std::vector<MetaLevel> meta_levels;  // Meta only
    bool fell_back_to_basic = false;     // ImprovedRRounds only
};

/// Elimination threshold 2 sqrt(R ln(200 K R) / (max{1, K/|S_{r-1}|} T)).
inline double elimination_radius(std::size_t K, std::size_t R, std::uint64_t T, std::size_t prev_size) {
    const double k = static_cast<double>(K);
    const double r = static_cast<double>(R);
    const double spread = std::max(1.0, k / static_cast<double>(prev_size));
    return 2.0 * std::sqrt(r * std::log(200.0 * k * r) / (spread * static_cast<double>(T)));
}

namespace detail {

inline constexpr std::uint64_t kAgentStreams = 1;
inline constexpr std::uint64_t kSharedStream = 2;
inline constexpr std::uint64_t kThresholdStreams = 3;
inline constexpr std::uint64_t kMetaStreams = 4;

struct ProtocolParams {
    std::size_t K = 1;
    std::uint64_t T = 1;
    std::size_t R = 1;           // enters the learning budget and the radius
    std::size_t iterations = 1;  // communication steps to run at most
    double se_delta = 0.01;
    bool random_threshold = false;
    std::optional<ThresholdChoice> forced_threshold;
    std::optional<double> replication;  // replicated first-iteration preparation
};

struct ProtocolRun {
    std::optional<std::size_t> arm;
    Transcript transcript;
};

inline double root_of(std::size_t K, double exponent) { return std::pow(static_cast<double>(K), exponent); }

/// The iteration structure shared by all variants: preparation, learning,
/// communication/aggregation and elimination, repeated until the round budget
/// is spent or at most one arm survives.
inline ProtocolRun run_protocol(const Instance& instance, const ProtocolParams& p, const SeededRng& run_rng) {
    ProtocolRun out;
    std::vector<std::size_t> active = all_arms(instance);

    std::vector<SeededRng> agent_rng;
    agent_rng.reserve(p.K);
    const SeededRng agent_base = run_rng.split(kAgentStreams);
    for (std::size_t l = 0; l < p.K; ++l) agent_rng.push_back(agent_base.split(l));
    SeededRng shared = run_rng.split(kSharedStream);
    const SeededRng threshold_base = run_rng.split(kThresholdStreams);

    const std::uint64_t learn = p.iterations == 0 ? 0 : p.T / (2 * p.R);
    const double R = static_cast<double>(p.R);

    for (std::size_t iter = 1; iter <= p.iterations && active.size() >= 2; ++iter) {
        RoundLog log;
        log.agents.resize(p.K);
        std::vector<std::optional<std::size_t>> choice(p.K);

        auto prepare_with_se = [&](const std::vector<std::vector<std::size_t>>& assigned) {
            for (std::size_t l = 0; l < p.K; ++l) {
                const auto& arms = assigned[l];
                if (arms.empty()) continue;
                std::uint64_t cap = p.T / 2;
                if (p.random_threshold) {
                    SeededRng trng = threshold_base.split(l);
                    const ThresholdChoice c = p.forced_threshold ? *p.forced_threshold : draw_threshold(trng);
                    cap = threshold_value(c, p.T);
                }
                AgentRound& agent = log.agents[l];
                agent.threshold = cap;
                std::vector<ArmTally> tallies(arms.size());
                for (std::size_t k = 0; k < arms.size(); ++k) tallies[k].arm = arms[k];
                auto sampler = [&](std::size_t arm) {
                    const auto pos = static_cast<std::size_t>(std::lower_bound(arms.begin(), arms.end(), arm) - arms.begin());
                    const int reward = pull(instance, arm, agent_rng[l]);
                    ++tallies[pos].pulls;
                    tallies[pos].reward_sum += static_cast<std::uint64_t>(reward);
                    return reward;
                };
                const SeResult res = successive_elimination(arms, sampler, p.se_delta, cap);
                choice[l] = res.arm;
                for (const auto& t : tallies)
                    if (t.pulls > 0) agent.tallies.push_back(t);
            }
        };

        // Step 1: preparation.
        bool replicated = false;
        if (iter == 1 && p.replication && static_cast<double>(active.size()) > root_of(p.K, (R - 1.0) / R)) {
            const auto copies = static_cast<std::size_t>(std::floor(*p.replication * root_of(p.K, 1.0 / R)));
            std::vector<std::vector<std::size_t>> assigned(p.K);
            std::vector<std::size_t> agents(p.K);
            for (std::size_t arm : active) {
                for (std::size_t l = 0; l < p.K; ++l) agents[l] = l;
                const std::size_t m = std::min(copies, p.K);
                for (std::size_t k = 0; k < m; ++k) {
                    const auto j = k + static_cast<std::size_t>(shared.uniform_below(p.K - k));
                    std::swap(agents[k], agents[j]);
                    assigned[agents[k]].push_back(arm);
                }
            }
            prepare_with_se(assigned);
            replicated = true;
        } else if (active.size() > p.K) {
            std::vector<std::vector<std::size_t>> assigned(p.K);
            for (std::size_t arm : active) assigned[shared.uniform_below(p.K)].push_back(arm);
            prepare_with_se(assigned);
        } else {
            // floor(K/|S|) agents per arm; the remainder goes to the lowest-index arms.
            for (std::size_t l = 0; l < p.K; ++l) choice[l] = active[l % active.size()];
        }

        // Step 2: learning.
        for (std::size_t l = 0; l < p.K; ++l) {
            AgentRound& agent = log.agents[l];
            agent.learn_arm = choice[l];
            if (!choice[l] || learn == 0) continue;
            ArmTally tally{*choice[l], learn, 0};
            for (std::uint64_t j = 0; j < learn; ++j)
                tally.reward_sum += static_cast<std::uint64_t>(pull(instance, *choice[l], agent_rng[l]));
            agent.broadcast_mean = static_cast<double>(tally.reward_sum) / static_cast<double>(learn);
            agent.tallies.push_back(tally);
        }

        // Step 3: communication and aggregation.
        log.communicated = true;
        std::map<std::size_t, std::pair<double, std::size_t>> pooled;  // arm -> (sum of p-hat, holders)
        for (std::size_t l = 0; l < p.K; ++l) {
            if (!choice[l]) continue;
            auto& entry = pooled[*choice[l]];
            entry.first += log.agents[l].broadcast_mean.value_or(0.0);
            ++entry.second;
        }
        const double vote_floor = replicated ? root_of(p.K, 1.0 / R) : 0.0;
        for (const auto& [arm, entry] : pooled)
            if (static_cast<double>(entry.second) >= vote_floor) log.candidates.push_back(arm);

        // Step 4: elimination.
        if (learn == 0 || log.candidates.empty()) {
            log.survivors = log.candidates;
        } else {
            double leader = -1.0;
            for (std::size_t arm : log.candidates) {
                const auto& e = pooled[arm];
                leader = std::max(leader, e.first / static_cast<double>(e.second));
            }
            const double radius = elimination_radius(p.K, p.R, p.T, active.size());
            for (std::size_t arm : log.candidates) {
                const auto& e = pooled[arm];
                if (!(leader >= e.first / static_cast<double>(e.second) + radius)) log.survivors.push_back(arm);
            }
        }
        active = log.survivors;
        out.transcript.rounds.push_back(std::move(log));
    }

    if (active.size() == 1) out.arm = active.front();
    return out;
}

inline Outcome finish(ProtocolRun run, bool retain) {
    Outcome outcome;
    outcome.arm = run.arm;
    const RunCost cost = transcript_cost(run.transcript);
    outcome.rounds_used = cost.rounds;
    outcome.time_used = cost.time;
    if (retain) outcome.transcript = std::move(run.transcript);
    return outcome;
}

inline ProtocolParams basic_params(const CollabConfig& c) {
    ProtocolParams p;
    p.K = c.K;
    p.T = c.T;
    p.R = c.R;
    p.iterations = c.R;
    p.se_delta = c.se_delta;
    return p;
}

inline void require_variant(const CollabConfig& config, Variant expected) {
    validate(config);
    if (config.variant != expected)
        throw usage_error(std::string("configuration variant is ") + to_string(config.variant) + ", expected " +
                          to_string(expected));
}

}  // namespace detail

/// Fixed-time collaborative identification with R communication steps
/// (R + 1 rounds). Preparation SE runs are capped at T/2.
inline Outcome run_fixed_time(const Instance& instance, const CollabConfig& config, const SeededRng& rng) {
    detail::require_variant(config, Variant::Basic);
    return detail::finish(detail::run_protocol(instance, detail::basic_params(config), rng), config.retain_transcript);
}

/// As run_fixed_time, except each agent's preparation cap is T/200 or T/2
/// with equal probability, drawn independently per agent.
inline Outcome run_randomized_threshold(const Instance& instance, const CollabConfig& config, const SeededRng& rng) {
    detail::require_variant(config, Variant::RandomThreshold);
    auto p = detail::basic_params(config);
    p.random_threshold = true;
    p.forced_threshold = config.forced_threshold;
    return detail::finish(detail::run_protocol(instance, p, rng), config.retain_transcript);
}

/// R-round variant: R - 1 communication steps. When there are more than
/// K^{(R-1)/R} arms, the first preparation replicates every arm to
/// floor(100 K^{1/R}) agents and keeps arms identified by at least K^{1/R}
/// of them. If that replication does not fit in K agents, the run is the
/// basic algorithm with R - 1 communication steps.
inline Outcome run_fixed_time_r_rounds(const Instance& instance, const CollabConfig& config, const SeededRng& rng) {
    detail::require_variant(config, Variant::ImprovedRRounds);
    const double factor = config.replication.value_or(100.0);
    const double R = static_cast<double>(config.R);
    const double copies = std::floor(factor * std::pow(static_cast<double>(config.K), 1.0 / R));

    detail::ProtocolParams p;
    p.K = config.K;
    p.T = config.T;
    p.se_delta = config.se_delta;
    p.iterations = config.R - 1;
    bool fallback = false;
    if (copies <= static_cast<double>(config.K) && config.R >= 2) {
        p.R = config.R;
        p.replication = factor;
    } else {
        fallback = true;
        p.R = std::max<std::size_t>(config.R - 1, 1);
    }
    Outcome outcome = detail::finish(detail::run_protocol(instance, p, rng), config.retain_transcript);
    outcome.fell_back_to_basic = fallback;
    return outcome;
}

/// horizon_s = floor(T * 6 / (pi^2 s^2 10^s)).
inline std::uint64_t meta_horizon(std::uint64_t T, std::uint64_t s) {
    const long double denom =
        std::numbers::pi_v<long double> * std::numbers::pi_v<long double> * static_cast<long double>(s * s) *
        std::pow(10.0L, static_cast<long double>(s));
    return static_cast<std::uint64_t>(std::floor(static_cast<long double>(T) * 6.0L / denom));
}

/// Levels s = 1, 2, ... that the meta algorithm runs: horizon_s >= 2R.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> meta_schedule(std::uint64_t T, std::size_t R) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> levels;  // (s, horizon)
    for (std::uint64_t s = 1; s < 19; ++s) {
        const std::uint64_t h = meta_horizon(T, s);
        if (h < 2 * R) break;
        levels.emplace_back(s, h);
    }
    return levels;
}

/// Meta algorithm: for every viable s, 10^s independent randomized-threshold
/// runs at horizon_s, all advancing their rounds side by side. Returns the
/// plurality arm of the largest s whose plurality frequency exceeds 0.9.
inline Outcome run_meta(const Instance& instance, const CollabConfig& config, const SeededRng& rng) {
    detail::require_variant(config, Variant::Meta);
    Outcome outcome;
    const auto schedule = meta_schedule(config.T, config.R);

    long double spent = 0.0L;
    for (const auto& [s, h] : schedule) spent += std::pow(10.0L, static_cast<long double>(s)) * static_cast<long double>(h);
    if (spent > static_cast<long double>(config.T)) throw std::logic_error("meta schedule exceeds the time horizon");

    // merged[r][agent]: arm -> tally, summed over every sub-run.
    std::vector<std::vector<std::map<std::size_t, ArmTally>>> merged;
    std::vector<bool> communicated;
    const SeededRng meta_base = rng.split(detail::kMetaStreams);

    for (const auto& [s, horizon] : schedule) {
        MetaLevel level;
        level.s = s;
        level.horizon = horizon;
        level.runs = 1;
        for (std::uint64_t k = 0; k < s; ++k) level.runs *= 10;

        detail::ProtocolParams p;
        p.K = config.K;
        p.T = horizon;
        p.R = config.R;
        p.iterations = config.R;
        p.se_delta = config.se_delta;
        p.random_threshold = true;
        p.forced_threshold = config.forced_threshold;

        std::map<std::size_t, std::uint64_t> votes;
        const SeededRng level_base = meta_base.split(s);
        for (std::uint64_t j = 0; j < level.runs; ++j) {
            detail::ProtocolRun run = detail::run_protocol(instance, p, level_base.split(j));
            if (run.arm) ++votes[*run.arm];
            const auto& rounds = run.transcript.rounds;
            if (merged.size() < rounds.size()) {
                merged.resize(rounds.size(), std::vector<std::map<std::size_t, ArmTally>>(config.K));
                communicated.resize(rounds.size(), false);
            }
            for (std::size_t r = 0; r < rounds.size(); ++r) {
                communicated[r] = communicated[r] || rounds[r].communicated;
                for (std::size_t l = 0; l < config.K; ++l) {
                    for (const auto& t : rounds[r].agents[l].tallies) {
                        auto& slot = merged[r][l][t.arm];
                        slot.arm = t.arm;
                        slot.pulls += t.pulls;
                        slot.reward_sum += t.reward_sum;
                    }
                }
            }
        }
        for (const auto& [arm, count] : votes) {
            if (count > level.plurality_count) {
                level.plurality_count = count;
                level.plurality_arm = arm;
            }
        }
        level.frequency = static_cast<double>(level.plurality_count) / static_cast<double>(level.runs);
        level.qualified = level.plurality_arm.has_value() && level.frequency > 0.9;
        if (level.qualified) outcome.arm = level.plurality_arm;  // later (larger) s overrides
        outcome.meta_levels.push_back(level);
    }

    Transcript transcript;
    for (std::size_t r = 0; r < merged.size(); ++r) {
        RoundLog log;
        log.communicated = communicated[r];
        log.agents.resize(config.K);
        for (std::size_t l = 0; l < config.K; ++l)
            for (const auto& [arm, t] : merged[r][l]) log.agents[l].tallies.push_back(t);
        transcript.rounds.push_back(std::move(log));
    }
    const RunCost cost = transcript_cost(transcript);
    outcome.rounds_used = cost.rounds;
    outcome.time_used = cost.time;
    if (config.retain_transcript) outcome.transcript = std::move(transcript);
    return outcome;
}

/// Dispatches on config.variant.
inline Outcome run_collab(const Instance& instance, const CollabConfig& config, const SeededRng& rng) {
    switch (config.variant) {
        case Variant::Basic: return run_fixed_time(instance, config, rng);
        case Variant::ImprovedRRounds: return run_fixed_time_r_rounds(instance, config, rng);
        case Variant::RandomThreshold: return run_randomized_threshold(instance, config, rng);
        case Variant::Meta: return run_meta(instance, config, rng);
    }
    throw usage_error("unknown variant");
}

/// Round budget a variant must respect.
inline std::uint64_t round_budget(const CollabConfig& config) {
    return config.variant == Variant::ImprovedRRounds ? config.R : config.R + 1;
}

}  // namespace bandit_collab
