#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace bandit_collab {

/// Pulls of one arm by one agent within one round: the (count, sum) pair an
/// agent would need to report its observations.
struct ArmTally {
    std::size_t arm = 0;
    std::uint64_t pulls = 0;
    std::uint64_t reward_sum = 0;

    friend bool operator==(const ArmTally&, const ArmTally&) = default;
};

struct AgentRound {
    std::vector<ArmTally> tallies;
    std::optional<std::size_t> learn_arm;         // i_l, empty for bottom
    std::optional<double> broadcast_mean;         // p-hat_l, empty when nothing was learned
    std::optional<std::uint64_t> threshold;       // SE cap used in preparation, if SE ran

    std::uint64_t pulls() const noexcept {
        std::uint64_t total = 0;
        for (const auto& t : tallies) total += t.pulls;
        return total;
    }
    std::uint64_t reward_sum() const noexcept {
        std::uint64_t total = 0;
        for (const auto& t : tallies) total += t.reward_sum;
        return total;
    }

    friend bool operator==(const AgentRound&, const AgentRound&) = default;
};

/// One communication-free phase. `communicated` marks that the round ended in a
/// communication step; only the last round of a transcript may end without one.
struct RoundLog {
    std::vector<AgentRound> agents;
    bool communicated = false;
    std::vector<std::size_t> candidates;  // S-tilde_r
    std::vector<std::size_t> survivors;   // S_r

    friend bool operator==(const RoundLog&, const RoundLog&) = default;
};

struct Transcript {
    std::vector<RoundLog> rounds;

    std::size_t communication_steps() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(rounds.begin(), rounds.end(), [](const RoundLog& r) { return r.communicated; }));
    }

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct RunCost {
    std::uint64_t rounds = 1;
    std::uint64_t time = 0;

    friend bool operator==(const RunCost&, const RunCost&) = default;
};

/// rounds = communication steps + 1; time = sum over rounds of the largest
/// per-agent pull count.
inline RunCost transcript_cost(const Transcript& transcript) {
    RunCost cost;
    const std::size_t agents = transcript.rounds.empty() ? 0 : transcript.rounds.front().agents.size();
    for (std::size_t r = 0; r < transcript.rounds.size(); ++r) {
        const RoundLog& round = transcript.rounds[r];
        if (round.agents.size() != agents)
            throw structural_error("round " + std::to_string(r + 1) + " has " + std::to_string(round.agents.size()) +
                                   " agents, expected " + std::to_string(agents));
        if (!round.communicated && r + 1 != transcript.rounds.size())
            throw structural_error("round " + std::to_string(r + 1) + " ends without communication but is not last");
        std::uint64_t longest = 0;
        for (const auto& agent : round.agents) longest = std::max(longest, agent.pulls());
        cost.time += longest;
        if (round.communicated) ++cost.rounds;
    }
    return cost;
}

/// One JSON object per (round, agent): {round, agent, arm, pulls,
/// sum_rewards, broadcast_arm, broadcast_mean}. Rounds are 1-based.
inline void write_transcript_jsonl(std::ostream& out, const Transcript& transcript) {
    for (std::size_t r = 0; r < transcript.rounds.size(); ++r) {
        const RoundLog& round = transcript.rounds[r];
        for (std::size_t a = 0; a < round.agents.size(); ++a) {
            const AgentRound& agent = round.agents[a];
            nlohmann::ordered_json rec;
            rec["round"] = r + 1;
            rec["agent"] = a;
            rec["arm"] = agent.learn_arm ? nlohmann::ordered_json(*agent.learn_arm) : nlohmann::ordered_json(nullptr);
            rec["pulls"] = agent.pulls();
            rec["sum_rewards"] = agent.reward_sum();
            const bool sent = round.communicated && agent.learn_arm.has_value();
            rec["broadcast_arm"] = sent ? nlohmann::ordered_json(*agent.learn_arm) : nlohmann::ordered_json(nullptr);
            rec["broadcast_mean"] = sent && agent.broadcast_mean ? nlohmann::ordered_json(*agent.broadcast_mean)
                                                                 : nlohmann::ordered_json(nullptr);
            out << rec.dump() << '\n';
        }
    }
}

}  // namespace bandit_collab
