#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace bandit_collab {

/// A finite set of Bernoulli arms with a unique best arm.
///
/// Instances are immutable once built; every constructor path goes through
/// validation, so holding an Instance means the invariants hold.
class Instance {
public:
    static Instance from_means(std::vector<double> means) {
        if (means.empty()) throw usage_error("instance needs at least one arm");
        std::size_t best = 0;
        for (std::size_t i = 0; i < means.size(); ++i) {
            const double m = means[i];
            if (!(m >= 0.0 && m <= 1.0))
                throw usage_error("arm " + std::to_string(i) + " mean " + std::to_string(m) + " outside [0,1]");
            if (m > means[best]) best = i;
        }
        for (std::size_t i = 0; i < means.size(); ++i) {
            if (i != best && means[i] == means[best])
                throw usage_error("tied maximum mean between arms " + std::to_string(best) + " and " +
                                  std::to_string(i));
        }
        return Instance(std::move(means), best);
    }

    std::size_t size() const noexcept { return means_.size(); }
    std::size_t best() const noexcept { return best_; }
    double mean(std::size_t arm) const { return means_.at(arm); }
    std::span<const double> means() const noexcept { return means_; }

    friend bool operator==(const Instance&, const Instance&) = default;

private:
    Instance(std::vector<double> means, std::size_t best) : means_(std::move(means)), best_(best) {}

    std::vector<double> means_;
    std::size_t best_;
};

/// Draws one Bernoulli reward from `arm`.
inline int pull(const Instance& instance, std::size_t arm, SeededRng& rng) {
    if (arm >= instance.size())
        throw usage_error("arm index " + std::to_string(arm) + " out of range for " +
                          std::to_string(instance.size()) + " arms");
    return rng.bernoulli(instance.means()[arm]) ? 1 : 0;
}

/// Delta_i = theta_best - theta_i; undefined for the best arm.
inline double gap(const Instance& instance, std::size_t arm) {
    if (arm >= instance.size()) throw usage_error("arm index " + std::to_string(arm) + " out of range");
    if (arm == instance.best()) throw usage_error("gap is undefined for the best arm");
    return instance.mean(instance.best()) - instance.mean(arm);
}

/// H = sum over suboptimal arms of 1/Delta_i^2, restricted to `arms`.
/// Throws when the maximum inside the subset is tied.
inline double hardness(const Instance& instance, std::span<const std::size_t> arms) {
    if (arms.empty()) return 0.0;
    std::size_t best = arms.front();
    for (std::size_t a : arms)
        if (instance.mean(a) > instance.mean(best)) best = a;
    double h = 0.0;
    for (std::size_t a : arms) {
        if (a == best) continue;
        const double d = instance.mean(best) - instance.mean(a);
        if (d <= 0.0) throw usage_error("arm subset has a tied maximum mean");
        h += 1.0 / (d * d);
    }
    return h;
}

inline double hardness(const Instance& instance) {
    double h = 0.0;
    for (std::size_t i = 0; i < instance.size(); ++i) {
        if (i == instance.best()) continue;
        const double d = gap(instance, i);
        h += 1.0 / (d * d);
    }
    return h;
}

inline double min_gap(const Instance& instance) {
    double d = 1.0;
    for (std::size_t i = 0; i < instance.size(); ++i)
        if (i != instance.best()) d = std::min(d, gap(instance, i));
    return d;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// One arm at 1/2 and n-1 arms at 1/2 - delta, best arm at `best_index`.
inline Instance one_spike(std::size_t n, double delta, std::size_t best_index = 0) {
    if (n < 2) throw usage_error("one-spike needs n >= 2");
    if (!(delta > 0.0 && delta < 0.5)) throw usage_error("one-spike delta must lie in (0, 1/2)");
    if (best_index >= n) throw usage_error("one-spike best index out of range");
    std::vector<double> means(n, 0.5 - delta);
    means[best_index] = 0.5;
    return Instance::from_means(std::move(means));
}

/// One-spike instance with the best arm placed uniformly at random.
inline Instance one_spike(std::size_t n, double delta, SeededRng& rng) {
    if (n < 2) throw usage_error("one-spike needs n >= 2");
    return one_spike(n, delta, static_cast<std::size_t>(rng.uniform_below(n)));
}

struct PyramidParams {
    std::uint64_t B = 2;  // level ratio
    std::uint64_t L = 2;  // number of levels
    std::size_t n = 1;    // number of arms
};

/// The level distribution of the hard input: X = B^{-l} with probability
/// lambda * B^{-2l}, l = 1..L, and arm mean 1/2 - X.
class PyramidDistribution {
public:
    PyramidDistribution(std::uint64_t B, std::uint64_t L) : B_(B), L_(L) {
        if (B < 2) throw usage_error("pyramid B must be >= 2");
        if (L < 2) throw usage_error("pyramid L must be >= 2");
        double total = 0.0;
        probs_.reserve(L);
        for (std::uint64_t l = 1; l <= L; ++l) {
            probs_.push_back(std::pow(static_cast<double>(B), -2.0 * static_cast<double>(l)));
            total += probs_.back();
        }
        lambda_ = 1.0 / total;
        for (double& p : probs_) p *= lambda_;
        cumulative_.resize(probs_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            acc += probs_[i];
            cumulative_[i] = acc;
        }
        cumulative_.back() = 1.0;
    }

    /// Normalization factor lambda_1.
    double lambda() const noexcept { return lambda_; }
    /// probabilities()[l-1] = Pr[X = B^{-l}].
    std::span<const double> probabilities() const noexcept { return probs_; }

    double level_mean(std::uint64_t level) const {
        if (level < 1 || level > L_) throw usage_error("pyramid level out of range");
        return 0.5 - std::pow(static_cast<double>(B_), -static_cast<double>(level));
    }

    /// Returns a level in 1..L.
    std::uint64_t sample_level(SeededRng& rng) const {
        const double u = rng.uniform01();
        for (std::size_t i = 0; i < cumulative_.size(); ++i)
            if (u < cumulative_[i]) return i + 1;
        return L_;
    }

    /// Suggested arm count n = B^{2L} / lambda_1, the coupling the lower-bound
    /// construction uses.
    double coupled_arm_count() const {
        return std::pow(static_cast<double>(B_), 2.0 * static_cast<double>(L_)) / lambda_;
    }

private:
    std::uint64_t B_;
    std::uint64_t L_;
    double lambda_ = 0.0;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

inline constexpr int kPyramidMaxRetries = 100;

/// n i.i.d. arms from the pyramid level distribution. Draws with a tied best
/// level are rejected and re-drawn, at most kPyramidMaxRetries times.
inline Instance pyramid(const PyramidParams& params, SeededRng& rng, int max_retries = kPyramidMaxRetries) {
    if (params.n < 1) throw usage_error("pyramid n must be >= 1");
    const PyramidDistribution dist(params.B, params.L);
    std::vector<std::uint64_t> levels(params.n);
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        std::uint64_t deepest = 0;
        std::size_t count = 0;
        for (auto& level : levels) {
            level = dist.sample_level(rng);
            if (level > deepest) {
                deepest = level;
                count = 1;
            } else if (level == deepest) {
                ++count;
            }
        }
        if (count != 1) continue;
        std::vector<double> means;
        means.reserve(levels.size());
        for (auto level : levels) means.push_back(dist.level_mean(level));
        return Instance::from_means(std::move(means));
    }
    throw generator_error("pyramid: best level tied in every one of " + std::to_string(max_retries + 1) +
                          " draws (B=" + std::to_string(params.B) + ", L=" + std::to_string(params.L) +
                          ", n=" + std::to_string(params.n) + ")");
}

/// Single arm with mean 1/2 + delta.
inline Instance signid_instance(double delta) {
    if (delta == 0.0) throw usage_error("signid delta must be non-zero");
    if (!(delta >= -0.5 && delta <= 0.5)) throw usage_error("signid delta must lie in [-1/2, 1/2]");
    return Instance::from_means({0.5 + delta});
}

inline Instance custom_instance(std::vector<double> means) { return Instance::from_means(std::move(means)); }

}  // namespace bandit_collab
