#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mdf/error.hpp"
#include "mdf/mdf_stationary.hpp"
#include "mdf/pmf.hpp"

namespace mdf {

enum class Policy {
    tolerance,  // blocked iff per-slot demand > C / alpha
    delay,      // unserved demand carries over: S(t) = max{0, S(t-1) - C} + demand
};

enum class RequirementMode {
    redraw,            // each active user redraws its requirement every slot
    fixed_at_arrival,  // requirement drawn once per user (classical EMLM)
};

struct SimConfig {
    MdfParams params;
    Policy policy = Policy::tolerance;
    double alpha = 1.0;
    std::size_t capacity = 1;
    std::uint64_t slots = 1;
    std::optional<std::uint64_t> burn_in = std::nullopt;  // default: 20 / (1 - p)
    std::uint64_t seed = 0;
    std::size_t replications = 1;
    RequirementMode requirement_mode = RequirementMode::redraw;
    std::size_t threads = 0;  // 0: hardware concurrency

    [[nodiscard]] std::uint64_t effective_burn_in() const {
        if (burn_in) return *burn_in;
        return static_cast<std::uint64_t>(std::ceil(20.0 / (1.0 - params.stay_prob) - 1e-9));
    }

    [[nodiscard]] double threshold() const { return static_cast<double>(capacity) / alpha; }

    void validate() const {
        params.validate();
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        if (slots < 1) throw UsageError("simulation needs at least one measured slot");
        if (replications < 1) throw UsageError("simulation needs at least one replication");
    }
};

/// Raw outcome of one replication.
struct ReplicationTrace {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> histogram;  // counts of S(t) over measured slots
    std::uint64_t blocked = 0;
    std::uint64_t slots = 0;
    double mean_active_users = 0.0;
    std::uint64_t max_active_users = 0;
    bool drifting = false;

    /// Fraction of measured slots with S(t) > threshold.
    [[nodiscard]] double blocking_above(double threshold) const {
        std::uint64_t n = 0;
        const std::size_t first = threshold < 0.0 ? 0 : static_cast<std::size_t>(std::floor(threshold)) + 1;
        for (std::size_t j = first; j < histogram.size(); ++j) n += histogram[j];
        return static_cast<double>(n) / static_cast<double>(slots);
    }
};

struct SimResult {
    double blocking_estimate = 0.0;
    double ci95_half_width = 0.0;
    Pmf empirical_pmf;
    std::uint64_t slots_observed = 0;
    std::uint64_t seed = 0;
    std::vector<double> replication_estimates;
    double mean_active_users = 0.0;
    bool unstable = false;
    bool population_exceeded = false;
    std::vector<std::string> warnings;
};

struct BlockingEstimate {
    double mean = 0.0;
    double ci95_half_width = 0.0;
    bool wide_interval = false;
};

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of replication `index`; depends only on (base, index).
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Replication mean with a normal-approximation 95% interval. With a single
/// replication the half-width is set to 1 and the result is marked wide.
inline BlockingEstimate estimate_blocking(std::span<const double> estimates) {
    if (estimates.empty()) throw UsageError("no replications to aggregate");
    BlockingEstimate out;
    double sum = 0.0;
    for (double e : estimates) sum += e;
    const auto n = static_cast<double>(estimates.size());
    out.mean = sum / n;
    if (estimates.size() < 2) {
        out.ci95_half_width = 1.0;
        out.wide_interval = true;
        return out;
    }
    double ss = 0.0;
    for (double e : estimates) ss += (e - out.mean) * (e - out.mean);
    out.ci95_half_width = 1.959963984540054 * std::sqrt(ss / (n - 1.0) / n);
    return out;
}

inline BlockingEstimate estimate_blocking(std::span<const SimResult> results) {
    std::vector<double> e;
    e.reserve(results.size());
    for (const auto& r : results) e.push_back(r.blocking_estimate);
    return estimate_blocking(e);
}

namespace detail {

/// Empirical pmf from summed histograms.
inline Pmf histogram_pmf(std::span<const ReplicationTrace> traces) {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto& t : traces) {
        if (counts.size() < t.histogram.size()) counts.resize(t.histogram.size(), 0);
        for (std::size_t j = 0; j < t.histogram.size(); ++j) counts[j] += t.histogram[j];
        total += t.slots;
    }
    if (counts.empty()) counts.push_back(0);
    std::vector<double> m(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) m[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
    return Pmf(std::move(m));
}

template <class Fn>
void for_each_index(std::size_t count, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

}  // namespace detail

/// Run one replication of the slot chain. Per slot: each active user stays
/// with probability p, Poisson(lambda t_s N) users arrive, the requirement
/// total S is formed and the policy applied.
inline ReplicationTrace simulate_replication(const SimConfig& config, std::size_t index) {
    const MdfParams& mp = config.params;
    ReplicationTrace out;
    out.seed = replication_seed(config.seed, index);
    std::mt19937_64 rng(out.seed);

    const auto atoms = mp.requirement.atoms();
    std::vector<double> weights;
    for (const auto& a : atoms) weights.push_back(a.prob);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::poisson_distribution<std::uint64_t> arrivals(mp.arrivals_per_slot());
    std::vector<std::poisson_distribution<std::uint64_t>> class_arrivals;
    for (const auto& a : atoms) class_arrivals.emplace_back(mp.arrivals_per_slot() * a.prob);

    const bool fixed = config.requirement_mode == RequirementMode::fixed_at_arrival;
    const double threshold = config.threshold();
    const std::uint64_t burn = config.effective_burn_in();
    const std::uint64_t total_slots = burn + config.slots;
    const std::uint64_t quarter = std::max<std::uint64_t>(1, config.slots / 4);

    std::uint64_t active = 0;
    std::vector<std::uint64_t> per_class(atoms.size(), 0);
    std::uint64_t backlog = 0;
    double active_sum = 0.0;
    double first_q_sum = 0.0, first_q_sq = 0.0, last_q_sum = 0.0;
    std::uint64_t first_q_n = 0, last_q_n = 0;

    for (std::uint64_t t = 0; t < total_slots; ++t) {
        std::uint64_t demand = 0;
        if (fixed) {
            active = 0;
            for (std::size_t k = 0; k < atoms.size(); ++k) {
                if (per_class[k] > 0) {
                    per_class[k] = std::binomial_distribution<std::uint64_t>(per_class[k], mp.stay_prob)(rng);
                }
                per_class[k] += class_arrivals[k](rng);
                active += per_class[k];
                demand += per_class[k] * atoms[k].size;
            }
        } else {
            if (active > 0) active = std::binomial_distribution<std::uint64_t>(active, mp.stay_prob)(rng);
            active += arrivals(rng);
            for (std::uint64_t u = 0; u < active; ++u) demand += atoms[pick(rng)].size;
        }

        std::uint64_t s = demand;
        if (config.policy == Policy::delay) {
            backlog = (backlog > config.capacity ? backlog - config.capacity : 0) + demand;
            s = backlog;
        }
        if (t < burn) continue;

        const std::uint64_t m = t - burn;
        if (s >= out.histogram.size()) out.histogram.resize(s + 1, 0);
        ++out.histogram[s];
        if (static_cast<double>(s) > threshold) ++out.blocked;
        active_sum += static_cast<double>(active);
        out.max_active_users = std::max(out.max_active_users, active);
        const auto sd = static_cast<double>(s);
        if (m < quarter) {
            first_q_sum += sd;
            first_q_sq += sd * sd;
            ++first_q_n;
        } else if (m >= config.slots - quarter) {
            last_q_sum += sd;
            ++last_q_n;
        }
    }
    out.slots = config.slots;
    out.mean_active_users = active_sum / static_cast<double>(config.slots);
    if (config.policy == Policy::delay && first_q_n > 0 && last_q_n > 0) {
        const double m1 = first_q_sum / static_cast<double>(first_q_n);
        const double m4 = last_q_sum / static_cast<double>(last_q_n);
        const double sd1 = std::sqrt(std::max(0.0, first_q_sq / static_cast<double>(first_q_n) - m1 * m1));
        out.drifting = m4 - m1 > 4.0 * sd1 + static_cast<double>(config.capacity);
    }
    return out;
}

/// All replications of `config`, in replication order regardless of threading.
inline std::vector<ReplicationTrace> run_replications(const SimConfig& config) {
    config.validate();
    std::vector<ReplicationTrace> traces(config.replications);
    detail::for_each_index(config.replications, config.threads,
                           [&](std::size_t i) { traces[i] = simulate_replication(config, i); });
    return traces;
}

/// Aggregate replication traces into a result for the given threshold.
inline SimResult summarize(const SimConfig& config, std::span<const ReplicationTrace> traces, double threshold) {
    SimResult r;
    r.seed = config.seed;
    double active = 0.0;
    for (const auto& t : traces) {
        r.replication_estimates.push_back(t.blocking_above(threshold));
        r.slots_observed += t.slots;
        active += t.mean_active_users;
        if (t.max_active_users > config.params.population) r.population_exceeded = true;
        if (t.drifting) r.unstable = true;
    }
    r.mean_active_users = active / static_cast<double>(traces.size());
    const auto est = estimate_blocking(r.replication_estimates);
    r.blocking_estimate = est.mean;
    r.ci95_half_width = est.ci95_half_width;
    r.empirical_pmf = detail::histogram_pmf(traces);
    if (est.wide_interval) r.warnings.emplace_back("single replication: confidence interval is not informative");
    if (r.population_exceeded) r.warnings.emplace_back("active users exceeded the population size N");
    if (r.unstable) r.warnings.emplace_back("delay backlog still drifting after burn-in: system looks unstable");
    return r;
}

inline SimResult simulate_tolerance(const SimConfig& config) {
    if (config.policy != Policy::tolerance) throw UsageError("simulate_tolerance needs the tolerance policy");
    const auto traces = run_replications(config);
    return summarize(config, traces, config.threshold());
}

inline SimResult simulate_delay(const SimConfig& config) {
    if (config.policy != Policy::delay) throw UsageError("simulate_delay needs the delay policy");
    const auto traces = run_replications(config);
    SimResult r = summarize(config, traces, config.threshold());
    const double drift = stationary_rate(config.params, RateMode::consistent) * config.params.requirement.mean();
    if (drift >= static_cast<double>(config.capacity) && !r.unstable) {
        r.unstable = true;
        r.warnings.emplace_back("mean demand per slot is at least C: delay backlog has no stationary law");
    }
    return r;
}

}  // namespace mdf
