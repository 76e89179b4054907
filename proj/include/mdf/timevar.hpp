#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "mdf/error.hpp"
#include "mdf/pmf.hpp"

namespace mdf {

/// Requirement laws W(0..T) of a user indexed by elapsed service slots.
/// A zero-valued atom in W(s) encodes a user that already finished.
class TimeVaryingProfile {
  public:
    explicit TimeVaryingProfile(std::vector<Pmf> laws) : laws_(std::move(laws)) {
        if (laws_.empty()) throw UsageError("profile needs at least W(0)");
        for (const auto& w : laws_) {
            if (!is_normalized(w)) throw DomainError("every profile law must be normalized");
        }
    }

    [[nodiscard]] std::size_t horizon() const noexcept { return laws_.size() - 1; }
    [[nodiscard]] const std::vector<Pmf>& laws() const noexcept { return laws_; }
    [[nodiscard]] const Pmf& law(std::size_t elapsed) const { return laws_.at(elapsed); }

    /// Largest value any W(s) can take.
    [[nodiscard]] std::size_t support_max() const noexcept {
        std::size_t m = 0;
        for (const auto& w : laws_) m = std::max(m, w.support_max());
        return m;
    }

  private:
    std::vector<Pmf> laws_;
};

/// Per-user marginal when the elapsed time is uniform on 0..T.
inline Pmf elapsed_mixture(const TimeVaryingProfile& profile) {
    const std::vector<double> w(profile.laws().size(), 1.0 / static_cast<double>(profile.laws().size()));
    return mixture_pmf(profile.laws(), w);
}

/// Law of the total requirement: |A| ~ Poi(lambda N (T+1)) users, each with
/// the elapsed-time mixture law.
inline Pmf timevar_demand_pmf(double lambda, std::size_t population, const TimeVaryingProfile& profile,
                              double tol = kDefaultTol) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    const double rate = lambda * static_cast<double>(population) * static_cast<double>(profile.horizon() + 1);
    return compound_poisson_pmf(rate, elapsed_mixture(profile), tol);
}

inline double tolerance_blocking(double lambda, std::size_t population, const TimeVaryingProfile& profile,
                                 std::size_t capacity, double alpha, double tol = kDefaultTol) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    return tail_prob(timevar_demand_pmf(lambda, population, profile, tol), static_cast<double>(capacity) / alpha);
}

inline double nontolerance_blocking(double lambda, std::size_t population, const TimeVaryingProfile& profile,
                                    std::size_t capacity, double tol = kDefaultTol) {
    return tolerance_blocking(lambda, population, profile, capacity, 1.0, tol);
}

/// S(t) = max{0, S(t-1) - C} + D with i.i.d. per-slot new demand D.
struct DelayChainParams {
    Pmf increment;
    std::size_t capacity = 1;
    double alpha = 1.0;

    void validate() const {
        if (capacity < 1) throw DomainError("capacity must be >= 1");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    }
};

/// One step of the delay recursion applied to a law of S(t-1).
inline Pmf delay_transition(const Pmf& state, const DelayChainParams& params) {
    const auto m = state.masses();
    const std::size_t c = params.capacity;
    std::vector<double> drained(m.size() > c ? m.size() - c : 1, 0.0);
    for (std::size_t j = 0; j < m.size(); ++j) drained[j > c ? j - c : 0] += m[j];
    return convolve(Pmf(std::move(drained), state.tail_mass()), params.increment);
}

/// Law of S(steps - 1) started from an empty system, i.e. `steps`
/// applications of the transition to the point mass at 0.
inline Pmf delay_transient(const DelayChainParams& params, std::size_t steps) {
    params.validate();
    Pmf s = Pmf::point(0);
    for (std::size_t i = 0; i < steps; ++i) s = delay_transition(s, params);
    return s;
}

/// Stability test E[D] < C. Truncated increment mass is placed just beyond
/// the support, and a chain within 1e-9 of criticality counts as unstable.
inline bool delay_stable(const DelayChainParams& params) {
    const Pmf& d = params.increment;
    const double drift = d.mean() + d.tail_mass() * static_cast<double>(d.max_value() + 1);
    return drift < static_cast<double>(params.capacity) * (1.0 - 1e-9);
}

/// Fixed point of delay_transition, iterated from the empty system until
/// successive iterates are within `tol` in total variation. Each iterate's
/// upper tail below min(1e-10, tol / 100) is folded into tail_mass.
inline Pmf delay_stationary(const DelayChainParams& params, double tol = 1e-9, std::size_t max_iters = 100000) {
    params.validate();
    if (!delay_stable(params)) {
        const double drift = params.increment.mean();
        throw UnstableError("delay chain unstable: E[D] = " + std::to_string(drift) +
                            " >= C = " + std::to_string(params.capacity));
    }
    const double state_tail = std::min(1e-10, tol / 100.0);
    Pmf state = Pmf::point(0);
    for (std::size_t it = 0; it < max_iters; ++it) {
        Pmf next = delay_transition(state, params);
        next.trim();
        next = truncate_tail(next, state_tail);
        const double tv = total_variation(next, state);
        state = std::move(next);
        if (tv < tol) return state;
    }
    throw NonConvergenceError("delay chain did not converge within " + std::to_string(max_iters) + " iterations");
}

inline double delay_blocking(const DelayChainParams& params, double tol = 1e-9, std::size_t max_iters = 100000) {
    return tail_prob(delay_stationary(params, tol, max_iters),
                     static_cast<double>(params.capacity) / params.alpha);
}

namespace detail {

/// Memoized evaluation of the delay expansion. A configuration lists how
/// many active users have each elapsed time 0..T at a given slot; the law of
/// S at that slot, conditional on the configuration, is obtained by summing
/// over the Poisson-distributed cohort that left one slot earlier.
class DelayExpansion {
  public:
    using Cohorts = std::vector<std::size_t>;

    DelayExpansion(double arrivals, const TimeVaryingProfile& profile, std::size_t capacity, std::size_t k_max)
        : profile_(profile), capacity_(capacity) {
        const double e = std::exp(-arrivals);
        double w = e;
        for (std::size_t j = 0; j <= k_max; ++j) {
            cohort_weight_.push_back(w);
            w *= arrivals / static_cast<double>(j + 1);
        }
    }

    /// Law of S(t) given the cohort sizes at time t.
    const Pmf& state(std::size_t t, const Cohorts& n) {
        const auto key = std::make_pair(t, n);
        if (auto it = state_memo_.find(key); it != state_memo_.end()) return it->second;

        const Pmf& fresh = demand(n);
        Pmf out;
        if (t == 0) {
            out = fresh;
        } else {
            const std::size_t horizon = profile_.horizon();
            // Cohort that had elapsed time T at t-1 exists only if slot t-1-T >= 0.
            const bool departed_exists = t - 1 >= horizon;
            Cohorts prev(horizon + 1, 0);
            for (std::size_t e = 0; e < horizon; ++e) prev[e] = n[e + 1];
            std::vector<double> acc;
            const std::size_t j_hi = departed_exists ? cohort_weight_.size() - 1 : 0;
            for (std::size_t j = 0; j <= j_hi; ++j) {
                const double w = departed_exists ? cohort_weight_[j] : 1.0;
                prev[horizon] = j;
                const Pmf& before = state(t - 1, prev);
                const auto bm = before.masses();
                std::vector<double> drained(bm.size() > capacity_ ? bm.size() - capacity_ : 1, 0.0);
                for (std::size_t a = 0; a < bm.size(); ++a) drained[a > capacity_ ? a - capacity_ : 0] += bm[a];
                const auto fm = fresh.masses();
                if (acc.size() < drained.size() + fm.size() - 1) acc.resize(drained.size() + fm.size() - 1, 0.0);
                for (std::size_t a = 0; a < drained.size(); ++a) {
                    if (drained[a] == 0.0) continue;
                    for (std::size_t i = 0; i < fm.size(); ++i) acc[a + i] += w * drained[a] * fm[i];
                }
            }
            out = Pmf(std::move(acc));
        }
        return state_memo_.emplace(key, std::move(out)).first->second;
    }

  private:
    /// Law of sum over users of W(elapsed) for the given cohort sizes.
    const Pmf& demand(const Cohorts& n) {
        if (auto it = demand_memo_.find(n); it != demand_memo_.end()) return it->second;
        Pmf acc = Pmf::point(0);
        for (std::size_t e = 0; e < n.size(); ++e) {
            for (std::size_t u = 0; u < n[e]; ++u) acc = convolve(acc, profile_.law(e));
        }
        return demand_memo_.emplace(n, std::move(acc)).first->second;
    }

    const TimeVaryingProfile& profile_;
    std::size_t capacity_;
    std::vector<double> cohort_weight_;
    std::map<Cohorts, Pmf> demand_memo_;
    std::map<std::pair<std::size_t, Cohorts>, Pmf> state_memo_;
};

}  // namespace detail

/// Brute-force evaluation of P(S(t) > C / alpha) for the delay policy by the
/// full expansion: Poisson sum over the number of active users, enumeration
/// of every elapsed-time vector, and the backward recursion on S seeded by
/// the empty system at t = 0. Arrival counts are cut at k_max. Exponential
/// cost, so only tiny instances are accepted.
inline double delay_bruteforce_oracle(double lambda, std::size_t population, const TimeVaryingProfile& profile,
                                      std::size_t capacity, double alpha, std::size_t t, std::size_t k_max) {
    const std::size_t horizon = profile.horizon();
    const double arrivals = lambda * static_cast<double>(population);
    if (t > 6) throw UsageError("oracle limited to t <= 6");
    if (horizon > 2) throw UsageError("oracle limited to T <= 2");
    if (k_max > 8) throw UsageError("oracle limited to k_max <= 8");
    if (!(arrivals >= 0.0) || arrivals * static_cast<double>(horizon + 1) > 1.0) {
        throw UsageError("oracle limited to lambda N (T+1) <= 1");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    if (capacity < 1) throw DomainError("capacity must be >= 1");

    detail::DelayExpansion expansion(arrivals, profile, capacity, k_max);
    const double threshold = static_cast<double>(capacity) / alpha;

    // Before slot T only the cohorts that arrived at 0..t are present.
    const std::size_t span = std::min(t, horizon) + 1;
    const double active_rate = arrivals * static_cast<double>(span);
    double weight = std::exp(-active_rate);  // (lambda N)^k / k! e^{-lambda N span}, k = 0
    double total = 0.0;
    std::map<detail::DelayExpansion::Cohorts, double> tail_cache;
    for (std::size_t k = 0; k <= k_max; ++k) {
        // Every ordered vector of elapsed times in [0, span)^k.
        std::vector<std::size_t> elapsed(k, 0);
        double inner = 0.0;
        while (true) {
            detail::DelayExpansion::Cohorts n(horizon + 1, 0);
            for (std::size_t e : elapsed) ++n[e];
            auto it = tail_cache.find(n);
            if (it == tail_cache.end()) {
                it = tail_cache.emplace(n, tail_prob(expansion.state(t, n), threshold)).first;
            }
            inner += it->second;
            std::size_t pos = 0;
            while (pos < k && ++elapsed[pos] == span) elapsed[pos++] = 0;
            if (pos == k) break;
        }
        total += weight * inner;
        weight *= arrivals / static_cast<double>(k + 1);
    }
    return total;
}

}  // namespace mdf
