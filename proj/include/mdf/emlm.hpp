#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mdf/error.hpp"
#include "mdf/pmf.hpp"

namespace mdf {

/// Erlang multirate loss model: Poisson arrivals (lambda per user, N users),
/// exponential holding with rate mu, class sizes/probabilities from the
/// requirement law, tolerance alpha and capacity C.
struct EmlmParams {
    double lambda_per_user;
    std::size_t population;
    double mu;
    RequirementDistribution requirement;
    double alpha = 1.0;
    std::size_t capacity = 1;

    /// Total offered load lambda N / mu.
    [[nodiscard]] double offered_load() const noexcept {
        return lambda_per_user * static_cast<double>(population) / mu;
    }

    /// Occupancy can never exceed N * max_k b_k.
    [[nodiscard]] std::size_t support_cap() const noexcept { return population * requirement.max_size(); }

    void validate() const {
        if (!(lambda_per_user > 0.0) || !std::isfinite(lambda_per_user)) throw DomainError("lambda must be > 0");
        if (population < 1) throw DomainError("population must be >= 1");
        if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("mu must be > 0");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    }
};

namespace detail {

/// Kaufman-Roberts recursion j q(j) = sum_k rho_k b_k q(j - b_k), seeded at
/// q(0) = 1. The running values are divided by `rescale_above` whenever one
/// exceeds it; rescaling is linear so the normalized output is unaffected.
inline Pmf kaufman_roberts(const EmlmParams& params, std::size_t j_max, double rescale_above) {
    const double load = params.offered_load();
    const auto atoms = params.requirement.atoms();
    std::vector<double> q(j_max + 1, 0.0);
    q[0] = 1.0;
    for (std::size_t j = 1; j <= j_max; ++j) {
        double s = 0.0;
        for (const auto& a : atoms) {
            if (a.size > j) break;
            s += load * a.prob * static_cast<double>(a.size) * q[j - a.size];
        }
        q[j] = s / static_cast<double>(j);
        if (q[j] > rescale_above) {
            const double f = 1.0 / rescale_above;
            for (std::size_t i = 0; i <= j; ++i) q[i] *= f;
        }
    }
    double sum = 0.0;
    for (double x : q) sum += x;
    for (double& x : q) x /= sum;
    return Pmf(std::move(q));
}

}  // namespace detail

/// Smallest j with compound-Poisson tail < tol, capped at N * max_k b_k and
/// never below max_k b_k.
inline std::size_t default_j_max(const EmlmParams& params, double tol = kDefaultTol) {
    params.validate();
    const auto cap = params.support_cap();
    const Pmf cp = compound_poisson_pmf(params.offered_load(), params.requirement, tol, cap);
    return std::max(cp.max_value(), params.requirement.max_size());
}

/// Normalized EMLM occupancy distribution on 0..j_max.
inline Pmf kaufman_roberts_solve(const EmlmParams& params, std::size_t j_max) {
    params.validate();
    if (j_max < params.requirement.max_size()) throw UsageError("j_max must be at least max_k b_k");
    if (j_max > params.support_cap()) throw UsageError("j_max must not exceed N * max_k b_k");
    return detail::kaufman_roberts(params, j_max, 1e100);
}

inline Pmf kaufman_roberts_solve(const EmlmParams& params) {
    return kaufman_roberts_solve(params, default_j_max(params));
}

/// Tolerance blocking P(S > C / alpha) from an already solved occupancy law.
inline double emlm_blocking(const Pmf& occupancy, std::size_t capacity, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    return tail_prob(occupancy, static_cast<double>(capacity) / alpha);
}

inline double emlm_blocking(const EmlmParams& params, std::size_t j_max) {
    return emlm_blocking(kaufman_roberts_solve(params, j_max), params.capacity, params.alpha);
}

inline double emlm_blocking(const EmlmParams& params) {
    return emlm_blocking(params, default_j_max(params));
}

}  // namespace mdf
