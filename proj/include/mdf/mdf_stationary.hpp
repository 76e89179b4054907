#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mdf/emlm.hpp"
#include "mdf/error.hpp"
#include "mdf/pmf.hpp"

namespace mdf {

/// Discrete-time multi-type data flow community: Poisson(lambda * slot * N)
/// arrivals per slot, each active user stays one more slot with probability
/// stay_prob and redraws its requirement every slot.
struct MdfParams {
    double lambda_per_user;
    std::size_t population;
    double slot;
    double stay_prob;
    RequirementDistribution requirement;

    /// Expected arrivals per slot.
    [[nodiscard]] double arrivals_per_slot() const noexcept {
        return lambda_per_user * slot * static_cast<double>(population);
    }

    void validate() const {
        if (!(lambda_per_user >= 0.0) || !std::isfinite(lambda_per_user)) throw DomainError("lambda must be >= 0");
        if (population < 1) throw DomainError("population must be >= 1");
        if (!(slot > 0.0) || !std::isfinite(slot)) throw DomainError("slot length must be > 0");
        if (!(stay_prob > 0.0 && stay_prob < 1.0)) throw DomainError("stay probability must lie in (0, 1)");
        if (!std::isfinite(arrivals_per_slot())) throw DomainError("lambda * slot * N must be finite");
    }
};

/// How the per-class Poisson rates of the stationary law are formed.
enum class RateMode {
    /// lambda t_s N a_k / (1 - p): exact stationary law of the slot chain.
    consistent,
    /// lambda t_s N a_k (1 - p t_s / ln p), the closed form as printed.
    literal,
};

inline std::string_view to_string(RateMode m) noexcept {
    return m == RateMode::consistent ? "consistent" : "literal";
}

/// Per-slot survival probability e^{-mu t_s} of an exponential holding time.
inline double slot_survival_prob(double mu, double slot) {
    if (!(mu > 0.0) || !(slot > 0.0)) throw DomainError("mu and slot must be > 0");
    return std::exp(-mu * slot);
}

/// Inverse of slot_survival_prob: mu = -ln(p) / t_s.
inline double implied_mu(double stay_prob, double slot) {
    if (!(stay_prob > 0.0 && stay_prob < 1.0)) throw DomainError("stay probability must lie in (0, 1)");
    if (!(slot > 0.0)) throw DomainError("slot must be > 0");
    return -std::log(stay_prob) / slot;
}

/// Total Poisson rate of the active-user count (multiply by a_k per class).
inline double stationary_rate(const MdfParams& params, RateMode mode) {
    params.validate();
    const double p = params.stay_prob;
    switch (mode) {
        case RateMode::consistent:
            return params.arrivals_per_slot() / (1.0 - p);
        case RateMode::literal:
            return params.arrivals_per_slot() * (1.0 - p * params.slot / std::log(p));
    }
    throw UsageError("unknown rate mode");
}

/// Stationary law of the total requirement S = sum_k b_k Poi(rate * a_k).
inline Pmf stationary_pmf(const MdfParams& params, RateMode mode = RateMode::consistent, double tol = kDefaultTol) {
    const double rate = stationary_rate(params, mode);
    return compound_poisson_pmf(rate, params.requirement, tol,
                                params.population * params.requirement.max_size());
}

inline double blocking_prob(const Pmf& stationary, std::size_t capacity, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    return tail_prob(stationary, static_cast<double>(capacity) / alpha);
}

/// P(S > C / alpha) under the stationary slot-chain law.
inline double blocking_prob(const MdfParams& params, std::size_t capacity, double alpha,
                            RateMode mode = RateMode::consistent, double tol = kDefaultTol) {
    return blocking_prob(stationary_pmf(params, mode, tol), capacity, alpha);
}

/// EMLM counterpart of an MDF community with the same lambda, N and law.
inline EmlmParams emlm_equivalent(const MdfParams& params, double mu, std::size_t capacity, double alpha) {
    return EmlmParams{params.lambda_per_user, params.population, mu, params.requirement, alpha, capacity};
}

struct ConvergencePoint {
    double slot;
    double stay_prob;
    double blocking_mdf;
    double blocking_emlm;
    double delta;
};

/// delta(t_s) = |P_mdf(S > C/alpha) - P_emlm(S > C/alpha)| for each slot
/// length, with p = e^{-mu t_s}. Slots must be strictly decreasing.
inline std::vector<ConvergencePoint> convergence_report(double lambda, double mu, std::size_t population,
                                                        const RequirementDistribution& requirement,
                                                        std::span<const double> slots, std::size_t capacity,
                                                        double alpha, RateMode mode = RateMode::consistent) {
    for (std::size_t i = 1; i < slots.size(); ++i) {
        if (!(slots[i] < slots[i - 1])) throw UsageError("slot lengths must be strictly decreasing");
    }
    const EmlmParams emlm{lambda, population, mu, requirement, alpha, capacity};
    const double b_emlm = emlm_blocking(emlm);
    std::vector<ConvergencePoint> out;
    out.reserve(slots.size());
    for (double ts : slots) {
        const MdfParams mdf{lambda, population, ts, slot_survival_prob(mu, ts), requirement};
        const double b_mdf = blocking_prob(mdf, capacity, alpha, mode);
        out.push_back({ts, mdf.stay_prob, b_mdf, b_emlm, std::abs(b_mdf - b_emlm)});
    }
    return out;
}

}  // namespace mdf
