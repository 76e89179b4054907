#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mdf/emlm.hpp"
#include "mdf/error.hpp"
#include "mdf/mdf_stationary.hpp"
#include "mdf/pmf.hpp"
#include "mdf/sim.hpp"
#include "mdf/timevar.hpp"

namespace mdf {

struct MdfModel {
    MdfParams params;
    RateMode mode = RateMode::consistent;
};

struct TimevarModel {
    double lambda_per_user;
    std::size_t population;
    TimeVaryingProfile profile;
};

/// Capacity and alpha of an EmlmParams or DelayChainParams model are ignored
/// by the planner; the plan supplies them.
using PlanModel = std::variant<EmlmParams, MdfModel, TimevarModel, DelayChainParams>;

enum class SearchMode {
    linear,     // C = C + 1 until the target is met
    bisection,  // same answer, O(log) blocking evaluations
};

struct PlanRequest {
    PlanModel model;
    double alpha = 1.0;
    double epsilon = 0.01;
    std::optional<std::size_t> c_start = std::nullopt;
    SearchMode search = SearchMode::linear;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
    }
};

/// Blocking probability as a function of C for a fixed model. Loss-type
/// models solve their demand law once and answer tail queries; the delay
/// model re-solves its chain per capacity and reports 1 when unstable.
class BlockingCurve {
  public:
    explicit BlockingCurve(const PlanRequest& req) : alpha_(req.alpha) {
        req.validate();
        std::visit([&](const auto& m) { init(m); }, req.model);
        start_ = req.c_start.value_or(default_start_);
        if (start_ < 1) throw DomainError("c_start must be >= 1");
        limit_ = std::max(start_, support_ + 1);
    }

    [[nodiscard]] double operator()(std::size_t capacity) const {
        if (law_) return tail_prob(*law_, static_cast<double>(capacity) / alpha_);
        DelayChainParams p{*increment_, capacity, alpha_};
        if (!delay_stable(p)) return 1.0;
        return delay_blocking(p);
    }

    /// Algorithm start point, max_k b_k by default.
    [[nodiscard]] std::size_t start() const noexcept { return start_; }
    /// Capacity beyond which blocking no longer changes.
    [[nodiscard]] std::size_t limit() const noexcept { return limit_; }

  private:
    void init(const EmlmParams& m) {
        law_ = kaufman_roberts_solve(m);
        default_start_ = m.requirement.max_size();
        support_ = law_->max_value();
    }
    void init(const MdfModel& m) {
        law_ = stationary_pmf(m.params, m.mode);
        default_start_ = m.params.requirement.max_size();
        support_ = law_->max_value();
    }
    void init(const TimevarModel& m) {
        law_ = timevar_demand_pmf(m.lambda_per_user, m.population, m.profile);
        default_start_ = std::max<std::size_t>(1, m.profile.support_max());
        support_ = law_->max_value();
    }
    void init(const DelayChainParams& m) {
        increment_ = m.increment;
        default_start_ = 1;
        support_ = m.increment.max_value();
    }

    double alpha_;
    std::optional<Pmf> law_;
    std::optional<Pmf> increment_;
    std::size_t default_start_ = 1;
    std::size_t support_ = 0;
    std::size_t start_ = 1;
    std::size_t limit_ = 1;
};

/// Smallest C >= c_start with P(S > C / alpha) <= epsilon.
inline std::size_t plan_capacity(const PlanRequest& req) {
    const BlockingCurve blocking(req);
    const double eps = req.epsilon;
    const auto infeasible = [&] {
        return InfeasibleError("blocking target " + std::to_string(eps) +
                               " is below the truncation floor of the model (" +
                               std::to_string(blocking(blocking.limit())) + ")");
    };

    if (req.search == SearchMode::linear) {
        std::size_t c = blocking.start();
        while (blocking(c) > eps) {
            if (c >= blocking.limit()) throw infeasible();
            ++c;
        }
        return c;
    }

    std::size_t lo = blocking.start();
    if (blocking(lo) <= eps) return lo;
    std::size_t hi = blocking.limit();
    if (blocking(hi) > eps) throw infeasible();
    // blocking(lo) > eps >= blocking(hi)
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (blocking(mid) > eps ? lo : hi) = mid;
    }
    return hi;
}

struct SweepRow {
    std::size_t capacity;
    double blocking_emlm;
    double blocking_mdf_consistent;
    double blocking_mdf_literal;
    std::optional<double> blocking_sim_mean;
    std::optional<double> blocking_sim_ci95;
};

/// Blocking-versus-capacity table. An MDF model yields the EMLM column with
/// mu = -ln(p) / t_s, both MDF rate modes, and optionally simulated
/// estimates; an EMLM model yields its own column only (others NaN).
inline std::vector<SweepRow> sweep_curve(const PlanRequest& req, std::span<const std::size_t> grid,
                                         bool with_simulation,
                                         const std::optional<SimConfig>& sim_template = std::nullopt) {
    req.validate();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) throw UsageError("capacity grid must be strictly increasing");
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    std::optional<Pmf> emlm_law, consistent_law, literal_law;
    const MdfParams* mdf = nullptr;
    if (const auto* e = std::get_if<EmlmParams>(&req.model)) {
        emlm_law = kaufman_roberts_solve(*e);
    } else if (const auto* m = std::get_if<MdfModel>(&req.model)) {
        mdf = &m->params;
        const double mu = implied_mu(mdf->stay_prob, mdf->slot);
        emlm_law = kaufman_roberts_solve(emlm_equivalent(*mdf, mu, 1, req.alpha));
        consistent_law = stationary_pmf(*mdf, RateMode::consistent);
        literal_law = stationary_pmf(*mdf, RateMode::literal);
    } else {
        throw UsageError("sweep needs an emlm or mdf model");
    }
    if (with_simulation && mdf == nullptr) throw UsageError("simulated sweep needs an mdf model");
    if (with_simulation && !sim_template) throw UsageError("simulated sweep needs a simulation template");

    std::vector<ReplicationTrace> traces;
    if (with_simulation && !grid.empty()) {
        SimConfig sim = *sim_template;
        sim.params = *mdf;
        sim.policy = Policy::tolerance;
        sim.alpha = req.alpha;
        traces = run_replications(sim);
    }

    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (std::size_t c : grid) {
        const double thr = static_cast<double>(c) / req.alpha;
        SweepRow row{c, tail_prob(*emlm_law, thr), consistent_law ? tail_prob(*consistent_law, thr) : nan,
                     literal_law ? tail_prob(*literal_law, thr) : nan, std::nullopt, std::nullopt};
        if (!traces.empty()) {
            std::vector<double> est;
            est.reserve(traces.size());
            for (const auto& t : traces) est.push_back(t.blocking_above(thr));
            const auto b = estimate_blocking(est);
            row.blocking_sim_mean = b.mean;
            row.blocking_sim_ci95 = b.ci95_half_width;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mdf
