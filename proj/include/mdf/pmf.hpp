#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdf/error.hpp"

namespace mdf {

/// Default truncation tolerance for infinite supports.
inline constexpr double kDefaultTol = 1e-12;

/// Finite probability mass function on 0..max_value().
///
/// Index j holds P(S = j). Mass that was cut off beyond the last index is
/// kept in tail_mass(), so tail queries stay conservative after truncation.
class Pmf {
  public:
    /// Point mass at 0.
    Pmf() : masses_{1.0} {}

    explicit Pmf(std::vector<double> masses, double tail_mass = 0.0)
        : masses_(std::move(masses)), tail_mass_(tail_mass) {
        if (masses_.empty()) throw UsageError("Pmf needs at least one mass");
        for (double m : masses_) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("Pmf masses must be finite and >= 0");
        }
        if (!(tail_mass_ >= 0.0) || !std::isfinite(tail_mass_)) throw DomainError("Pmf tail mass must be finite and >= 0");
    }

    static Pmf point(std::size_t value) {
        std::vector<double> m(value + 1, 0.0);
        m[value] = 1.0;
        return Pmf(std::move(m));
    }

    [[nodiscard]] std::span<const double> masses() const noexcept { return masses_; }
    [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }
    [[nodiscard]] std::size_t max_value() const noexcept { return masses_.size() - 1; }
    [[nodiscard]] std::size_t size() const noexcept { return masses_.size(); }

    /// P(S = j); zero outside the stored support.
    [[nodiscard]] double operator[](std::size_t j) const noexcept {
        return j < masses_.size() ? masses_[j] : 0.0;
    }

    [[nodiscard]] double total() const noexcept {
        return std::accumulate(masses_.begin(), masses_.end(), 0.0) + tail_mass_;
    }

    /// Mean over the stored support (tail mass ignored).
    [[nodiscard]] double mean() const noexcept {
        double s = 0.0;
        for (std::size_t j = 1; j < masses_.size(); ++j) s += static_cast<double>(j) * masses_[j];
        return s;
    }

    [[nodiscard]] double variance() const noexcept {
        const double mu = mean();
        double s = 0.0;
        for (std::size_t j = 0; j < masses_.size(); ++j) {
            const double d = static_cast<double>(j) - mu;
            s += d * d * masses_[j];
        }
        return s;
    }

    /// Largest j with positive mass (0 if all mass sits in the tail).
    [[nodiscard]] std::size_t support_max() const noexcept {
        for (std::size_t j = masses_.size(); j-- > 0;) {
            if (masses_[j] > 0.0) return j;
        }
        return 0;
    }

    /// Drop trailing zero masses.
    void trim() {
        std::size_t n = support_max() + 1;
        masses_.resize(n);
    }

    friend bool operator==(const Pmf&, const Pmf&) = default;

  private:
    std::vector<double> masses_;
    double tail_mass_ = 0.0;
};

/// True when total mass is within eps of one.
inline bool is_normalized(const Pmf& p, double eps = 1e-9) {
    return std::abs(p.total() - 1.0) <= eps;
}

/// Packet-size law of one active user: value b_k with probability a_k.
class RequirementDistribution {
  public:
    struct Atom {
        std::size_t size;
        double prob;
    };

    RequirementDistribution(std::vector<std::size_t> sizes, std::vector<double> probs) {
        if (sizes.size() != probs.size()) throw UsageError("requirement sizes and probabilities differ in length");
        if (sizes.empty()) throw UsageError("requirement law needs at least one atom");
        double sum = 0.0;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (sizes[k] < 1) throw DomainError("requirement sizes must be >= 1");
            if (k > 0 && sizes[k] <= sizes[k - 1]) throw DomainError("requirement sizes must be strictly increasing");
            if (!(probs[k] > 0.0)) throw DomainError("requirement probabilities must be > 0");
            sum += probs[k];
            atoms_.push_back({sizes[k], probs[k]});
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw DomainError("requirement probabilities sum to " + std::to_string(sum) + ", expected 1");
        }
    }

    static RequirementDistribution point(std::size_t b) { return {{b}, {1.0}}; }

    [[nodiscard]] std::span<const Atom> atoms() const noexcept { return atoms_; }
    [[nodiscard]] std::size_t count() const noexcept { return atoms_.size(); }
    [[nodiscard]] std::size_t max_size() const noexcept { return atoms_.back().size; }

    [[nodiscard]] double mean() const noexcept {
        double s = 0.0;
        for (const auto& a : atoms_) s += static_cast<double>(a.size) * a.prob;
        return s;
    }

    [[nodiscard]] double second_moment() const noexcept {
        double s = 0.0;
        for (const auto& a : atoms_) s += static_cast<double>(a.size * a.size) * a.prob;
        return s;
    }

    [[nodiscard]] Pmf to_pmf() const {
        std::vector<double> m(max_size() + 1, 0.0);
        for (const auto& a : atoms_) m[a.size] = a.prob;
        return Pmf(std::move(m));
    }

  private:
    std::vector<Atom> atoms_;
};

/// Poisson law truncated at the smallest J past the mode with tail < tol,
/// and never beyond `cap` when given.
inline Pmf poisson_pmf(double rate, double tol = kDefaultTol, std::optional<std::size_t> cap = std::nullopt) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("poisson rate must be finite and >= 0");
    if (!(tol > 0.0 && tol < 1.0)) throw UsageError("truncation tolerance must lie in (0, 1)");
    if (rate == 0.0) return Pmf::point(0);

    // Anchor at the mode via lgamma, then walk outward multiplicatively.
    const auto mode = static_cast<std::size_t>(std::floor(rate));
    const double log_mode_mass =
        -rate + static_cast<double>(mode) * std::log(rate) - std::lgamma(static_cast<double>(mode) + 1.0);
    std::vector<double> m(mode + 1, 0.0);
    m[mode] = std::exp(log_mode_mass);
    for (std::size_t j = mode; j > 0; --j) m[j - 1] = m[j] * static_cast<double>(j) / rate;

    double cum = 0.0;
    for (std::size_t j = mode + 1; j-- > 0;) cum += m[j];
    std::size_t j = mode;
    while (1.0 - cum >= tol) {
        if (cap && j >= *cap) break;
        const double next = m[j] * rate / static_cast<double>(j + 1);
        if (next == 0.0) break;
        m.push_back(next);
        cum += next;
        ++j;
    }
    if (cap && m.size() > *cap + 1) m.resize(*cap + 1);
    const double sum = std::accumulate(m.begin(), m.end(), 0.0);
    return Pmf(std::move(m), std::max(0.0, 1.0 - sum));
}

/// Exact convolution; tail mass is whatever the product fails to cover.
inline Pmf convolve(const Pmf& a, const Pmf& b) {
    const auto ma = a.masses();
    const auto mb = b.masses();
    std::vector<double> out(ma.size() + mb.size() - 1, 0.0);
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (ma[i] == 0.0) continue;
        for (std::size_t k = 0; k < mb.size(); ++k) out[i + k] += ma[i] * mb[k];
    }
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    return Pmf(std::move(out), std::max(0.0, 1.0 - sum));
}

namespace detail {

struct Jump {
    std::size_t size;  // >= 1
    double prob;
};

/// Panjer recursion for a compound Poisson sum with jump law f:
///   g(0) = exp(-rate (1 - f(0))),  g(j) = (rate / j) * sum_i i f(i) g(j - i).
/// The running values are stored relative to a log-scale so large rates do
/// not underflow g(0); masses are emitted in absolute units.
inline Pmf panjer(double rate, std::span<const Jump> jumps, double f0, double tol,
                  std::optional<std::size_t> cap, double rescale_above = 1e100) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("compound poisson rate must be finite and >= 0");
    if (!(tol > 0.0 && tol < 1.0)) throw UsageError("truncation tolerance must lie in (0, 1)");
    double jump_mass = 0.0;
    double jump_mean = 0.0;
    for (const auto& jp : jumps) {
        jump_mass += jp.prob;
        jump_mean += static_cast<double>(jp.size) * jp.prob;
    }
    if (rate == 0.0 || jump_mass == 0.0) return Pmf::point(0);

    const double rescale_factor = 1.0 / rescale_above;
    const double rescale_log = std::log(rescale_above);
    double log_scale = -rate * (1.0 - f0);
    std::vector<double> rel{1.0};
    std::vector<double> out{std::exp(log_scale)};
    double cum = out[0];
    const double expected = rate * jump_mean;
    const std::size_t span = jumps.back().size;
    std::size_t zero_run = 0;
    std::size_t j = 0;
    while (1.0 - cum >= tol) {
        if (cap && j >= *cap) break;
        ++j;
        double s = 0.0;
        for (const auto& jp : jumps) {
            if (jp.size > j) break;
            s += static_cast<double>(jp.size) * jp.prob * rel[j - jp.size];
        }
        double g = rate / static_cast<double>(j) * s;
        if (g > rescale_above) {
            for (double& r : rel) r *= rescale_factor;
            g *= rescale_factor;
            log_scale += rescale_log;
        }
        rel.push_back(g);
        const double mass = g > 0.0 ? std::exp(std::log(g) + log_scale) : 0.0;
        out.push_back(mass);
        cum += mass;
        // Past the mean, a full window of underflowed masses means nothing further is representable.
        zero_run = mass == 0.0 ? zero_run + 1 : 0;
        if (zero_run >= span && static_cast<double>(j) > expected) break;
    }
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    return Pmf(std::move(out), std::max(0.0, 1.0 - sum));
}

}  // namespace detail

/// Law of sum_k b_k * Poi(rate * a_k), truncated once cumulative mass
/// reaches 1 - tol (and never beyond `cap`).
inline Pmf compound_poisson_pmf(double rate, const RequirementDistribution& jumps, double tol = kDefaultTol,
                                std::optional<std::size_t> cap = std::nullopt) {
    std::vector<detail::Jump> js;
    js.reserve(jumps.count());
    for (const auto& a : jumps.atoms()) js.push_back({a.size, a.prob});
    return detail::panjer(rate, js, 0.0, tol, cap);
}

/// Compound Poisson with an arbitrary finite jump law; mass at 0 is folded
/// into the rate, and any tail mass of `jumps` is lost to the result's tail.
inline Pmf compound_poisson_pmf(double rate, const Pmf& jumps, double tol = kDefaultTol,
                                std::optional<std::size_t> cap = std::nullopt) {
    std::vector<detail::Jump> js;
    const auto m = jumps.masses();
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (m[i] > 0.0) js.push_back({i, m[i]});
    }
    return detail::panjer(rate, js, m[0], tol, cap);
}

/// Pointwise weighted sum of masses and tail masses.
inline Pmf mixture_pmf(std::span<const Pmf> components, std::span<const double> weights) {
    if (components.size() != weights.size()) throw UsageError("mixture needs one weight per component");
    if (components.empty()) throw UsageError("mixture needs at least one component");
    double wsum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw DomainError("mixture weights must be >= 0");
        wsum += weights[i];
        n = std::max(n, components[i].size());
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
    std::vector<double> out(n, 0.0);
    double tail = 0.0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto m = components[i].masses();
        for (std::size_t j = 0; j < m.size(); ++j) out[j] += weights[i] * m[j];
        tail += weights[i] * components[i].tail_mass();
    }
    return Pmf(std::move(out), tail);
}

/// P(S > threshold), strict inequality, tail mass included.
inline double tail_prob(const Pmf& p, double threshold) {
    const auto m = p.masses();
    std::size_t first = 0;
    if (threshold >= 0.0) {
        const double f = std::floor(threshold) + 1.0;
        if (f > static_cast<double>(m.size())) return p.tail_mass();
        first = static_cast<std::size_t>(f);
    }
    double s = p.tail_mass();
    for (std::size_t j = m.size(); j-- > first;) s += m[j];
    return s;
}

/// Total-variation distance, treating each tail mass as one extra atom.
inline double total_variation(const Pmf& a, const Pmf& b) {
    const std::size_t n = std::max(a.size(), b.size());
    double s = std::abs(a.tail_mass() - b.tail_mass());
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a[j] - b[j]);
    return 0.5 * s;
}

/// Largest pointwise difference over the union of supports.
inline double linf_distance(const Pmf& a, const Pmf& b) {
    const std::size_t n = std::max(a.size(), b.size());
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

/// Restrict to 0..j_max and rescale so the kept masses sum to one.
inline Pmf renormalized(const Pmf& p, std::size_t j_max) {
    std::vector<double> m(j_max + 1, 0.0);
    const auto src = p.masses();
    for (std::size_t j = 0; j <= j_max && j < src.size(); ++j) m[j] = src[j];
    const double sum = std::accumulate(m.begin(), m.end(), 0.0);
    if (!(sum > 0.0)) throw DomainError("cannot renormalize a pmf with no mass below j_max");
    for (double& x : m) x /= sum;
    return Pmf(std::move(m));
}

/// Move the upper tail of total mass < eps into tail_mass.
inline Pmf truncate_tail(const Pmf& p, double eps) {
    const auto m = p.masses();
    double tail = 0.0;
    std::size_t keep = m.size();
    while (keep > 1 && tail + m[keep - 1] < eps) {
        tail += m[keep - 1];
        --keep;
    }
    return Pmf(std::vector<double>(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(keep)), p.tail_mass() + tail);
}

}  // namespace mdf
