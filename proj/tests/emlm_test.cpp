#include "mdf/emlm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace {

using mdf::EmlmParams;
using mdf::Pmf;
using mdf::RequirementDistribution;

EmlmParams params_with_load(double load, RequirementDistribution req, std::size_t population = 1000) {
    // lambda N / mu = load with mu = 1.
    return EmlmParams{load / static_cast<double>(population), population, 1.0, std::move(req), 1.0, 1};
}

TEST(KaufmanRoberts, SingleUnitClassIsPoisson) {
    const auto p = params_with_load(1.0, RequirementDistribution::point(1));
    const std::size_t j_max = 25;
    const Pmf q = mdf::kaufman_roberts_solve(p, j_max);
    const auto ref = oracle::poisson(1.0L, j_max);
    long double z = 0.0L;
    for (auto x : ref) z += x;
    for (std::size_t j = 0; j <= j_max; ++j) EXPECT_NEAR(q[j], static_cast<double>(ref[j] / z), 1e-15);
}

TEST(KaufmanRoberts, SizeTwoClassParity) {
    const auto p = params_with_load(1.0, RequirementDistribution::point(2));
    const Pmf q = mdf::kaufman_roberts_solve(p, 30);
    for (std::size_t j = 1; j <= 30; j += 2) EXPECT_EQ(q[j], 0.0);
    EXPECT_NEAR(q[2] / q[0], 1.0, 1e-15);
}

TEST(KaufmanRoberts, TwoClassesMatchCompoundPoisson) {
    const auto p = params_with_load(2.0, RequirementDistribution({1, 2}, {0.5, 0.5}));
    const std::size_t j_max = 40;
    const Pmf q = mdf::kaufman_roberts_solve(p, j_max);
    const Pmf cp = mdf::renormalized(mdf::compound_poisson_pmf(2.0, p.requirement), j_max);
    EXPECT_LE(mdf::linf_distance(q, cp), 1e-10);
}

TEST(KaufmanRoberts, RandomInstancesMatchCompoundPoisson) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> load_d(0.1, 10.0);
    std::uniform_int_distribution<std::size_t> k_d(1, 3), b_d(1, 8);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::size_t> sizes;
        const auto k = k_d(rng);
        while (sizes.size() < k) {
            auto b = b_d(rng);
            if (std::find(sizes.begin(), sizes.end(), b) == sizes.end()) sizes.push_back(b);
        }
        std::sort(sizes.begin(), sizes.end());
        std::vector<double> probs(k, 1.0 / static_cast<double>(k));
        if (k == 3) probs = {0.2, 0.3, 0.5};
        const auto p = params_with_load(load_d(rng), RequirementDistribution(sizes, probs));
        const std::size_t j_max = mdf::default_j_max(p);
        const Pmf q = mdf::kaufman_roberts_solve(p, j_max);
        const Pmf cp = mdf::renormalized(mdf::compound_poisson_pmf(p.offered_load(), p.requirement), j_max);
        EXPECT_LE(mdf::linf_distance(q, cp), 1e-10) << "trial " << trial;
    }
}

TEST(KaufmanRoberts, RescalingLeavesNormalizedOutputUnchanged) {
    const auto p = params_with_load(60.0, RequirementDistribution({1, 3, 5}, {0.3, 0.3, 0.4}), 100000);
    const std::size_t j_max = 600;
    const Pmf reference = mdf::detail::kaufman_roberts(p, j_max, 1e300);
    for (double threshold : {1e100, 1e40, 1e10, 10.0}) {
        const Pmf q = mdf::detail::kaufman_roberts(p, j_max, threshold);
        double rel = 0.0;
        for (std::size_t j = 0; j <= j_max; ++j) {
            if (reference[j] > 1e-200) rel = std::max(rel, std::abs(q[j] - reference[j]));
        }
        EXPECT_LE(rel, 1e-14) << threshold;
    }
}

TEST(KaufmanRoberts, LargeLoadStaysFinite) {
    // Unnormalized values reach e^{800}; periodic rescaling keeps them finite.
    const auto p = params_with_load(800.0, RequirementDistribution::point(1), 1000000);
    const Pmf q = mdf::kaufman_roberts_solve(p);
    EXPECT_TRUE(mdf::is_normalized(q));
    EXPECT_NEAR(q.mean(), 800.0, 1e-6);
}

TEST(KaufmanRoberts, UsageErrors) {
    const auto p = params_with_load(1.0, RequirementDistribution({1, 5}, {0.5, 0.5}), 3);
    EXPECT_THROW(mdf::kaufman_roberts_solve(p, 4), mdf::UsageError);
    EXPECT_THROW(mdf::kaufman_roberts_solve(p, 16), mdf::UsageError);  // N * max b = 15
    EXPECT_NO_THROW(mdf::kaufman_roberts_solve(p, 15));
}

TEST(EmlmBlocking, ThresholdBeyondSupportIsZero) {
    auto p = params_with_load(2.0, RequirementDistribution({1, 2}, {0.5, 0.5}));
    p.capacity = 20;
    p.alpha = 0.5;
    EXPECT_EQ(mdf::emlm_blocking(p, 40), 0.0);
}

TEST(EmlmBlocking, ZeroCapacity) {
    auto p = params_with_load(2.0, RequirementDistribution({1, 2}, {0.5, 0.5}));
    p.capacity = 0;
    const Pmf q = mdf::kaufman_roberts_solve(p, 40);
    EXPECT_NEAR(mdf::emlm_blocking(p, 40), 1.0 - q[0], 1e-15);
}

TEST(EmlmBlocking, MonotoneInCapacityAndAlpha) {
    auto p = params_with_load(20.0, RequirementDistribution({1, 3, 5, 7, 9, 11}, {0.15, 0.1, 0.3, 0.25, 0.15, 0.05}),
                              10000);
    const Pmf q = mdf::kaufman_roberts_solve(p);
    double prev = 1.0;
    for (std::size_t c = 0; c < 300; ++c) {
        const double b = mdf::emlm_blocking(q, c, 1.0);
        EXPECT_LE(b, prev);
        prev = b;
    }
    for (std::size_t c : {50u, 100u, 150u}) {
        double prev_a = 0.0;
        for (double a : {0.3, 0.5, 0.7, 0.9, 1.0}) {
            const double b = mdf::emlm_blocking(q, c, a);
            EXPECT_GE(b, prev_a);
            prev_a = b;
        }
    }
}

TEST(EmlmBlocking, ToyInstanceCentre) {
    // lambda = 0.001, N = 10000, mu = 0.5, X2: mean demand = 20 * 5.6 = 112.
    const EmlmParams p{0.001, 10000, 0.5,
                       RequirementDistribution({1, 3, 5, 7, 9, 11}, {0.15, 0.1, 0.3, 0.25, 0.15, 0.05}), 1.0, 112};
    const Pmf q = mdf::kaufman_roberts_solve(p);
    EXPECT_NEAR(q.mean(), 112.0, 1e-8);
    EXPECT_NEAR(q.variance(), 20.0 * 39.0, 1e-6);
    const double b = mdf::emlm_blocking(p);
    EXPECT_GT(b, 0.3);
    EXPECT_LT(b, 0.6);
}

TEST(EmlmParams, Validation) {
    EXPECT_THROW(params_with_load(-1.0, RequirementDistribution::point(1)).validate(), mdf::DomainError);
    auto p = params_with_load(1.0, RequirementDistribution::point(1));
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), mdf::DomainError);
    p.alpha = 1.5;
    EXPECT_THROW(p.validate(), mdf::DomainError);
}

}  // namespace
