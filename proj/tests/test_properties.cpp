#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/numerics.hpp"
#include "epiou/orthant.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/posterior_grid.hpp"
#include "epiou/random.hpp"
#include "epiou/sde_estimators.hpp"

using namespace epiou;

namespace {

OuParams random_ou(Rng& rng) { return {rng.uniform(-3, 3), rng.uniform(0.2, 3.0), rng.uniform(0.2, 2.0)}; }

}  // namespace

TEST(Property, EulerLawEqualsPerturbedExactLaw) {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_ou(rng);
        const double dt = rng.uniform(0.01, 0.9) / p.mu;
        const auto q = perturbed_params(p, dt);
        const double x0 = rng.uniform(-5, 5);
        for (std::size_t n : {1u, 7u, 30u}) {
            const auto e = euler_mean_cov(p, x0, dt, n, 2);
            const auto x = ou_mean_cov(q, x0, n * dt, (n + 2) * dt);
            EXPECT_NEAR(e.mean, x.mean, 1e-10 * (1 + std::abs(x.mean)));
            EXPECT_NEAR(e.cov, x.cov, 1e-10 * (1 + std::abs(x.cov)));
        }
    }
}

TEST(Property, ExactifiedEulerSamplesTargetLaw) {
    Rng rng(102);
    for (int trial = 0; trial < 50; ++trial) {
        const auto target = random_ou(rng);
        const double dt = rng.uniform(0.05, 2.0);
        const auto e = exactifying_params(target, dt);
        const double x0 = rng.uniform(-5, 5);
        const auto em = euler_mean_cov(e, x0, dt, 5, 1);
        const auto ex = ou_mean_cov(target, x0, 5 * dt, 6 * dt);
        EXPECT_NEAR(em.mean, ex.mean, 1e-10 * (1 + std::abs(ex.mean)));
        EXPECT_NEAR(em.cov, ex.cov, 1e-10 * (1 + std::abs(ex.cov)));
    }
}

TEST(Property, CanonicalMapIsBijective) {
    Rng rng(103);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_ou(rng);
        const double h = rng.uniform(0.01, 3.0);
        const auto back = from_canonical(to_canonical(p, h));
        EXPECT_NEAR(back.k, p.k, 1e-9 * (1 + std::abs(p.k)));
        EXPECT_NEAR(back.mu, p.mu, 1e-9 * p.mu);
        EXPECT_NEAR(back.sigma, p.sigma, 1e-9 * p.sigma);
    }
}

TEST(Property, OrthantProbabilityIncreasesWithCorrelation) {
    // Slepian: P(X1 <= a, X2 <= b) is nondecreasing in the correlation.
    Rng rng(104);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        double prev = -1;
        for (double r = 0.0; r < 0.99; r += 0.05) {
            const double v = bvn_cdf(a, b, r);
            EXPECT_GE(v, prev - 1e-14);
            prev = v;
        }
    }
}

TEST(Property, CellLawsAreDistributions) {
    Rng rng(105);
    for (int trial = 0; trial < 40; ++trial) {
        const CanonicalParams u{rng.uniform(-2, 2), rng.uniform(0.0, 0.95), rng.uniform(0.2, 5), 1.0};
        std::vector<double> th{rng.uniform(-2, 2)};
        if (trial % 2) th.push_back(th[0] + rng.uniform(0.1, 2));
        for (int p = 0; p <= 2; ++p) {
            const auto law = cell_law(u, th, p);
            double total = 0;
            for (double x : law.prob) {
                EXPECT_GE(x, 0.0);
                total += x;
            }
            EXPECT_NEAR(total, 1.0, 1e-10);
        }
    }
}

TEST(Property, MarginalOrderZeroOnlySeesStandardizedThreshold) {
    // With p = 0 the data only inform sqrt(gamma (1 - beta^2)) (c - alpha).
    Rng rng(106);
    const std::vector<double> th{0.4};
    for (int trial = 0; trial < 30; ++trial) {
        const CanonicalParams u0{rng.uniform(-1, 1), rng.uniform(0.1, 0.9), rng.uniform(0.5, 3), 1.0};
        const double inv = SingularSet::invariant_p0(u0, th[0]);
        const double beta = rng.uniform(0.0, 0.9), gamma = rng.uniform(0.5, 3);
        const CanonicalParams u{th[0] - inv / std::sqrt(gamma * (1 - beta * beta)), beta, gamma, 1.0};
        EXPECT_NEAR(kl_filtered(u0, u, th, 0), 0.0, 1e-12);
        if (std::abs(beta - u0.beta) > 0.05) EXPECT_GT(kl_filtered(u0, u, th, 1), 0.0);
    }
}

TEST(Property, PseudoLikelihoodTranslationInvariant) {
    Rng rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        const CanonicalParams u{rng.uniform(-1, 1), rng.uniform(0.2, 0.9), rng.uniform(0.5, 3), 1.0};
        const double c = u.alpha + rng.uniform(-0.5, 0.5);
        const auto data = threshold_filter(sample_exact(from_canonical(u), u.alpha, 1.0, 300, derive_seed(7, trial)), {c});
        const double t = rng.uniform(-10, 10);
        for (int p = 0; p <= 2; ++p) {
            const auto [a, b] = filter_shift_check(u, c, t, data, p);
            EXPECT_NEAR(a, b, 1e-10);
        }
    }
}

TEST(Property, LeastSquaresEstimatesAreAsymptoticallyNormal) {
    const CanonicalParams u0{1.0, 0.6, 2.0, 1.0};
    const std::size_t n = 2000;
    const int reps = 400;
    const auto v = bvm_covariance(u0, n);
    std::vector<double> za, zb;
    for (int r = 0; r < reps; ++r) {
        const auto est = lsq_fit(sample_exact(from_canonical(u0), u0.alpha, 1.0, n, derive_seed(55, r)));
        za.push_back((est.alpha_hat - u0.alpha) / std::sqrt(v.alpha));
        zb.push_back((est.beta_hat - u0.beta) / std::sqrt(v.beta));
    }
    for (const auto* z : {&za, &zb}) {
        const auto s = summarize(*z);
        EXPECT_NEAR(s.mean, 0.0, 4 / std::sqrt(reps));
        EXPECT_NEAR(s.variance, 1.0, 0.2);
        // Kolmogorov distance to the standard normal, 1% critical value.
        std::vector<double> sorted = *z;
        std::sort(sorted.begin(), sorted.end());
        double d = 0;
        for (int i = 0; i < reps; ++i) {
            const double f = norm_cdf(sorted[i]);
            d = std::max({d, std::abs(f - static_cast<double>(i) / reps), std::abs(f - static_cast<double>(i + 1) / reps)});
        }
        EXPECT_LT(d, 1.63 / std::sqrt(reps));
    }
}

TEST(Property, PosteriorConcentratesAtRootNRate) {
    // Posterior sd of alpha under the flat conjugate prior tracks the BvM tube.
    const CanonicalParams u0{2.0, 0.5, 1.0, 1.0};
    for (std::size_t n : {500u, 2000u, 8000u}) {
        const auto d = sample_exact(from_canonical(u0), u0.alpha, 1.0, n, 3 + n).values;
        const double sd = std::sqrt(bvm_covariance(u0, n).alpha);
        const GridAxis a{"alpha", 2.0 - 6 * sd, 2.0 + 6 * sd, 121}, b{"beta", 0.5 - 0.2, 0.5 + 0.2, 121};
        const auto g = PosteriorGrid::evaluate(a, b, [&](double x, double y) { return log_marginal_alpha_beta(ConjugatePrior::flat(), d, x, y); }, 2);
        const auto s = g.summary1();
        EXPECT_NEAR(s.sd / sd, 1.0, 0.15) << n;
        EXPECT_LT(std::abs(s.mean - u0.alpha), 5 * sd) << n;
    }
}
