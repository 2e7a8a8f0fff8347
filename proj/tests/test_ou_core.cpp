#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "epiou/numerics.hpp"
#include "epiou/ou_core.hpp"

using namespace epiou;

namespace {

// RK4 on the moment equations m' = k - mu m, v' = -2 mu v + sigma^2.
MeanCov moments_by_ode(const OuParams& p, double x0, double t) {
    const int steps = 20000;
    const double dt = t / steps;
    double m = x0, v = 0.0;
    auto fm = [&](double x) { return p.k - p.mu * x; };
    auto fv = [&](double x) { return -2.0 * p.mu * x + p.sigma * p.sigma; };
    for (int i = 0; i < steps; ++i) {
        const double k1 = fm(m), k2 = fm(m + 0.5 * dt * k1), k3 = fm(m + 0.5 * dt * k2), k4 = fm(m + dt * k3);
        m += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        const double l1 = fv(v), l2 = fv(v + 0.5 * dt * l1), l3 = fv(v + 0.5 * dt * l2), l4 = fv(v + dt * l3);
        v += dt / 6 * (l1 + 2 * l2 + 2 * l3 + l4);
    }
    return {m, v};
}

}  // namespace

TEST(OuMoments, MatchMomentOde) {
    const OuParams p{1.5, 0.7, 0.9};
    for (double t : {0.1, 1.0, 4.0}) {
        const auto exact = ou_mean_cov(p, -2.0, t, t);
        const auto ode = moments_by_ode(p, -2.0, t);
        EXPECT_NEAR(exact.mean, ode.mean, 1e-10);
        EXPECT_NEAR(exact.cov, ode.cov, 1e-10);
    }
}

TEST(OuMoments, LagCovarianceAndStationaryLimit) {
    const OuParams p{0.0, 2.0, 1.0};
    // Cov(X_t, X_s) = e^{-mu |t-s|} Var(X_min)
    const auto c = ou_mean_cov(p, 0.0, 1.0, 1.5);
    const auto v = ou_mean_cov(p, 0.0, 1.0, 1.0);
    EXPECT_NEAR(c.cov, std::exp(-2.0 * 0.5) * v.cov, 1e-14);
    const auto inf = ou_mean_cov(p, 3.0, INFINITY, INFINITY);
    EXPECT_NEAR(inf.mean, 0.0, 1e-15);
    EXPECT_NEAR(inf.cov, 0.25, 1e-15);
    const auto st = ou_stationary({3.0, 1.5, 2.0});
    EXPECT_DOUBLE_EQ(st.mean, 2.0);
    EXPECT_DOUBLE_EQ(st.cov, 4.0 / 3.0);
}

TEST(OuMoments, EulerMomentsMatchIteration) {
    const OuParams p{1.0, 0.8, 0.5};
    const double dt = 0.1;
    double m = 4.0, v = 0.0;
    for (int i = 0; i < 37; ++i) {
        m = m + (p.k - p.mu * m) * dt;
        v = (1 - p.mu * dt) * (1 - p.mu * dt) * v + p.sigma * p.sigma * dt;
    }
    const auto e = euler_mean_cov(p, 4.0, dt, 37, 3);
    EXPECT_NEAR(e.mean, m, 1e-13);
    EXPECT_NEAR(e.cov, v * std::pow(1 - p.mu * dt, 3), 1e-13);
}

TEST(OuSampling, ExactSamplerMoments) {
    const OuParams p{2.0, 1.0, 1.2};
    const double h = 0.5;
    const int reps = 20000;
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
        const auto tr = sample_exact(p, 0.0, h, 4, 1000 + r);
        ASSERT_EQ(tr.values.size(), 5u);
        s += tr.values.back();
        s2 += tr.values.back() * tr.values.back();
    }
    const auto mc = ou_mean_cov(p, 0.0, 2.0, 2.0);
    const double mean = s / reps, var = s2 / reps - mean * mean;
    EXPECT_NEAR(mean, mc.mean, 4 * std::sqrt(mc.cov / reps));
    EXPECT_NEAR(var, mc.cov, 4 * mc.cov * std::sqrt(2.0 / reps));
}

TEST(OuSampling, DeterministicWhenNoiseless) {
    const OuParams p{1.0, 0.5, 0.0};
    const auto tr = sample_exact(p, 0.0, 1.0, 10, 1);
    for (std::size_t i = 0; i < tr.size(); ++i)
        EXPECT_NEAR(tr.values[i], ou_mean_cov(p, 0.0, tr.time(i), tr.time(i)).mean, 1e-13);
    EXPECT_THROW(sample_exact(p, 0.0, 1.0, 10, 1, NoiseCheck::strict), std::invalid_argument);
}

TEST(OuSampling, EulerGuardsStepSize) {
    const OuParams p{0.0, 2.0, 1.0};
    EXPECT_THROW(sample_euler(p, 0.0, 0.5, 10, 1), std::domain_error);
    EXPECT_NO_THROW(sample_euler(p, 0.0, 0.49, 10, 1));
    EXPECT_EQ(sample_euler(p, 0.0, 0.1, 10, 1).values.size(), 11u);
}

TEST(BackwardAnalysis, PerturbedParamsReproduceEulerLaw) {
    // Euler with p on step dt has the grid law of the exact OU with perturbed_params(p, dt).
    const OuParams p{0.6, 1.3, 0.8};
    const double dt = 0.2;
    const auto q = perturbed_params(p, dt);
    double m = -1.0, v = 0.0;
    for (int n = 1; n <= 25; ++n) {
        m = m + (p.k - p.mu * m) * dt;
        v = (1 - p.mu * dt) * (1 - p.mu * dt) * v + p.sigma * p.sigma * dt;
        const auto exact = ou_mean_cov(q, -1.0, n * dt, n * dt);
        EXPECT_NEAR(exact.mean, m, 1e-12);
        EXPECT_NEAR(exact.cov, v, 1e-12);
    }
}

TEST(BackwardAnalysis, ExactifyingParamsInvertPerturbation) {
    const OuParams target{-0.4, 2.5, 1.7};
    const double dt = 0.3;
    const auto e = exactifying_params(target, dt);
    EXPECT_LT(e.mu * dt, 1.0);
    const auto back = perturbed_params(e, dt);
    EXPECT_NEAR(back.k, target.k, 1e-12);
    EXPECT_NEAR(back.mu, target.mu, 1e-12);
    EXPECT_NEAR(back.sigma, target.sigma, 1e-12);
    // Written-out form: mu_e = (1 - e^{-dt mu}) / dt
    EXPECT_NEAR(e.mu, (1 - std::exp(-dt * 2.5)) / dt, 1e-14);
}

TEST(BackwardAnalysis, PerturbationVanishesAsStepShrinks) {
    const OuParams p{1.0, 1.0, 1.0};
    double prev = INFINITY;
    for (double dt : {0.2, 0.1, 0.05, 0.025}) {
        const double err = std::abs(perturbed_params(p, dt).mu - p.mu);
        EXPECT_LT(err, prev);
        EXPECT_NEAR(err / dt, 0.5, 0.1);  // first order: -log(1-x)/x = 1 + x/2 + ...
        prev = err;
    }
    EXPECT_THROW(perturbed_params(p, 1.0), std::domain_error);
}

TEST(Canonical, RoundTripAndExponentialBeta) {
    const OuParams p{3.0, 2.0, 0.5};
    const auto u = to_canonical(p, 1.0);
    EXPECT_DOUBLE_EQ(u.alpha, 1.5);
    EXPECT_NEAR(u.beta, std::exp(-2.0), 1e-16);  // not the linearization 1 - mu h = -1
    EXPECT_NEAR(u.gamma, (4.0 / 0.25) / (1 - std::exp(-4.0)), 1e-12);
    const auto back = from_canonical(u);
    EXPECT_NEAR(back.k, p.k, 1e-13);
    EXPECT_NEAR(back.mu, p.mu, 1e-13);
    EXPECT_NEAR(back.sigma, p.sigma, 1e-13);
}

TEST(Canonical, GammaIsConditionalPrecision) {
    // 1/gamma equals the one-step conditional variance.
    const OuParams p{0.0, 0.7, 1.3};
    const auto u = to_canonical(p, 0.4);
    EXPECT_NEAR(1.0 / u.gamma, ou_mean_cov(p, 5.0, 0.4, 0.4).cov, 1e-14);
    EXPECT_TRUE(std::isinf(to_canonical({0.0, 1.0, 0.0}, 1.0).gamma));
}

TEST(Canonical, Validation) {
    EXPECT_THROW(validate(OuParams{0.0, 0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(validate(OuParams{0.0, 1.0, 0.0}), std::invalid_argument);
    EXPECT_NO_THROW(validate(OuParams{0.0, 1.0, 0.0}, NoiseCheck::allow_zero));
    EXPECT_THROW(validate(CanonicalParams{0.0, 1.0, 1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(validate(CanonicalParams{0.0, 0.5, -1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(from_canonical(CanonicalParams{NAN, 0.5, 1.0, 1.0}), std::invalid_argument);
}
