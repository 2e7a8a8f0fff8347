#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "epiou/epi_models.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/random.hpp"

using namespace epiou;

TEST(Ctmc, SisPathConservesAndStepsByOne) {
    const auto p = SisParams::from_r0(1.8, 0.5, 300);
    const auto path = simulate_ctmc_sis(p, 20, 50.0, 3);
    ASSERT_GT(path.t.size(), 100u);
    for (std::size_t k = 1; k < path.t.size(); ++k) {
        EXPECT_GT(path.t[k], path.t[k - 1]);
        EXPECT_EQ(std::abs(path.i_count[k] - path.i_count[k - 1]), 1);
        EXPECT_GE(path.i_count[k], 0);
        EXPECT_LE(path.i_count[k], 300);
    }
    EXPECT_LE(path.t.back(), 50.0);
}

TEST(Ctmc, PureDeathIsBinomial) {
    // beta = 0: each infected recovers independently, I(t) ~ Bin(I0, e^{-g t}).
    const SisParams p{0.0, 0.7, 100};
    const double t = 1.3, q = std::exp(-0.7 * t);
    const int reps = 20000;
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
        const auto tr = sample_ctmc_sis(p, 50, t, 1, derive_seed(77, r));
        s += tr.values[1];
        s2 += tr.values[1] * tr.values[1];
    }
    const double mean = s / reps, var = s2 / reps - mean * mean;
    const double v = 50 * q * (1 - q);
    EXPECT_NEAR(mean, 50 * q, 4 * std::sqrt(v / reps));
    EXPECT_NEAR(var, v, 4 * v * std::sqrt(2.0 / reps));
}

TEST(Ctmc, SisePureDeathAndPressureDecay) {
    const SiseParams p{0.0, 0.4, 2.0, 100};
    const auto path = simulate_ctmc_sise(p, 0, 0.8, 3.0, 5);
    ASSERT_EQ(path.t.size(), 2u);  // no jumps: start and end records
    EXPECT_NEAR(path.phi.back(), 0.8 * std::exp(-6.0), 1e-15);

    const int reps = 10000;
    double s = 0;
    for (int r = 0; r < reps; ++r) s += static_cast<double>(simulate_ctmc_sise(p, 40, 0.0, 1.0, derive_seed(8, r)).i_count.back());
    const double q = std::exp(-0.4);
    EXPECT_NEAR(s / reps, 40 * q, 4 * std::sqrt(40 * q * (1 - q) / reps));
}

TEST(Ctmc, SiseTracksOdeEquilibrium) {
    const SiseParams p{0.5, 0.1, 1.0, 2000};  // I* = S (1 - g rho / b) = 1600
    const auto path = simulate_ctmc_sise(p, 1600, 1600.0 / 2000.0, 400.0, 12);
    const auto tr = sample_path(path, 1.0, 400);
    double m = 0;
    for (std::size_t i = 100; i < tr.values.size(); ++i) m += tr.values[i];
    m /= static_cast<double>(tr.values.size() - 100);
    EXPECT_NEAR(m, 1600.0, 0.03 * 1600.0);
    EXPECT_NEAR(p.r0(), std::sqrt(5.0), 1e-15);
}

TEST(Ctmc, SeedReproducibility) {
    const auto p = SisParams::from_r0(1.5, 1.0, 500);
    EXPECT_EQ(sample_ctmc_sis(p, 10, 1.0, 30, 4).values, sample_ctmc_sis(p, 10, 1.0, 30, 4).values);
    EXPECT_NE(sample_ctmc_sis(p, 10, 1.0, 30, 4).values, sample_ctmc_sis(p, 10, 1.0, 30, 5).values);
    EXPECT_THROW(sample_ctmc_sis(p, 600, 1.0, 3, 1), std::invalid_argument);
}

TEST(Ctmc, SamplePathIsRightContinuous) {
    EventPath path{{0.0, 0.5, 1.0, 2.5}, {3, 4, 5, 4}, {}};
    const auto tr = sample_path(path, 1.0, 3);
    EXPECT_EQ(tr.values, (std::vector<double>{3, 5, 5, 4}));
}

TEST(Ctmc, AdvanceStopsAtAbsorption) {
    Rng rng(1);
    long s = 10, i = 0;
    double t = 0;
    EXPECT_EQ(advance_sis(s, i, t, 5.0, 2.0, 1.0, rng), 0u);
    EXPECT_EQ(t, 5.0);
}

TEST(Ode, SisMatchesLogisticClosedForm) {
    const auto p = SisParams::from_r0(2.5, 0.4, 1000);
    const double K = 1000 * (1 - 1 / 2.5), r = p.beta_tx - p.gamma_rec, i0 = 5;
    std::vector<double> grid;
    for (int k = 0; k <= 60; ++k) grid.push_back(0.5 * k);
    const auto sol = solve_ode_sis(p, i0, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double exact = K / (1 + (K / i0 - 1) * std::exp(-r * grid[k]));
        EXPECT_NEAR(sol.i[k], exact, 1e-6 * K);
        EXPECT_NEAR(sol.s[k] + sol.i[k], 1000, 1e-9);
    }
}

TEST(Ode, SiseEquilibrium) {
    const SiseParams p{0.5, 0.1, 1.0, 1000};
    std::vector<double> grid{0, 100, 200, 400};
    const auto sol = solve_ode_sise(p, 10, 0.0, grid);
    EXPECT_NEAR(sol.i.back(), 1000 * (1 - 0.1 * 1.0 / 0.5), 1e-3);
    EXPECT_NEAR(sol.phi.back(), sol.i.back() / (1000 * 1.0), 1e-6);
    EXPECT_THROW(solve_ode_sise(p, 2000, 0.0, grid), std::invalid_argument);
}

TEST(LinearNoise, OuParametersFromRateLinearization) {
    // Drift slope and diffusion of the jump rates at the endemic equilibrium.
    const auto p = SisParams::from_r0(1.7, 0.3, 800);
    const double istar = p.endemic_level();
    auto drift = [&](double x) { return p.beta_tx * x * (p.sigma_pop - x) / p.sigma_pop - p.gamma_rec * x; };
    const double e = 1e-3;
    const double slope = (drift(istar + e) - drift(istar - e)) / (2 * e);
    const double diffusion = p.beta_tx * istar * (p.sigma_pop - istar) / p.sigma_pop + p.gamma_rec * istar;
    const auto ou = sis_to_ou(p);
    EXPECT_NEAR(ou.mu, -slope, 1e-8);
    EXPECT_NEAR(ou.k / ou.mu, istar, 1e-9);
    EXPECT_NEAR(ou.sigma * ou.sigma, diffusion, 1e-9);
    EXPECT_NEAR(ou_stationary(ou).cov, p.sigma_pop / p.r0(), 1e-9);
}

TEST(LinearNoise, CanonicalMapAndInverse) {
    const auto p = SisParams::from_r0(1.5, 1.0, 1000);
    const auto u = sis_to_canonical(p, 1.0);
    const auto via_ou = to_canonical(sis_to_ou(p), 1.0);
    EXPECT_NEAR(u.alpha, via_ou.alpha, 1e-10);
    EXPECT_NEAR(u.beta, via_ou.beta, 1e-14);
    EXPECT_NEAR(u.gamma, via_ou.gamma, 1e-14);
    EXPECT_NEAR(u.beta, std::exp(-0.5), 1e-15);
    const auto back = ou_to_sis(u);
    EXPECT_NEAR(back.r0(), 1.5, 1e-12);
    EXPECT_NEAR(back.sigma_pop, 1000, 1e-9);
    EXPECT_NEAR(back.gamma_rec, 1.0, 1e-12);
    EXPECT_THROW(sis_to_ou(SisParams::from_r0(0.9, 1.0, 100)), std::domain_error);
    EXPECT_NEAR(r0_of_alpha(u.alpha, 1000), 1.5, 1e-12);
}

TEST(LinearNoise, VarR0Formula) {
    const auto p = SisParams::from_r0(2.0, 1.0, 1000);
    const double b = std::exp(-1.0);
    EXPECT_NEAR(var_r0_asymptotic(p, 1.0, 100), 8.0 / (1000 * 100) * (1 + b) / (1 - b), 1e-15);
}

TEST(LinearNoise, CtmcStationaryMomentsNearLinearNoise) {
    const auto p = SisParams::from_r0(2.0, 1.0, 2000);
    const auto tr = sample_ctmc_sis(p, 1000, 1.0, 20000, 31);
    double m = 0, m2 = 0;
    const std::size_t burn = 50;
    for (std::size_t i = burn; i < tr.values.size(); ++i) {
        m += tr.values[i];
        m2 += tr.values[i] * tr.values[i];
    }
    const double n = static_cast<double>(tr.values.size() - burn);
    m /= n;
    const double v = m2 / n - m * m;
    EXPECT_NEAR(m, 1000.0, 5.0);
    EXPECT_NEAR(v, 1000.0, 150.0);
}
