#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "epiou/numerics.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/random.hpp"
#include "epiou/sde_estimators.hpp"

using namespace epiou;

namespace {

std::vector<double> ar1_path(const CanonicalParams& u, std::size_t n, std::uint64_t seed) {
    const auto p = from_canonical(u);
    return sample_exact(p, u.alpha, u.h, n, seed).values;
}

}  // namespace

TEST(LsqFit, MatchesNormalEquations) {
    const std::vector<double> d{1.0, 2.5, 1.7, 3.1, 2.2, 2.9, 1.4, 2.0};
    // Raw-sum normal equations for y = a + b x, solved by Cramer's rule.
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        n += 1;
        sx += d[i];
        sy += d[i + 1];
        sxx += d[i] * d[i];
        sxy += d[i] * d[i + 1];
    }
    const double det = n * sxx - sx * sx;
    const double b = (n * sxy - sx * sy) / det;
    const double a = (sy * sxx - sx * sxy) / det;
    double rss = 0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) rss += std::pow(d[i + 1] - a - b * d[i], 2);
    const auto est = lsq_fit(d);
    EXPECT_EQ(est.n, 7u);
    EXPECT_NEAR(est.beta_hat, b, 1e-12);
    EXPECT_NEAR(est.delta_hat, a, 1e-12);
    EXPECT_NEAR(est.alpha_hat, a / (1 - b), 1e-12);
    EXPECT_NEAR(est.residual_ss, rss, 1e-12);
    EXPECT_NEAR(est.gamma_hat, 5.0 / rss, 1e-12);
}

TEST(LsqFit, ExactRecurrenceIsRecoveredWithInfinitePrecision) {
    std::vector<double> d{10.0};
    for (int i = 0; i < 20; ++i) d.push_back(0.6 * d.back() + 0.4 * 3.0);
    const auto est = lsq_fit(d);
    EXPECT_NEAR(est.beta_hat, 0.6, 1e-9);
    EXPECT_NEAR(est.alpha_hat, 3.0, 1e-8);
    EXPECT_GT(est.gamma_hat, 1e12);
}

TEST(LsqFit, DegenerateInputs) {
    EXPECT_THROW(lsq_fit(std::vector<double>{1, 2, 3}), DegenerateDataError);
    EXPECT_THROW(lsq_fit(std::vector<double>(10, 4.2)), DegenerateDataError);
    EXPECT_NO_THROW(lsq_fit(std::vector<double>{1, 2, 1, 2}));
}

TEST(LsqFit, ConsistentOnLongPaths) {
    const CanonicalParams u{5.0, 0.7, 2.0, 1.0};
    const std::size_t n = 100000;
    const auto est = lsq_fit(ar1_path(u, n, 11));
    const auto v = bvm_covariance(u, n);
    EXPECT_NEAR(est.alpha_hat, u.alpha, 5 * std::sqrt(v.alpha));
    EXPECT_NEAR(est.beta_hat, u.beta, 5 * std::sqrt(v.beta));
    EXPECT_NEAR(est.gamma_hat, u.gamma, 5 * std::sqrt(v.gamma));
}

TEST(Fisher, MatchesHessianOfExpectedLogLik) {
    // Expected per-transition log-likelihood: 1/2 ln g - g/2 f(a, b) with f the q_N limit.
    const CanonicalParams u0{1.0, 0.4, 3.0, 1.0};
    auto ell = [&](double a, double b, double g) { return 0.5 * std::log(g) - 0.5 * g * qn_limit(a, b, u0); };
    const double e = 1e-4;
    auto d2 = [&](int k) {
        double x[3] = {u0.alpha, u0.beta, u0.gamma};
        double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
        xp[k] += e;
        xm[k] -= e;
        return -(ell(xp[0], xp[1], xp[2]) - 2 * ell(x[0], x[1], x[2]) + ell(xm[0], xm[1], xm[2])) / (e * e);
    };
    const auto fi = fisher_info(u0);
    EXPECT_NEAR(fi.i_alpha, d2(0), 1e-5 * fi.i_alpha);
    EXPECT_NEAR(fi.i_beta, d2(1), 1e-5 * fi.i_beta);
    EXPECT_NEAR(fi.i_gamma, d2(2), 1e-5 * fi.i_gamma);
    EXPECT_NEAR(fi.i_alpha, 0.36 * 3.0, 1e-14);
    EXPECT_NEAR(fi.i_beta, 1.0 / 0.84, 1e-14);
    EXPECT_NEAR(fi.i_gamma, 1.0 / 18.0, 1e-14);
}

TEST(Fisher, UnitRootAndBvm) {
    EXPECT_TRUE(std::isinf(fisher_info({0.0, 1.0, 1.0, 1.0}).i_beta));
    const CanonicalParams u0{0.0, 0.5, 2.0, 1.0};
    const auto v = bvm_covariance(u0, 1000);
    EXPECT_NEAR(v.alpha, 1.0 / (1000 * 0.25 * 2.0), 1e-15);
    EXPECT_NEAR(v.beta, 0.75 / 1000, 1e-15);
    EXPECT_NEAR(v.gamma, 8.0 / 1000, 1e-15);
    EXPECT_THROW(bvm_covariance(u0, 0), std::invalid_argument);
}

TEST(Conjugate, PolynomialReproducesQuadraticForm) {
    const auto d = ar1_path({2.0, 0.6, 1.5, 1.0}, 300, 5);
    const auto q = qn_polynomial(d);
    EXPECT_EQ(q.r, 0.0);
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.uniform(-5, 5), b = rng.uniform(-1, 2);
        const double direct = qn_sum(d, a, b);
        EXPECT_NEAR(q.P(a, b), direct, 1e-9 * direct);
    }
}

TEST(Conjugate, LogPosteriorFormula) {
    const auto d = ar1_path({0.0, 0.3, 4.0, 0.5}, 50, 9);
    ConjugatePrior prior = prior_from_first_observation(d);
    prior.r += 1.5;
    const std::span<const double> rest(d.data() + 1, d.size() - 1);
    const CanonicalParams u{0.2, 0.35, 3.0, 0.5};
    double q = 0;
    for (std::size_t i = 0; i + 1 < rest.size(); ++i) q += std::pow(rest[i + 1] - 0.35 * rest[i] - 0.2 * 0.65, 2);
    const double expected = (0.5 * 49 + prior.r) * std::log(3.0) - 1.5 * (q + prior.P(0.2, 0.35));
    EXPECT_NEAR(log_posterior(prior, rest, u), expected, 1e-9);
}

TEST(Conjugate, GammaMarginalMatchesQuadrature) {
    const auto d = ar1_path({1.0, 0.5, 2.0, 1.0}, 12, 3);
    const auto prior = ConjugatePrior::flat();
    const double a = 0.8, b = 0.45;
    const double ref = log_posterior(prior, d, {a, b, 1.0, 1.0});
    // Integrate exp(log_post - ref) over gamma numerically.
    const double num = integrate([&](double g) { return std::exp(log_posterior(prior, d, {a, b, g, 1.0}) - ref); }, 1e-12, 60.0, 1e-14);
    EXPECT_NEAR(log_marginal_alpha_beta(prior, d, a, b), std::log(num) + ref, 1e-8);
}

TEST(Conjugate, PriorValidation) {
    EXPECT_NO_THROW(ConjugatePrior::flat().validate());
    const auto d = ar1_path({1.0, 0.5, 2.0, 1.0}, 30, 4);
    EXPECT_NO_THROW(qn_polynomial(d).validate());
    ConjugatePrior bad;
    bad.coef = {-1, 0, 0, 1, 0, 1};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_THROW(prior_from_first_observation(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(QnLimit, ValueAtTruthIsInverseGamma) {
    const CanonicalParams u0{3.0, 0.8, 0.25, 1.0};
    EXPECT_NEAR(qn_limit(3.0, 0.8, u0), 4.0, 1e-13);
    // f is minimized at the truth.
    EXPECT_GT(qn_limit(3.1, 0.8, u0), 4.0);
    EXPECT_GT(qn_limit(3.0, 0.75, u0), 4.0);
}

TEST(QnLimit, EmpiricalConverges) {
    const CanonicalParams u0{-1.0, 0.6, 2.0, 1.0};
    const auto d = ar1_path(u0, 200000, 21);
    for (auto [a, b] : {std::pair{-1.0, 0.6}, std::pair{0.0, 0.3}, std::pair{-2.0, 0.9}}) {
        const double f = qn_limit(a, b, u0);
        EXPECT_NEAR(qn_empirical(d, a, b), f, 0.02 * f);
    }
}

TEST(MeasurementNoise, ReducesToNoiselessCase) {
    const auto d = ar1_path({0.5, 0.4, 1.0, 1.0}, 40, 8);
    const CanonicalParams u{0.5, 0.4, 1.0, 1.0};
    EXPECT_NEAR(noisy_qn(d, u, 0.0), qn_sum(d, 0.5, 0.4), 1e-12);
    EXPECT_NEAR(noisy_log_posterior(ConjugatePrior::flat(), d, u, 0.0), log_posterior(ConjugatePrior::flat(), d, u), 1e-12);
    EXPECT_NEAR(effective_precision(2.0, 0.5, 0.1), 1.0 / (0.5 + 0.1 * 1.25), 1e-15);
}

TEST(MeasurementNoise, CorrectionTermCouplesConsecutiveResiduals) {
    const std::vector<double> d{1.0, 2.0, 0.5, 1.5};
    const CanonicalParams u{1.0, 0.5, 2.0, 1.0};
    const double eta = 0.3;
    double e[3];
    for (int i = 0; i < 3; ++i) e[i] = d[i + 1] - 0.5 * d[i] - 0.5;
    const double c = eta * 0.5 * 2.0;
    const double expected = e[0] * e[0] + std::pow(e[1] + c * e[0], 2) + std::pow(e[2] + c * e[1], 2);
    EXPECT_NEAR(noisy_qn(d, u, eta), expected, 1e-14);
}

TEST(Conjugate, FlatPriorModeIsLeastSquares) {
    const auto d = ar1_path({1.0, 0.5, 2.0, 1.0}, 200, 13);
    const auto est = lsq_fit(d);
    const auto prior = ConjugatePrior::flat();
    const double n = static_cast<double>(est.n);
    const double g_mode = est.gamma_hat * n / (n - 2);
    const CanonicalParams mode{est.alpha_hat, est.beta_hat, g_mode, 1.0};
    const double top = log_posterior(prior, d, mode);
    for (auto [da, db, dg] : {std::tuple{1e-3, 0.0, 0.0}, std::tuple{0.0, 1e-3, 0.0}, std::tuple{0.0, 0.0, 1e-3},
                              std::tuple{-1e-3, 0.0, 0.0}, std::tuple{0.0, -1e-3, 0.0}, std::tuple{0.0, 0.0, -1e-3}}) {
        const CanonicalParams u{mode.alpha + da, mode.beta + db, mode.gamma + dg, 1.0};
        EXPECT_LT(log_posterior(prior, d, u), top);
    }
}
