#include "epiou/sde_estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace epiou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t transitions(std::span<const double> values) {
    return values.empty() ? 0 : values.size() - 1;
}

}  // namespace

LsqEstimate lsq_fit(std::span<const double> values) {
    const std::size_t n = transitions(values);
    if (n < 3) throw DegenerateDataError("lsq_fit: need at least 3 transitions");
    const double dn = static_cast<double>(n);

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += values[i];
        my += values[i + 1];
    }
    mx /= dn;
    my /= dn;
    double sxx = 0.0;
    double sxy = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = values[i] - mx;
        sxx += dx * dx;
        sxy += dx * (values[i + 1] - my);
        scale = std::max(scale, std::abs(values[i]));
    }
    if (!(sxx > 1e-24 * dn * std::max(1.0, scale * scale)))
        throw DegenerateDataError("lsq_fit: regressor is constant (rank-deficient design)");

    LsqEstimate est;
    est.n = n;
    est.beta_hat = sxy / sxx;
    est.delta_hat = my - est.beta_hat * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = values[i + 1] - est.delta_hat - est.beta_hat * values[i];
        rss += r * r;
    }
    est.residual_ss = rss;
    est.gamma_hat = rss > 0.0 ? (dn - 2.0) / rss : kInf;
    est.alpha_hat = est.delta_hat / (1.0 - est.beta_hat);
    return est;
}

FisherInfo fisher_info(const CanonicalParams& u0) {
    if (!(u0.beta > 0.0 && u0.beta <= 1.0) || !(u0.gamma > 0.0))
        throw std::invalid_argument("fisher_info: need beta in (0,1] and gamma > 0");
    const double one_minus_b2 = 1.0 - u0.beta * u0.beta;
    double i_beta = one_minus_b2 > 0.0 ? 1.0 / one_minus_b2 : kInf;
    if (i_beta > 1e300) i_beta = kInf;
    return {(1.0 - u0.beta) * (1.0 - u0.beta) * u0.gamma, i_beta,
            1.0 / (2.0 * u0.gamma * u0.gamma)};
}

Variances bvm_covariance(const CanonicalParams& u0, std::size_t n) {
    if (n < 1) throw std::invalid_argument("bvm_covariance: n must be positive");
    const FisherInfo fi = fisher_info(u0);
    const double dn = static_cast<double>(n);
    return {1.0 / (dn * fi.i_alpha), 1.0 / (dn * fi.i_beta), 1.0 / (dn * fi.i_gamma)};
}

double ConjugatePrior::P(double alpha, double beta) const noexcept {
    const double d = alpha * (1.0 - beta);
    return coef[0] + coef[1] * d + coef[2] * beta + coef[3] * d * d + coef[4] * d * beta +
           coef[5] * beta * beta;
}

void ConjugatePrior::validate() const {
    if (!std::isfinite(r)) throw std::invalid_argument("conjugate prior: non-finite exponent");
    for (double c : coef)
        if (!std::isfinite(c)) throw std::invalid_argument("conjugate prior: non-finite coefficient");
    // Augmented matrix of the quadratic form in (1, delta, beta).
    const double m[3][3] = {{coef[0], 0.5 * coef[1], 0.5 * coef[2]},
                            {0.5 * coef[1], coef[3], 0.5 * coef[4]},
                            {0.5 * coef[2], 0.5 * coef[4], coef[5]}};
    const double tol = 1e-12 * (std::abs(coef[0]) + std::abs(coef[3]) + std::abs(coef[5]) + 1.0);
    const double minor1 = std::min({m[0][0], m[1][1], m[2][2]});
    const double minor2 = std::min({m[0][0] * m[1][1] - m[0][1] * m[0][1],
                                    m[0][0] * m[2][2] - m[0][2] * m[0][2],
                                    m[1][1] * m[2][2] - m[1][2] * m[1][2]});
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (minor1 < -tol || minor2 < -tol * tol || det < -tol * tol * tol)
        throw std::invalid_argument("conjugate prior: P is not nonnegative");
}

double qn_sum(std::span<const double> values, double alpha, double beta) {
    const std::size_t n = transitions(values);
    const double shift = alpha * (1.0 - beta);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = values[i + 1] - beta * values[i] - shift;
        q += r * r;
    }
    return q;
}

ConjugatePrior qn_polynomial(std::span<const double> values) {
    const std::size_t n = transitions(values);
    double sy2 = 0.0, sy = 0.0, sxy = 0.0, sx = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = values[i];
        const double y = values[i + 1];
        sy2 += y * y;
        sy += y;
        sxy += x * y;
        sx += x;
        sxx += x * x;
    }
    ConjugatePrior q;
    q.coef = {sy2, -2.0 * sy, -2.0 * sxy, static_cast<double>(n), 2.0 * sx, sxx};
    return q;
}

ConjugatePrior conjugate_update(const ConjugatePrior& prior, std::span<const double> values) {
    const ConjugatePrior q = qn_polynomial(values);
    ConjugatePrior post = prior;
    post.r += 0.5 * static_cast<double>(transitions(values));
    for (std::size_t k = 0; k < 6; ++k) post.coef[k] += q.coef[k];
    return post;
}

ConjugatePrior prior_from_first_observation(std::span<const double> values) {
    if (values.size() < 2)
        throw std::invalid_argument("prior_from_first_observation: need one transition");
    return conjugate_update(ConjugatePrior::flat(), values.first(2));
}

double log_posterior(const ConjugatePrior& prior, std::span<const double> values,
                     const CanonicalParams& u) {
    const double n = static_cast<double>(transitions(values));
    const double a = 0.5 * n + prior.r;
    const double quad = qn_sum(values, u.alpha, u.beta) + prior.P(u.alpha, u.beta);
    const double log_g = (a == 0.0) ? 0.0 : a * std::log(u.gamma);
    return log_g - 0.5 * u.gamma * quad;
}

double log_marginal_alpha_beta(const ConjugatePrior& prior, std::span<const double> values,
                               double alpha, double beta) {
    const double a = 0.5 * static_cast<double>(transitions(values)) + prior.r;
    if (!(a > -1.0)) throw std::domain_error("log_marginal_alpha_beta: gamma integral diverges");
    const double quad = qn_sum(values, alpha, beta) + prior.P(alpha, beta);
    if (!(quad > 0.0)) return kInf;
    // int_0^inf g^a exp(-g quad/2) dg = Gamma(a+1) (quad/2)^{-(a+1)}
    return std::lgamma(a + 1.0) - (a + 1.0) * std::log(0.5 * quad);
}

double qn_empirical(std::span<const double> values, double alpha, double beta) {
    const std::size_t n = transitions(values);
    if (n == 0) throw std::invalid_argument("qn_empirical: need at least one transition");
    return qn_sum(values, alpha, beta) / static_cast<double>(n);
}

double qn_limit(double alpha, double beta, const CanonicalParams& u0) {
    validate(u0);
    const double b0 = u0.beta;
    const double g0 = u0.gamma;
    const double da = u0.alpha - alpha;
    return (1.0 - beta) * (1.0 - beta) * (1.0 / (g0 * (1.0 - b0 * b0)) + da * da) +
           2.0 * beta / (g0 * (1.0 + b0));
}

double noisy_qn(std::span<const double> values, const CanonicalParams& u, double eta) {
    if (!(eta >= 0.0)) throw std::invalid_argument("noisy_qn: eta must be nonnegative");
    const std::size_t n = transitions(values);
    const double shift = u.alpha * (1.0 - u.beta);
    const double coupling = eta * u.beta * u.gamma;
    double q = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = values[i + 1] - u.beta * values[i] - shift;
        const double term = (i == 0) ? r : r + coupling * prev;
        q += term * term;
        prev = r;
    }
    return q;
}

double effective_precision(double gamma, double beta, double eta) {
    if (!(gamma > 0.0) || !(eta >= 0.0))
        throw std::invalid_argument("effective_precision: need gamma > 0, eta >= 0");
    return 1.0 / (1.0 / gamma + eta * (1.0 + beta * beta));
}

double noisy_log_posterior(const ConjugatePrior& prior, std::span<const double> values,
                           const CanonicalParams& u, double eta) {
    const double n = static_cast<double>(transitions(values));
    const double g = effective_precision(u.gamma, u.beta, eta);
    const double a = 0.5 * n + prior.r;
    return a * std::log(g) - 0.5 * g * (noisy_qn(values, u, eta) + prior.P(u.alpha, u.beta));
}

}  // namespace epiou
