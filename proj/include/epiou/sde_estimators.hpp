#pragma once

// Full-information inference for the exact AR(1) form of the OU process:
// least-squares / maximum-likelihood fit, Fisher information, the conjugate
// prior family and its posterior, and the large-sample limit of the scaled
// quadratic form q_N.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "epiou/ou_core.hpp"

namespace epiou {

/// Thrown when the least-squares design matrix is rank deficient.
class DegenerateDataError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct LsqEstimate {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double gamma_hat = 0.0;    ///< (n - 2) / residual_ss; +inf for an exact fit
    double delta_hat = 0.0;    ///< alpha_hat * (1 - beta_hat), the fitted intercept
    double residual_ss = 0.0;
    std::size_t n = 0;         ///< number of transitions d_i -> d_{i+1}
};

/// Regresses d_{i+1} on [1, d_i]. Needs at least 3 transitions and a
/// non-constant regressor; throws DegenerateDataError otherwise.
LsqEstimate lsq_fit(std::span<const double> values);
inline LsqEstimate lsq_fit(const Trajectory& data) { return lsq_fit(data.values); }

struct FisherInfo {
    double i_alpha;
    double i_beta;
    double i_gamma;
};

/// Per-transition Fisher information diag((1-b)^2 g, 1/(1-b^2), 1/(2 g^2)).
/// beta == 1 is admitted and gives i_beta = +inf.
FisherInfo fisher_info(const CanonicalParams& u0);

struct Variances {
    double alpha;
    double beta;
    double gamma;
};

/// Asymptotic estimator variances, the diagonal of Sigma^{-1} / n.
Variances bvm_covariance(const CanonicalParams& u0, std::size_t n);

/// Prior density proportional to gamma^r exp(-gamma/2 P(alpha, beta)).
///
/// P is stored as a quadratic in (delta, beta) with delta = alpha (1 - beta),
/// coefficients on the basis (1, delta, beta, delta^2, delta beta, beta^2).
/// Written in alpha this has degree <= 2. The AR(1) residual is affine in
/// (delta, beta), so Q_N lives in the same basis.
struct ConjugatePrior {
    double r = 0.0;
    std::array<double, 6> coef{};

    static ConjugatePrior flat() { return {}; }

    double P(double alpha, double beta) const noexcept;

    /// Checks P >= 0 through positive semidefiniteness of its 3x3 augmented
    /// matrix, a sufficient condition for nonnegativity everywhere.
    void validate() const;
};

/// Q_N(alpha, beta) = sum_i (d_{i+1} - beta d_i - alpha (1 - beta))^2.
double qn_sum(std::span<const double> values, double alpha, double beta);

/// Q_N expressed in the ConjugatePrior basis (r = 0).
ConjugatePrior qn_polynomial(std::span<const double> values);

/// Posterior hyperparameters after observing `values`: r + N/2, P + Q_N.
ConjugatePrior conjugate_update(const ConjugatePrior& prior, std::span<const double> values);

/// Proper prior built from the first transition of `values` under a flat
/// prior; continue updating with the remaining data (values[1..]).
ConjugatePrior prior_from_first_observation(std::span<const double> values);

/// Unnormalized log posterior (N/2 + r) ln gamma - gamma/2 (Q_N + P).
double log_posterior(const ConjugatePrior& prior, std::span<const double> values,
                     const CanonicalParams& u);

/// log of the posterior with gamma integrated out in closed form (a Gamma
/// integral), up to the same constant for all (alpha, beta).
double log_marginal_alpha_beta(const ConjugatePrior& prior, std::span<const double> values,
                               double alpha, double beta);

/// q_N = Q_N / N on the data.
double qn_empirical(std::span<const double> values, double alpha, double beta);

/// Large-N limit f(alpha, beta) of q_N for stationary data generated by u0.
double qn_limit(double alpha, double beta, const CanonicalParams& u0);

/// First-order correction of Q_N for data observed with additive N(0, eta)
/// noise. The gamma entering the correction term is u.gamma.
double noisy_qn(std::span<const double> values, const CanonicalParams& u, double eta);

/// Precision replacing gamma under measurement noise: 1 / (1/gamma + eta (1 + beta^2)).
double effective_precision(double gamma, double beta, double eta);

/// log posterior with the first-order measurement-noise correction applied.
double noisy_log_posterior(const ConjugatePrior& prior, std::span<const double> values,
                           const CanonicalParams& u, double eta);

}  // namespace epiou
