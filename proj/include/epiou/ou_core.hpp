#pragma once

// Ornstein-Uhlenbeck process dX = (k - mu X) dt + sigma dW.
//
// Two parameterizations are used throughout the library:
//   OuParams        (k, mu, sigma)  -- continuous-time drift/diffusion form
//   CanonicalParams (alpha, beta, gamma) at sampling step h -- the exact
//                   AR(1) form  X_{i+1} = beta X_i + alpha (1 - beta) + gamma^{-1/2} xi_i
// with alpha = k/mu, beta = exp(-mu h), gamma = (2 mu / sigma^2) / (1 - exp(-2 mu h)).

#include <cstddef>
#include <cstdint>
#include <vector>

namespace epiou {

struct OuParams {
    double k = 0.0;      ///< drift offset (state/time)
    double mu = 1.0;     ///< mean-reversion rate (1/time)
    double sigma = 1.0;  ///< diffusion amplitude (state/sqrt(time))
};

struct CanonicalParams {
    double alpha = 0.0;  ///< stationary mean
    double beta = 0.5;   ///< one-step autocorrelation, in (0,1)
    double gamma = 1.0;  ///< conditional precision of one AR(1) step
    double h = 1.0;      ///< sampling step
};

/// Uniformly sampled path. values[i] is the state at t0 + i*h.
struct Trajectory {
    double t0 = 0.0;
    double h = 1.0;
    std::vector<double> values;
    std::uint64_t seed = 0;

    double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * h; }
    std::size_t size() const noexcept { return values.size(); }
};

/// Strict validation requires sigma > 0; the relaxed mode admits sigma == 0
/// so samplers can produce deterministic reference paths.
enum class NoiseCheck { strict, allow_zero };

void validate(const OuParams& p, NoiseCheck mode = NoiseCheck::strict);
void validate(const CanonicalParams& u);

struct MeanCov {
    double mean;
    double cov;
};

/// E[X_t] and Cov[X_t, X_s] for X_0 = x0. Times may be +infinity, which
/// yields the stationary limit N(k/mu, sigma^2 / 2mu).
MeanCov ou_mean_cov(const OuParams& p, double x0, double t, double s);

/// Stationary mean and variance of the process.
MeanCov ou_stationary(const OuParams& p);

/// Mean of the n-th forward Euler iterate and Cov(X_n, X_{n+lag}).
MeanCov euler_mean_cov(const OuParams& p, double x0, double dt, std::size_t n, std::size_t lag = 0);

/// Exact sampling on the grid t_i = i*h via the AR(1) recursion. Returns
/// n+1 values starting with x0; one normal variate is consumed per step.
Trajectory sample_exact(const OuParams& p, double x0, double h, std::size_t n, std::uint64_t seed,
                        NoiseCheck mode = NoiseCheck::allow_zero);

/// Forward Euler path X_{n+1} = X_n + (k - mu X_n) dt + sigma dW_n; n+1 values.
/// Throws std::domain_error unless mu*dt < 1.
Trajectory sample_euler(const OuParams& p, double x0, double dt, std::size_t n, std::uint64_t seed,
                        NoiseCheck mode = NoiseCheck::allow_zero);

/// Parameters of the exact OU process whose grid samples have the same law
/// as the Euler scheme run with `p` and step dt. Requires mu*dt < 1.
OuParams perturbed_params(const OuParams& p, double dt);

/// Inverse of perturbed_params: Euler with the returned parameters samples
/// `target` exactly on the grid.
OuParams exactifying_params(const OuParams& target, double dt);

CanonicalParams to_canonical(const OuParams& p, double h);
OuParams from_canonical(const CanonicalParams& u);

}  // namespace epiou
