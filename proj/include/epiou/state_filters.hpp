#pragma once

// Likelihoods of SIS parameters from observed infection counts: a Kalman
// filter on the Euler-discretized Langevin equation for exact state
// observations, and a grid-of-particles version of the same filter for
// thresholded (binary) observations.

#include <cstddef>
#include <vector>

#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/ou_core.hpp"

namespace epiou {

struct KalmanState {
    double mean = 0.0;
    double variance = 0.0;
    double log_lik_accum = 0.0;
};

/// One Euler step of the linearized Langevin dynamics
///   I' = (1 + dt b/S (S - I) - dt g) I + w,  Var w = [dt b/S (S - I) + dt g] I,
/// with the variance propagated through the Jacobian. The mean is clamped to
/// [0, S]; returns true when clamping occurred.
bool kalman_predict(KalmanState& st, const SisParams& p, double dt);

struct FilterResult {
    double log_lik = 0.0;
    std::size_t clamped = 0;    ///< mean excursions outside [0, Sigma]
    bool underflow = false;     ///< particle filter: surviving mass below 1e-300
};

/// Log-likelihood of exact observations data.values at spacing data.h.
/// Each interval starts from the observed value with zero variance and takes
/// h/dt Euler steps; h/dt must be an integer.
FilterResult kalman_loglik(const SisParams& p, const Trajectory& data, double dt);
inline FilterResult kalman_loglik(const SisParams& p, const Trajectory& data) {
    return kalman_loglik(p, data, data.h / 4.0);
}

struct ParticleCloud {
    std::vector<double> centers;
    std::vector<double> weights;
    std::vector<double> variances;
};

/// M particles at the (i - 1/2)/M quantiles of the stationary linear-noise
/// law N(Sigma (1 - 1/R0), Sigma / R0), equal weights and zero variance.
/// Requires R0 > 1 and M >= 2.
ParticleCloud stationary_cloud(const SisParams& p, std::size_t m);

/// Log-likelihood of binary observations Y_i = 1{I(t_i) >= c}.
///
/// The state axis is split into M cells around the stationary particles
/// (boundaries at midpoints between centers). Over each interval a particle
/// restarts at its center, is propagated by kalman_predict, and its Gaussian
/// is integrated over every cell on both sides of c. Assimilation keeps the
/// mass on the observed side and renormalizes; the log of the surviving mass
/// accumulates. The first observation is scored against the stationary law.
FilterResult particle_kalman_binary_loglik(const SisParams& p, const BinarySeries& data, double c,
                                           std::size_t m, double dt);
inline FilterResult particle_kalman_binary_loglik(const SisParams& p, const BinarySeries& data, double c,
                                                  std::size_t m = 100) {
    return particle_kalman_binary_loglik(p, data, c, m, data.h / 4.0);
}

}  // namespace epiou
