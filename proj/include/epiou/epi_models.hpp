#pragma once

// SIS and SIS_E epidemic models: deterministic ODEs, exact stochastic
// simulation of the jump process, and the linear-noise map from SIS to the
// OU meta-model.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "epiou/ou_core.hpp"
#include "epiou/random.hpp"

namespace epiou {

struct SisParams {
    double beta_tx = 1.5;     ///< transmission rate
    double gamma_rec = 1.0;   ///< recovery rate
    double sigma_pop = 1000;  ///< total population

    static SisParams from_r0(double r0, double gamma_rec, double sigma_pop) {
        return {r0 * gamma_rec, gamma_rec, sigma_pop};
    }
    double r0() const noexcept { return beta_tx / gamma_rec; }
    /// Nontrivial ODE equilibrium sigma_pop (1 - 1/r0).
    double endemic_level() const noexcept { return sigma_pop * (1.0 - 1.0 / r0()); }
    void validate() const;
};

struct SiseParams {
    double beta_tx = 0.5;     ///< transmission per unit infectious pressure
    double gamma_rec = 0.1;
    double rho = 1.0;         ///< decay rate of the pressure
    double sigma_pop = 1000;

    double r0() const noexcept;  ///< sqrt(beta / (gamma rho))
    void validate() const;
};

struct CtmcState {
    long i_count = 0;
    double phi = 0.0;
    double t = 0.0;
};

/// Recorded jump path. `phi` is empty for SIS; for SIS_E it holds the
/// pressure right after each recorded time.
struct EventPath {
    std::vector<double> t;
    std::vector<long> i_count;
    std::vector<double> phi;
};

// Single-compartment steppers used by the simulators and the network model.
// They advance (s, i[, phi]) from `t` to `t_to` and return the number of
// jump events. The population is s + i, which may change between calls.
std::size_t advance_sis(long& s, long& i, double& t, double t_to, double beta, double gamma,
                        Rng& rng);
std::size_t advance_sise(long& s, long& i, double& phi, double& t, double t_to, double beta,
                         double gamma, double rho, Rng& rng);

/// Gillespie direct-method path of S + I -> 2I (rate beta S I / Sigma) and
/// I -> S (rate gamma I) up to t_end. Every jump is recorded.
EventPath simulate_ctmc_sis(const SisParams& p, long i0, double t_end, std::uint64_t seed);

/// Jump path of SIS_E: infection at rate beta S phi, recovery gamma I, and
/// phi' = I/Sigma - rho phi integrated exactly between jumps (thinning).
EventPath simulate_ctmc_sise(const SiseParams& p, long i0, double phi0, double t_end,
                             std::uint64_t seed);

/// I(t) of a SIS chain observed on t = 0, h, ..., n h (n+1 values) without
/// storing the jump path.
Trajectory sample_ctmc_sis(const SisParams& p, long i0, double h, std::size_t n,
                           std::uint64_t seed);

/// Piecewise-constant state of an event path on a grid.
Trajectory sample_path(const EventPath& path, double h, std::size_t n);

enum class EpiModel { sis, sise };

struct OdeSolution {
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> i;
    std::vector<double> phi;  ///< empty for SIS
};

/// Fixed-step RK4 on the output grid, with 100 internal steps per grid
/// interval. Throws std::runtime_error if S + I drifts from Sigma by more
/// than 1e-6 relative.
OdeSolution solve_ode_sis(const SisParams& p, double i0, const std::vector<double>& t_grid);
OdeSolution solve_ode_sise(const SiseParams& p, double i0, double phi0,
                           const std::vector<double>& t_grid);

/// Linear-noise OU approximation of I: k = g S (R0-1)^2/R0, mu = g (R0-1),
/// sigma^2 = 2 g S (R0-1)/R0. Requires R0 > 1.
OuParams sis_to_ou(const SisParams& p);

/// Canonical parameters of the linear-noise OU sampled at step h.
CanonicalParams sis_to_canonical(const SisParams& p, double h);

/// Inverse of sis_to_canonical.
SisParams ou_to_sis(const CanonicalParams& u);

/// R0 implied by the stationary mean: 1 / (1 - alpha / Sigma).
double r0_of_alpha(double alpha, double sigma_pop);

/// Linearized posterior variance of R0 from n full-state samples at step h.
double var_r0_asymptotic(const SisParams& p, double h, std::size_t n);

}  // namespace epiou
