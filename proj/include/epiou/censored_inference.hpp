#pragma once

// Inference from threshold-filtered (binary / trinary) or stochastically
// filtered observations of an OU process, using the approximation that
// overlapping (p+1)-blocks follow the stationary Gaussian block law.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "epiou/ou_core.hpp"

namespace epiou {

/// Stationary law of (X_i, ..., X_{i+p}): mean alpha, covariance
/// gamma^{-1} / (1 - beta^2) * [beta^|i-j|].
struct StationaryBlockLaw {
    int p = 1;
    double mean = 0.0;
    double beta = 0.5;
    double gamma = 1.0;

    static StationaryBlockLaw from(const CanonicalParams& u, int p);
    double variance() const noexcept { return 1.0 / (gamma * (1.0 - beta * beta)); }
    std::vector<double> covariance() const;  ///< row-major (p+1)x(p+1)
    void validate() const;                   ///< p in {0,1,2}, beta in [0,1), gamma > 0
};

/// Observation series over the alphabet {0, ..., thresholds.size()}.
/// Y_i counts the thresholds that X(t_i) reaches.
struct BinarySeries {
    double h = 1.0;
    std::vector<int> values;
    std::vector<double> thresholds;

    std::size_t alphabet() const noexcept { return thresholds.size() + 1; }
    void validate() const;
};

/// Cell probabilities indexed by e in alphabet^{p+1}, encoded base-K with the
/// first block element most significant.
struct CellLaw {
    int p = 1;
    std::size_t alphabet = 2;
    std::vector<double> prob;

    std::size_t index(std::span<const int> e) const;
    double operator()(std::span<const int> e) const { return prob.at(index(e)); }
};

/// Probability that a block drawn from `law` falls into cell e.
/// thresholds must be strictly increasing; e.size() == p + 1.
double gaussian_cell_prob(const StationaryBlockLaw& law, std::span<const double> thresholds,
                          std::span<const int> e);

CellLaw cell_law(const CanonicalParams& u, std::span<const double> thresholds, int p);

/// Thresholding: Y_i = #{k : X_i >= c_k}.
BinarySeries threshold_filter(const Trajectory& x, std::vector<double> thresholds);

/// Overlapping block counts N(e) over the windows i = 0..N-p.
std::vector<std::size_t> block_counts(const BinarySeries& data, int p);

/// sum_e N(e) ln phi_e. A zero-probability observed cell yields -inf; the
/// number of such cells is written to *zero_cells when given.
double pseudo_loglik(const CanonicalParams& u, const BinarySeries& data, int p,
                     std::size_t* zero_cells = nullptr);

/// Same as pseudo_loglik with a precomputed law, for grid scans.
double pseudo_loglik(const CellLaw& law, std::span<const std::size_t> counts,
                     std::size_t* zero_cells = nullptr);

/// pseudo_loglik for two-threshold data; rejects any other alphabet.
double trinary_loglik(const CanonicalParams& u, const BinarySeries& data, int p);

/// sum_e phi0_e ln(phi0_e / phi_e); +inf if u misses a cell u0 charges.
double kl_filtered(const CanonicalParams& u0, const CanonicalParams& u,
                   std::span<const double> thresholds, int p);

/// The set {beta = beta0, sqrt(gamma)(c - alpha) = sqrt(gamma0)(c - alpha0)}
/// and, for p = 0, the larger set on which sqrt(gamma (1 - beta^2))(c - alpha)
/// is constant.
struct SingularSet {
    CanonicalParams u0;
    double c = 0.0;

    double alpha_at(double gamma) const;  ///< point of the set with this gamma
    CanonicalParams point(double gamma) const;

    static double invariant(const CanonicalParams& u, double c);
    static double invariant_p0(const CanonicalParams& u, double c);
};

SingularSet singular_set(const CanonicalParams& u0, double c);

/// Points (R0, Sigma) whose linear-noise canonical parameters at step h and
/// recovery rate gamma_rec share sqrt(gamma)(c - alpha) with u0. One point is
/// returned per entry of r0_values (each > 1); c must be positive.
std::vector<std::pair<double, double>> singular_curve_in_sis_plane(
    const CanonicalParams& u0, double c, double gamma_rec, double h,
    std::span<const double> r0_values);

/// Y_i = 1{xi_i <= s(X_i)} with independent uniforms xi_i. Throws
/// std::domain_error if s leaves [0, 1].
BinarySeries sigmoid_filter_sample(const Trajectory& x, const std::function<double(double)>& s,
                                   std::uint64_t seed);

/// 1 / (1 + exp(-(x - c) / w)).
std::function<double(double)> logistic_response(double c, double w);

/// (pseudo_loglik at (alpha, c), pseudo_loglik at (alpha + t, c + t)) on
/// the same observations.
std::pair<double, double> filter_shift_check(const CanonicalParams& u, double c, double t,
                                             const BinarySeries& data, int p);

}  // namespace epiou
