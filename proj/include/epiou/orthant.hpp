#pragma once

// Box probabilities of low-dimensional standardized Gaussian vectors with
// AR(1) correlation structure (correlation beta^|i-j|).

#include <array>
#include <cstddef>

namespace epiou {

struct Interval {
    double lo;  ///< may be -infinity
    double hi;  ///< may be +infinity
};

/// P(X <= h, Y <= k) for standard normals with correlation rho, |rho| < 1.
/// Uses the single-integral form
///   Phi(h) Phi(k) + 1/(2 pi) int_0^{asin rho} exp(-(h^2 + k^2 - 2hk sin t) / (2 cos^2 t)) dt
/// evaluated by adaptive Gauss-Legendre quadrature.
double bvn_cdf(double h, double k, double rho);

/// P(X in a, Y in b) for the same pair, by inclusion-exclusion.
double bvn_box(const Interval& a, const Interval& b, double rho);

/// P(X1 in a, X2 in b, X3 in c) for a standardized stationary AR(1) triple
/// with lag-one correlation beta. X1 and X3 are conditionally independent
/// given X2, which reduces the probability to one integral over X2.
double ar1_triple_box(const Interval& a, const Interval& b, const Interval& c, double beta);

}  // namespace epiou
