#pragma once

// Small numerical kit shared by the inference modules: normal distribution
// helpers, adaptive Gauss-Legendre quadrature and weighted sample summaries.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace epiou {

inline double norm_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// P(Z <= x); exact at +-infinity.
inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(Z > x) without cancellation in the upper tail.
inline double norm_sf(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// P(lo < Z <= hi) for a standard normal, accurate in both tails.
double norm_interval(double lo, double hi) noexcept;

/// Standard normal quantile; p must lie in (0, 1).
double norm_quantile(double p);

inline double log_normal_pdf(double x, double mean, double var) noexcept {
    const double r = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

/// Adaptive Gauss-Legendre integration of f over [a, b]. The interval is
/// bisected until the 16-point rule on the halves agrees with the rule on the
/// parent to `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-13, int max_depth = 40);

struct SampleSummary {
    double mean;
    double variance;  // unbiased
};

SampleSummary summarize(std::span<const double> xs);

/// Quantile of a weighted sample (weights need not be normalized). Uses the
/// inverse of the weighted empirical CDF with linear interpolation between
/// mid-mass points; with equal weights this reduces to the usual type-5
/// sample quantile.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q);

double quantile(std::span<const double> values, double q);

/// log(sum(exp(v))) over finite and -inf entries.
double log_sum_exp(std::span<const double> v) noexcept;

}  // namespace epiou
