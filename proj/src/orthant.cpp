#include "epiou/orthant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "epiou/numerics.hpp"

namespace epiou {

namespace {

constexpr double kTail = 9.0;  // standard-normal mass beyond 9 SD is below 1e-18

void check_rho(double rho) {
    if (!(std::abs(rho) < 1.0)) throw std::domain_error("bivariate normal: |rho| must be below 1");
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
    check_rho(rho);
    if (std::isnan(h) || std::isnan(k)) throw std::invalid_argument("bvn_cdf: NaN limit");
    if (h == -INFINITY || k == -INFINITY) return 0.0;
    if (h == INFINITY) return norm_cdf(k);
    if (k == INFINITY) return norm_cdf(h);
    h = std::clamp(h, -40.0, 40.0);
    k = std::clamp(k, -40.0, 40.0);
    const double base = norm_cdf(h) * norm_cdf(k);
    if (rho == 0.0) return base;
    const double hh = h * h + k * k;
    const double hk = 2.0 * h * k;
    auto integrand = [hh, hk](double t) {
        const double c = std::cos(t);
        return std::exp(-(hh - hk * std::sin(t)) / (2.0 * c * c));
    };
    const double upper = std::asin(rho);
    const double value = base + integrate(integrand, 0.0, upper, 1e-14) / (2.0 * std::numbers::pi);
    return std::clamp(value, 0.0, 1.0);
}

double bvn_box(const Interval& a, const Interval& b, double rho) {
    if (!(a.hi > a.lo) || !(b.hi > b.lo)) return 0.0;
    const double p = bvn_cdf(a.hi, b.hi, rho) - bvn_cdf(a.lo, b.hi, rho) -
                     bvn_cdf(a.hi, b.lo, rho) + bvn_cdf(a.lo, b.lo, rho);
    return std::clamp(p, 0.0, 1.0);
}

double ar1_triple_box(const Interval& a, const Interval& b, const Interval& c, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("ar1_triple_box: beta must lie in [0,1)");
    if (!(a.hi > a.lo) || !(b.hi > b.lo) || !(c.hi > c.lo)) return 0.0;
    const double s = std::sqrt(1.0 - beta * beta);
    auto cond = [beta, s](const Interval& iv, double x) {
        return norm_interval((iv.lo - beta * x) / s, (iv.hi - beta * x) / s);
    };
    auto integrand = [&](double x) { return norm_pdf(x) * cond(a, x) * cond(c, x); };
    const double lo = std::max(b.lo, -kTail);
    const double hi = std::min(b.hi, kTail);
    if (!(hi > lo)) return 0.0;
    // Split at zero and at the finite band edges so each panel is smooth.
    double knots[5] = {lo, hi, 0.0, 0.0, 0.0};
    int nk = 2;
    auto add = [&](double x) {
        if (x > lo && x < hi) knots[nk++] = x;
    };
    add(0.0);
    if (std::isfinite(a.lo) && beta > 0.0) add(a.lo / beta);
    if (std::isfinite(a.hi) && beta > 0.0) add(a.hi / beta);
    std::sort(knots, knots + nk);
    double total = 0.0;
    for (int i = 0; i + 1 < nk; ++i) total += integrate(integrand, knots[i], knots[i + 1], 1e-14);
    return std::clamp(total, 0.0, 1.0);
}

}  // namespace epiou
