#include "epiou/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace epiou {

namespace {

constexpr int kOrder = 16;

struct GaussLegendre {
    std::array<double, kOrder> nodes{};
    std::array<double, kOrder> weights{};

    GaussLegendre() {
        // Newton iteration on P_n starting from the Chebyshev guess.
        for (int i = 0; i < kOrder; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= kOrder; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const GaussLegendre& rule() {
    static const GaussLegendre gl;
    return gl;
}

double apply_rule(const std::function<double(double)>& f, double a, double b) {
    const auto& gl = rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int i = 0; i < kOrder; ++i) sum += gl.weights[i] * f(mid + half * gl.nodes[i]);
    return sum * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole,
             double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = apply_rule(f, a, m);
    const double right = apply_rule(f, m, b);
    const double both = left + right;
    if (depth <= 0 || std::abs(both - whole) <= tol) return both;
    return adapt(f, a, m, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double norm_interval(double lo, double hi) noexcept {
    if (!(hi > lo)) return 0.0;
    // Work in whichever tail keeps both terms small.
    if (lo >= 0.0) return norm_sf(lo) - norm_sf(hi);
    if (hi <= 0.0) return norm_cdf(hi) - norm_cdf(lo);
    return 1.0 - norm_cdf(lo) - norm_sf(hi);
}

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p must lie in (0,1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 int max_depth) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, abs_tol, max_depth);
    return adapt(f, a, b, apply_rule(f, a, b), abs_tol, max_depth);
}

SampleSummary summarize(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("summarize: need at least two samples");
    // Welford
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    return {mean, m2 / static_cast<double>(n - 1)};
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q) {
    if (values.empty() || values.size() != weights.size())
        throw std::invalid_argument("weighted_quantile: size mismatch or empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("weighted_quantile: q outside [0,1]");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("weighted_quantile: zero total weight");

    // Mid-mass position of each sorted point.
    double cum = 0.0;
    double prev_pos = 0.0;
    double prev_val = values[order.front()];
    bool first = true;
    for (std::size_t idx : order) {
        const double w = weights[idx] / total;
        const double pos = cum + 0.5 * w;
        cum += w;
        if (q <= pos) {
            if (first) return values[idx];
            const double span = pos - prev_pos;
            const double frac = span > 0.0 ? (q - prev_pos) / span : 1.0;
            return prev_val + frac * (values[idx] - prev_val);
        }
        first = false;
        prev_pos = pos;
        prev_val = values[idx];
    }
    return values[order.back()];
}

double quantile(std::span<const double> values, double q) {
    const std::vector<double> w(values.size(), 1.0);
    return weighted_quantile(values, w, q);
}

double log_sum_exp(std::span<const double> v) noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace epiou
