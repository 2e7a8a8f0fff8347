#include "epiou/ou_core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "epiou/random.hpp"

namespace epiou {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
}

}  // namespace

void validate(const OuParams& p, NoiseCheck mode) {
    require_finite(p.k, "k");
    require_finite(p.mu, "mu");
    require_finite(p.sigma, "sigma");
    if (!(p.mu > 0.0)) throw std::invalid_argument("OU parameters: mu must be positive");
    if (mode == NoiseCheck::strict ? !(p.sigma > 0.0) : !(p.sigma >= 0.0))
        throw std::invalid_argument("OU parameters: sigma must be positive");
}

void validate(const CanonicalParams& u) {
    require_finite(u.alpha, "alpha");
    if (!(u.beta > 0.0 && u.beta < 1.0))
        throw std::invalid_argument("canonical parameters: beta must lie in (0,1)");
    if (!(u.gamma > 0.0)) throw std::invalid_argument("canonical parameters: gamma must be positive");
    if (!(u.h > 0.0) || !std::isfinite(u.h))
        throw std::invalid_argument("canonical parameters: h must be positive");
}

MeanCov ou_mean_cov(const OuParams& p, double x0, double t, double s) {
    validate(p, NoiseCheck::allow_zero);
    require_finite(x0, "x0");
    if (std::isnan(t) || std::isnan(s) || t < 0.0 || s < 0.0)
        throw std::invalid_argument("ou_mean_cov: times must be non-negative");
    const double decay_t = std::exp(-p.mu * t);
    const double mean = p.k / p.mu * (1.0 - decay_t) + decay_t * x0;
    const double lag = (t == s) ? 0.0 : std::abs(t - s);
    const double cov =
        p.sigma * p.sigma / (2.0 * p.mu) * (std::exp(-p.mu * lag) - std::exp(-p.mu * (t + s)));
    return {mean, cov};
}

MeanCov ou_stationary(const OuParams& p) {
    validate(p, NoiseCheck::allow_zero);
    return {p.k / p.mu, p.sigma * p.sigma / (2.0 * p.mu)};
}

MeanCov euler_mean_cov(const OuParams& p, double x0, double dt, std::size_t n, std::size_t lag) {
    validate(p, NoiseCheck::allow_zero);
    const double a = 1.0 - p.mu * dt;
    const double alpha = p.k / p.mu;
    const double an = std::pow(a, static_cast<double>(n));
    const double mean = alpha + an * (x0 - alpha);
    const double cov = p.sigma * p.sigma * dt / (1.0 - a * a) * (1.0 - an * an) *
                       std::pow(a, static_cast<double>(lag));
    return {mean, cov};
}

Trajectory sample_exact(const OuParams& p, double x0, double h, std::size_t n, std::uint64_t seed,
                        NoiseCheck mode) {
    validate(p, mode);
    require_finite(x0, "x0");
    if (!(h > 0.0)) throw std::invalid_argument("sample_exact: h must be positive");
    if (n < 1) throw std::invalid_argument("sample_exact: need at least one step");

    const CanonicalParams u = to_canonical(p, h);
    const double shift = u.alpha * (1.0 - u.beta);
    const double noise_sd = 1.0 / std::sqrt(u.gamma);  // zero when sigma == 0

    Trajectory tr{0.0, h, {}, seed};
    tr.values.reserve(n + 1);
    tr.values.push_back(x0);
    Rng rng(seed);
    double x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        x = u.beta * x + shift + noise_sd * rng.normal();
        tr.values.push_back(x);
    }
    return tr;
}

Trajectory sample_euler(const OuParams& p, double x0, double dt, std::size_t n, std::uint64_t seed,
                        NoiseCheck mode) {
    validate(p, mode);
    require_finite(x0, "x0");
    if (!(dt > 0.0)) throw std::invalid_argument("sample_euler: dt must be positive");
    if (!(p.mu * dt < 1.0))
        throw std::domain_error("sample_euler: requires dt < 1/mu for a well-defined backward map");
    if (n < 1) throw std::invalid_argument("sample_euler: need at least one step");

    Trajectory tr{0.0, dt, {}, seed};
    tr.values.reserve(n + 1);
    tr.values.push_back(x0);
    Rng rng(seed);
    const double noise_sd = p.sigma * std::sqrt(dt);
    double x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        x += (p.k - p.mu * x) * dt + noise_sd * rng.normal();
        tr.values.push_back(x);
    }
    return tr;
}

OuParams perturbed_params(const OuParams& p, double dt) {
    validate(p, NoiseCheck::allow_zero);
    if (!(dt > 0.0)) throw std::invalid_argument("perturbed_params: dt must be positive");
    const double mdt = p.mu * dt;
    if (!(mdt < 1.0)) throw std::domain_error("perturbed_params: requires mu*dt < 1");
    const double log_a = std::log1p(-mdt);  // log(1 - mu dt) < 0
    OuParams out;
    out.mu = -log_a / dt;
    out.k = -p.k * log_a / mdt;
    out.sigma = std::sqrt(-2.0 * p.sigma * p.sigma * log_a / (2.0 * mdt - mdt * mdt));
    return out;
}

OuParams exactifying_params(const OuParams& target, double dt) {
    validate(target, NoiseCheck::allow_zero);
    if (!(dt > 0.0)) throw std::invalid_argument("exactifying_params: dt must be positive");
    OuParams out;
    out.mu = -std::expm1(-dt * target.mu) / dt;
    out.k = out.mu * target.k / target.mu;
    out.sigma = std::sqrt(target.sigma * target.sigma * (2.0 - dt * out.mu) * out.mu /
                          (2.0 * target.mu));
    return out;
}

CanonicalParams to_canonical(const OuParams& p, double h) {
    validate(p, NoiseCheck::allow_zero);
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("to_canonical: h must be positive");
    CanonicalParams u;
    u.h = h;
    u.alpha = p.k / p.mu;
    u.beta = std::exp(-p.mu * h);
    const double s2 = p.sigma * p.sigma;
    u.gamma = s2 > 0.0 ? (2.0 * p.mu / s2) / (-std::expm1(-2.0 * p.mu * h))
                       : std::numeric_limits<double>::infinity();
    return u;
}

OuParams from_canonical(const CanonicalParams& u) {
    validate(u);
    OuParams p;
    p.mu = -std::log(u.beta) / u.h;
    p.k = u.alpha * p.mu;
    p.sigma = std::sqrt(2.0 * p.mu / (u.gamma * (1.0 - u.beta * u.beta)));
    return p;
}

}  // namespace epiou
