#include "epiou/state_filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "epiou/numerics.hpp"

namespace epiou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassFloor = 1e-300;

std::size_t steps_per_interval(double h, double dt) {
    if (!(dt > 0.0) || !(h > 0.0)) throw std::invalid_argument("kalman: h and dt must be positive");
    const double ratio = h / dt;
    const double r = std::round(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("kalman: dt must divide the observation spacing");
    return static_cast<std::size_t>(r);
}

// Mass of N(mean, var) on (lo, hi]; a zero variance is a point mass.
double gauss_mass(double mean, double var, double lo, double hi) {
    if (var <= 0.0) return (mean > lo && mean <= hi) ? 1.0 : 0.0;
    const double sd = std::sqrt(var);
    return norm_interval((lo - mean) / sd, (hi - mean) / sd);
}

}  // namespace

bool kalman_predict(KalmanState& st, const SisParams& p, double dt) {
    const double s = p.sigma_pop;
    const double b = p.beta_tx;
    const double g = p.gamma_rec;
    const double m = st.mean;
    const double drift = 1.0 + dt * b / s * (s - m) - dt * g;
    const double jac = 1.0 + dt * b - dt * g - 2.0 * dt * b * m / s;
    const double q = std::max((dt * b / s * (s - m) + dt * g) * m, 0.0);
    st.mean = drift * m;
    st.variance = jac * jac * st.variance + q;
    if (st.mean < 0.0 || st.mean > s) {
        st.mean = std::clamp(st.mean, 0.0, s);
        return true;
    }
    return false;
}

FilterResult kalman_loglik(const SisParams& p, const Trajectory& data, double dt) {
    p.validate();
    const std::size_t steps = steps_per_interval(data.h, dt);
    FilterResult out;
    KalmanState st;
    for (std::size_t i = 0; i + 1 < data.values.size(); ++i) {
        st.mean = data.values[i];
        st.variance = 0.0;
        for (std::size_t k = 0; k < steps; ++k)
            if (kalman_predict(st, p, dt)) ++out.clamped;
        const double y = data.values[i + 1];
        if (st.variance <= 0.0) {
            // Degenerate predictive (e.g. extinct state): only the exact mean is possible.
            if (y != st.mean) {
                out.log_lik = -kInf;
                return out;
            }
            continue;
        }
        st.log_lik_accum += log_normal_pdf(y, st.mean, st.variance);
    }
    out.log_lik = st.log_lik_accum;
    return out;
}

ParticleCloud stationary_cloud(const SisParams& p, std::size_t m) {
    p.validate();
    if (m < 2) throw std::invalid_argument("particle filter needs at least 2 particles");
    const double r0 = p.r0();
    if (!(r0 > 1.0)) throw std::domain_error("particle filter: stationary law requires R0 > 1");
    const double mean = p.sigma_pop * (1.0 - 1.0 / r0);
    const double sd = std::sqrt(p.sigma_pop / r0);
    ParticleCloud cloud;
    cloud.centers.resize(m);
    cloud.weights.assign(m, 1.0 / static_cast<double>(m));
    cloud.variances.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        cloud.centers[i] = mean + sd * norm_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
    return cloud;
}

FilterResult particle_kalman_binary_loglik(const SisParams& p, const BinarySeries& data, double c,
                                           std::size_t m, double dt) {
    data.validate();
    if (data.alphabet() != 2) throw std::invalid_argument("particle filter expects binary data");
    if (!(c > 0.0 && c < p.sigma_pop)) throw std::invalid_argument("particle filter: c must lie in (0, Sigma)");
    const std::size_t steps = steps_per_interval(data.h, dt);
    ParticleCloud cloud = stationary_cloud(p, m);
    FilterResult out;
    if (data.values.empty()) return out;

    std::vector<double> edges(m + 1);
    edges[0] = -kInf;
    edges[m] = kInf;
    for (std::size_t j = 1; j < m; ++j) edges[j] = 0.5 * (cloud.centers[j - 1] + cloud.centers[j]);

    // Propagated Gaussian of each particle over one interval.
    std::vector<double> pmean(m);
    for (std::size_t i = 0; i < m; ++i) {
        KalmanState st{cloud.centers[i], 0.0, 0.0};
        for (std::size_t k = 0; k < steps; ++k)
            if (kalman_predict(st, p, dt)) ++out.clamped;
        pmean[i] = st.mean;
        cloud.variances[i] = st.variance;
    }

    // trans[y][i * m + j]: mass moved from particle i into cell j on side y of c.
    std::vector<double> trans[2] = {std::vector<double>(m * m), std::vector<double>(m * m)};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double lo = edges[j], hi = edges[j + 1];
            trans[0][i * m + j] = lo < c ? gauss_mass(pmean[i], cloud.variances[i], lo, std::min(hi, c)) : 0.0;
            trans[1][i * m + j] = hi > c ? gauss_mass(pmean[i], cloud.variances[i], std::max(lo, c), hi) : 0.0;
        }

    const double smean = p.sigma_pop * (1.0 - 1.0 / p.r0());
    const double svar = p.sigma_pop / p.r0();
    std::vector<double> next(m);
    for (std::size_t t = 0; t < data.values.size(); ++t) {
        const int y = data.values[t];
        if (t == 0) {
            for (std::size_t j = 0; j < m; ++j) {
                const double lo = edges[j], hi = edges[j + 1];
                next[j] = y == 1 ? (hi > c ? gauss_mass(smean, svar, std::max(lo, c), hi) : 0.0)
                                 : (lo < c ? gauss_mass(smean, svar, lo, std::min(hi, c)) : 0.0);
            }
        } else {
            std::fill(next.begin(), next.end(), 0.0);
            const auto& tr = trans[y];
            for (std::size_t i = 0; i < m; ++i) {
                const double w = cloud.weights[i];
                if (w == 0.0) continue;
                const double* row = &tr[i * m];
                for (std::size_t j = 0; j < m; ++j) next[j] += w * row[j];
            }
        }
        double mass = 0.0;
        for (double v : next) mass += v;
        if (!(mass >= kMassFloor)) {
            out.log_lik = -kInf;
            out.underflow = true;
            return out;
        }
        out.log_lik += std::log(mass);
        for (std::size_t j = 0; j < m; ++j) cloud.weights[j] = next[j] / mass;
    }
    return out;
}

}  // namespace epiou
