#include "epiou/censored_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "epiou/numerics.hpp"
#include "epiou/orthant.hpp"
#include "epiou/random.hpp"

namespace epiou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw std::invalid_argument("at least one threshold is required");
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (!std::isfinite(thresholds[k])) throw std::invalid_argument("thresholds must be finite");
        if (k > 0 && !(thresholds[k] > thresholds[k - 1]))
            throw std::invalid_argument("thresholds must be strictly increasing");
    }
}

// Standardized band edges {-inf, A_1, ..., A_m, +inf}.
std::vector<double> standard_edges(const StationaryBlockLaw& law, std::span<const double> thresholds) {
    const double scale = 1.0 / std::sqrt(law.variance());
    std::vector<double> edges;
    edges.reserve(thresholds.size() + 2);
    edges.push_back(-kInf);
    for (double c : thresholds) edges.push_back((c - law.mean) * scale);
    edges.push_back(kInf);
    return edges;
}

Interval band(const std::vector<double>& edges, int e) {
    if (e < 0 || static_cast<std::size_t>(e) + 1 >= edges.size())
        throw std::out_of_range("cell symbol outside the alphabet");
    return {edges[e], edges[e + 1]};
}

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

}  // namespace

StationaryBlockLaw StationaryBlockLaw::from(const CanonicalParams& u, int p) {
    StationaryBlockLaw law{p, u.alpha, u.beta, u.gamma};
    law.validate();
    return law;
}

std::vector<double> StationaryBlockLaw::covariance() const {
    const std::size_t n = static_cast<std::size_t>(p) + 1;
    std::vector<double> cov(n * n);
    const double v = variance();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cov[i * n + j] = v * std::pow(beta, static_cast<double>(i > j ? i - j : j - i));
    return cov;
}

void StationaryBlockLaw::validate() const {
    if (p < 0 || p > 2) throw std::invalid_argument("block order p must be 0, 1 or 2");
    if (!std::isfinite(mean)) throw std::invalid_argument("block law mean must be finite");
    if (!(beta >= 0.0 && beta < 1.0) || !(gamma > 0.0) || !std::isfinite(gamma))
        throw std::domain_error("block covariance is not positive definite");
}

void BinarySeries::validate() const {
    check_thresholds(thresholds);
    if (!(h > 0.0)) throw std::invalid_argument("series step must be positive");
    const int k = static_cast<int>(thresholds.size());
    for (int y : values)
        if (y < 0 || y > k) throw std::invalid_argument("series symbol outside the alphabet");
}

std::size_t CellLaw::index(std::span<const int> e) const {
    if (e.size() != static_cast<std::size_t>(p) + 1) throw std::invalid_argument("cell has wrong length");
    std::size_t idx = 0;
    for (int s : e) {
        if (s < 0 || static_cast<std::size_t>(s) >= alphabet)
            throw std::out_of_range("cell symbol outside the alphabet");
        idx = idx * alphabet + static_cast<std::size_t>(s);
    }
    return idx;
}

double gaussian_cell_prob(const StationaryBlockLaw& law, std::span<const double> thresholds,
                          std::span<const int> e) {
    law.validate();
    check_thresholds(thresholds);
    if (e.size() != static_cast<std::size_t>(law.p) + 1) throw std::invalid_argument("cell has wrong length");
    const auto edges = standard_edges(law, thresholds);
    switch (law.p) {
        case 0: {
            const Interval a = band(edges, e[0]);
            return norm_interval(a.lo, a.hi);
        }
        case 1:
            return bvn_box(band(edges, e[0]), band(edges, e[1]), law.beta);
        default:
            return ar1_triple_box(band(edges, e[0]), band(edges, e[1]), band(edges, e[2]), law.beta);
    }
}

CellLaw cell_law(const CanonicalParams& u, std::span<const double> thresholds, int p) {
    const auto law = StationaryBlockLaw::from(u, p);
    check_thresholds(thresholds);
    const std::size_t k = thresholds.size() + 1;
    CellLaw out{p, k, std::vector<double>(ipow(k, p + 1))};
    const auto edges = standard_edges(law, thresholds);
    if (p == 0) {
        for (std::size_t a = 0; a < k; ++a) out.prob[a] = norm_interval(edges[a], edges[a + 1]);
    } else if (p == 1) {
        // Joint CDF on the edge lattice, then inclusion-exclusion per cell.
        const std::size_t m = edges.size();
        std::vector<double> F(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b)
                F[a * m + b] = F[b * m + a] = bvn_cdf(edges[a], edges[b], law.beta);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                const double v = F[(a + 1) * m + b + 1] - F[a * m + b + 1] - F[(a + 1) * m + b] + F[a * m + b];
                out.prob[a * k + b] = std::max(v, 0.0);
            }
    } else {
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                for (std::size_t c = 0; c < k; ++c)
                    out.prob[(a * k + b) * k + c] =
                        ar1_triple_box(band(edges, static_cast<int>(a)), band(edges, static_cast<int>(b)),
                                       band(edges, static_cast<int>(c)), law.beta);
    }
    return out;
}

BinarySeries threshold_filter(const Trajectory& x, std::vector<double> thresholds) {
    check_thresholds(thresholds);
    BinarySeries out{x.h, {}, std::move(thresholds)};
    out.values.reserve(x.values.size());
    for (double v : x.values) {
        int y = 0;
        for (double c : out.thresholds) y += v >= c ? 1 : 0;
        out.values.push_back(y);
    }
    return out;
}

std::vector<std::size_t> block_counts(const BinarySeries& data, int p) {
    data.validate();
    if (p < 0 || p > 2) throw std::invalid_argument("block order p must be 0, 1 or 2");
    const std::size_t len = static_cast<std::size_t>(p) + 1;
    if (data.values.size() < len) throw std::invalid_argument("series shorter than one block");
    const std::size_t k = data.alphabet();
    std::vector<std::size_t> counts(ipow(k, p + 1), 0);
    for (std::size_t i = 0; i + len <= data.values.size(); ++i) {
        std::size_t idx = 0;
        for (std::size_t j = 0; j < len; ++j) idx = idx * k + static_cast<std::size_t>(data.values[i + j]);
        ++counts[idx];
    }
    return counts;
}

double pseudo_loglik(const CellLaw& law, std::span<const std::size_t> counts, std::size_t* zero_cells) {
    if (counts.size() != law.prob.size()) throw std::invalid_argument("counts do not match the cell law");
    double total = 0.0;
    std::size_t zeros = 0;
    for (std::size_t e = 0; e < counts.size(); ++e) {
        if (counts[e] == 0) continue;
        if (law.prob[e] <= 0.0) {
            ++zeros;
            continue;
        }
        total += static_cast<double>(counts[e]) * std::log(law.prob[e]);
    }
    if (zero_cells) *zero_cells = zeros;
    return zeros > 0 ? -kInf : total;
}

double pseudo_loglik(const CanonicalParams& u, const BinarySeries& data, int p, std::size_t* zero_cells) {
    const auto counts = block_counts(data, p);
    return pseudo_loglik(cell_law(u, data.thresholds, p), counts, zero_cells);
}

double trinary_loglik(const CanonicalParams& u, const BinarySeries& data, int p) {
    if (data.thresholds.size() != 2) throw std::invalid_argument("trinary data needs exactly two thresholds");
    return pseudo_loglik(u, data, p);
}

double kl_filtered(const CanonicalParams& u0, const CanonicalParams& u, std::span<const double> thresholds,
                   int p) {
    const auto f0 = cell_law(u0, thresholds, p);
    const auto f = cell_law(u, thresholds, p);
    double kl = 0.0;
    for (std::size_t e = 0; e < f0.prob.size(); ++e) {
        const double a = f0.prob[e];
        if (a <= 0.0) continue;
        if (f.prob[e] <= 0.0) return kInf;
        kl += a * std::log(a / f.prob[e]);
    }
    return std::max(kl, 0.0);
}

double SingularSet::alpha_at(double gamma) const {
    if (!(gamma > 0.0)) throw std::domain_error("singular set: gamma must be positive");
    return c - std::sqrt(u0.gamma / gamma) * (c - u0.alpha);
}

CanonicalParams SingularSet::point(double gamma) const {
    return {alpha_at(gamma), u0.beta, gamma, u0.h};
}

double SingularSet::invariant(const CanonicalParams& u, double c) { return std::sqrt(u.gamma) * (c - u.alpha); }

double SingularSet::invariant_p0(const CanonicalParams& u, double c) {
    return std::sqrt(u.gamma * (1.0 - u.beta * u.beta)) * (c - u.alpha);
}

SingularSet singular_set(const CanonicalParams& u0, double c) {
    validate(u0);
    return {u0, c};
}

std::vector<std::pair<double, double>> singular_curve_in_sis_plane(const CanonicalParams& u0, double c,
                                                                    double gamma_rec, double h,
                                                                    std::span<const double> r0_values) {
    validate(u0);
    if (!(c > 0.0)) throw std::domain_error("singular curve: threshold must be positive");
    if (!(gamma_rec > 0.0) || !(h > 0.0)) throw std::domain_error("singular curve: gamma_rec and h must be positive");
    const double target = SingularSet::invariant(u0, c);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(r0_values.size());
    for (double r0 : r0_values) {
        if (!(r0 > 1.0)) throw std::domain_error("singular curve: R0 must exceed 1");
        const double beta = std::exp(-gamma_rec * h * (r0 - 1.0));
        const double kk = std::sqrt(r0 / (1.0 - beta * beta));
        const double a = 1.0 - 1.0 / r0;
        // kk (c / s - a s) = target with s = sqrt(Sigma).
        const double s = (-target + std::sqrt(target * target + 4.0 * kk * kk * a * c)) / (2.0 * kk * a);
        curve.emplace_back(r0, s * s);
    }
    return curve;
}

BinarySeries sigmoid_filter_sample(const Trajectory& x, const std::function<double(double)>& s,
                                   std::uint64_t seed) {
    Rng rng(seed);
    BinarySeries out{x.h, {}, {}};
    out.values.reserve(x.values.size());
    for (double v : x.values) {
        const double prob = s(v);
        if (!(prob >= 0.0 && prob <= 1.0))
            throw std::domain_error("response map returned " + std::to_string(prob) + ", outside [0,1]");
        out.values.push_back(rng.uniform() <= prob ? 1 : 0);
    }
    return out;
}

std::function<double(double)> logistic_response(double c, double w) {
    if (!(w > 0.0)) throw std::invalid_argument("logistic width must be positive");
    return [c, w](double x) { return 1.0 / (1.0 + std::exp(-(x - c) / w)); };
}

std::pair<double, double> filter_shift_check(const CanonicalParams& u, double c, double t,
                                             const BinarySeries& data, int p) {
    if (data.alphabet() != 2) throw std::invalid_argument("filter_shift_check expects binary data");
    BinarySeries base = data;
    base.thresholds = {c};
    BinarySeries shifted = data;
    shifted.thresholds = {c + t};
    CanonicalParams moved = u;
    moved.alpha += t;
    return {pseudo_loglik(u, base, p), pseudo_loglik(moved, shifted, p)};
}

}  // namespace epiou
