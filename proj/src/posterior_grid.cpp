#include "epiou/posterior_grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "epiou/numerics.hpp"
#include "epiou/parallel.hpp"

namespace epiou {

namespace {

MarginalSummary summarize_marginal(const GridAxis& axis, const std::vector<double>& m) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) mean += m[i] * axis.value(i);
    double var = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = axis.value(i) - mean;
        var += m[i] * d * d;
    }
    return {mean, std::sqrt(var)};
}

}  // namespace

std::vector<double> GridAxis::values() const {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = value(i);
    return v;
}

void GridAxis::validate() const {
    if (n < 1) throw std::invalid_argument("grid axis '" + name + "' is empty");
    if (!std::isfinite(lo) || !std::isfinite(hi) || (n > 1 && !(hi > lo)))
        throw std::invalid_argument("grid axis '" + name + "' has an invalid range");
}

PosteriorGrid::PosteriorGrid(GridAxis axis1, GridAxis axis2, std::vector<double> log_values)
    : axis1_(std::move(axis1)), axis2_(std::move(axis2)), log_density_(std::move(log_values)) {
    axis1_.validate();
    axis2_.validate();
    if (log_density_.size() != axis1_.n * axis2_.n)
        throw std::invalid_argument("posterior grid: value count does not match axes");
    for (double v : log_density_) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw std::invalid_argument("posterior grid: NaN or +inf log value");
    }
    normalization_ = log_sum_exp(log_density_);
    if (!std::isfinite(normalization_))
        throw std::domain_error("posterior grid: every grid point has zero likelihood");
}

PosteriorGrid PosteriorGrid::evaluate(const GridAxis& axis1, const GridAxis& axis2,
                                      const std::function<double(double, double)>& fn,
                                      unsigned threads) {
    axis1.validate();
    axis2.validate();
    std::vector<double> values(axis1.n * axis2.n);
    parallel_for(axis1.n, threads, [&](std::size_t i) {
        const double x1 = axis1.value(i);
        for (std::size_t j = 0; j < axis2.n; ++j) values[i * axis2.n + j] = fn(x1, axis2.value(j));
    });
    return PosteriorGrid(axis1, axis2, std::move(values));
}

double PosteriorGrid::mass(std::size_t i, std::size_t j) const {
    return std::exp(log_value(i, j) - normalization_);
}

std::vector<double> PosteriorGrid::marginal1() const {
    std::vector<double> m(axis1_.n, 0.0);
    for (std::size_t i = 0; i < axis1_.n; ++i)
        for (std::size_t j = 0; j < axis2_.n; ++j) m[i] += mass(i, j);
    return m;
}

std::vector<double> PosteriorGrid::marginal2() const {
    std::vector<double> m(axis2_.n, 0.0);
    for (std::size_t i = 0; i < axis1_.n; ++i)
        for (std::size_t j = 0; j < axis2_.n; ++j) m[j] += mass(i, j);
    return m;
}

MarginalSummary PosteriorGrid::summary1() const { return summarize_marginal(axis1_, marginal1()); }
MarginalSummary PosteriorGrid::summary2() const { return summarize_marginal(axis2_, marginal2()); }

std::pair<std::size_t, std::size_t> PosteriorGrid::argmax() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < log_density_.size(); ++k)
        if (log_density_[k] > log_density_[best]) best = k;
    return {best / axis2_.n, best % axis2_.n};
}

}  // namespace epiou
