#pragma once

// Tabulated two-dimensional log-posterior on a uniform rectangle.

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace epiou {

struct GridAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 2;

    double step() const noexcept { return n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0; }
    double value(std::size_t i) const noexcept { return lo + static_cast<double>(i) * step(); }
    std::vector<double> values() const;
    void validate() const;
};

struct MarginalSummary {
    double mean;
    double sd;
};

class PosteriorGrid {
public:
    PosteriorGrid() = default;

    /// Takes unnormalized log values in row-major order (axis1 major). Entries
    /// equal to -inf are excluded points; NaN is rejected.
    PosteriorGrid(GridAxis axis1, GridAxis axis2, std::vector<double> log_values);

    /// Evaluates fn(x1, x2) at every grid node, rows in parallel.
    static PosteriorGrid evaluate(const GridAxis& axis1, const GridAxis& axis2,
                                  const std::function<double(double, double)>& fn,
                                  unsigned threads = 1);

    const GridAxis& axis1() const noexcept { return axis1_; }
    const GridAxis& axis2() const noexcept { return axis2_; }
    const std::vector<double>& log_density() const noexcept { return log_density_; }

    /// log of the summed (unnormalized) mass over the grid.
    double normalization() const noexcept { return normalization_; }

    double log_value(std::size_t i, std::size_t j) const { return log_density_.at(i * axis2_.n + j); }

    /// Normalized probability mass of node (i, j); all masses sum to one.
    double mass(std::size_t i, std::size_t j) const;

    std::vector<double> marginal1() const;
    std::vector<double> marginal2() const;
    MarginalSummary summary1() const;
    MarginalSummary summary2() const;

    /// Index (i, j) of the largest log value.
    std::pair<std::size_t, std::size_t> argmax() const;

private:
    GridAxis axis1_;
    GridAxis axis2_;
    std::vector<double> log_density_;
    double normalization_ = 0.0;
};

}  // namespace epiou
