#pragma once

// Likelihood-free inference for epidemics on a network of nodes linked by
// animal movements: network simulation with sentinel testing, OU summary
// statistics of the resulting pseudo-prevalence, and SMC-ABC.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/ou_core.hpp"

namespace epiou {

struct NetworkNode {
    long population = 0;
    double initial_prevalence = 0.0;  ///< I(0) = floor(fraction * population + 1/2)
};

struct Movement {
    double time = 0.0;
    std::size_t src = 0;
    std::size_t dst = 0;
    long count = 0;
};

/// Local dynamics shared by every node. rho is ignored for SIS.
struct NodeDynamics {
    EpiModel model = EpiModel::sis;
    double beta_tx = 0.16;
    double gamma_rec = 0.1;
    double rho = 0.45;
};

struct NetworkModel {
    std::vector<NetworkNode> nodes;
    std::vector<Movement> movements;  ///< sorted by time
    NodeDynamics dynamics;
    std::vector<std::size_t> sentinels;
    double sample_period = 7.0;
    double threshold_c = 0.3;  ///< prevalence fraction triggering a positive test

    void validate() const;
};

/// Synthetic stand-in for a livestock movement network.
struct NetworkGeneratorConfig {
    std::size_t nodes = 50;
    double median_population = 120.0;
    double log_sd = 0.5;                ///< sd of log population
    double events_per_node_day = 0.2;   ///< movement events touching a node, as src or dst
    double mean_batch = 3.0;            ///< geometric batch size mean
    double t_end = 365.0;
    std::size_t sentinels = 0;          ///< 0 selects every node
    double initial_prevalence = 0.1;
    double sample_period = 7.0;
    double threshold_c = 0.3;
};

NetworkModel generate_network(const NetworkGeneratorConfig& cfg, const NodeDynamics& dyn,
                              std::uint64_t seed);

struct NetworkOutput {
    std::vector<BinarySeries> sentinel_series;
    Trajectory pseudo_prevalence;
    std::size_t skipped_movements = 0;   ///< source node empty
    std::size_t partial_movements = 0;   ///< fewer individuals available than scheduled
    double sentinel_events_per_node_day = 0.0;  ///< movement events touching a sentinel
};

/// Nodes evolve independently between movement events; a movement moves
/// individuals drawn without replacement from the source. Samples are
/// taken at t = 0, period, 2 period, ... <= t_end.
NetworkOutput simulate_network(const NetworkModel& model, double t_end, std::uint64_t seed);

struct SummaryStats {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double gamma_hat = 0.0;

    std::vector<double> as_vector() const { return {alpha_hat, beta_hat, gamma_hat}; }
};

/// Least-squares OU estimates of a series. Throws on degenerate input.
SummaryStats summary_of(const Trajectory& series);

/// sqrt(sum ((x_i - y_i) / x_i)^2), normalized by the observed statistics x.
double abc_kernel(const SummaryStats& x, const SummaryStats& y);

/// eps_n = eps1 exp(-decay (n - 1)) for 1 <= n <= max_n.
double tolerance_schedule(std::size_t n, double eps1 = 100.0, double decay = 0.25, std::size_t max_n = 15);

struct UniformPrior {
    std::vector<std::string> names;
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const noexcept { return lo.size(); }
    bool contains(std::span<const double> theta) const;
    void validate() const;
};

struct AbcConfig {
    std::size_t particles = 200;
    std::size_t generations = 8;
    double eps1 = 100.0;
    double eps_decay = 0.25;
    std::size_t max_generation = 15;
    double min_acceptance = 1e-4;
    std::size_t min_attempts_for_stop = 10000;  ///< attempts before the acceptance floor applies
    std::size_t batch = 64;                     ///< proposals simulated per parallel batch
    std::size_t max_perturb_tries = 100000;
    unsigned threads = 1;
};

struct AbcPopulation {
    std::size_t generation = 1;
    double tolerance = 0.0;
    std::vector<std::vector<double>> particles;
    std::vector<double> weights;
    std::vector<double> distances;
    std::size_t accepted = 0;
    std::size_t attempts = 0;

    double acceptance_rate() const noexcept {
        return attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
    }
};

struct AbcResult {
    std::vector<AbcPopulation> generations;
    bool early_stop = false;
    std::string stop_reason;
};

/// Simulates summary statistics for parameters theta. An empty optional
/// marks a failed or degenerate simulation, which is always rejected.
using AbcSimulator = std::function<std::optional<SummaryStats>(std::span<const double> theta,
                                                               std::uint64_t seed)>;

/// Sequential Monte Carlo ABC. Proposal j of generation n uses the random
/// stream derive_seed(derive_seed(seed, n), j); proposals are simulated in
/// batches and accepted in index order, so the result does not depend on
/// the thread count. When `resume` is given the run continues after it.
AbcResult smc_abc(const AbcSimulator& simulate, const UniformPrior& prior, const SummaryStats& observed,
                  const AbcConfig& cfg, std::uint64_t seed, const AbcPopulation* resume = nullptr);

/// (Q3 - Q1) / (Q3 + Q1) of a weighted sample.
double qcd(std::span<const double> sample, std::span<const double> weights = {});

/// QCD of the posterior divided by QCD of the prior; samples need >= 20 points.
double qcd_concentration(std::span<const double> prior_sample, std::span<const double> posterior_sample,
                         std::span<const double> posterior_weights = {});

/// Maps an ABC parameter vector (beta, gamma[, rho]) to node dynamics.
NodeDynamics dynamics_from_theta(EpiModel model, std::span<const double> theta);

/// Simulator for smc_abc: runs `model` with dynamics from theta and returns
/// the statistics of its pseudo-prevalence.
AbcSimulator network_simulator(const NetworkModel& model, double t_end);

}  // namespace epiou
