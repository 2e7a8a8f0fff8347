#include "epiou/abc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "epiou/numerics.hpp"
#include "epiou/parallel.hpp"
#include "epiou/random.hpp"
#include "epiou/sde_estimators.hpp"

namespace epiou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMovementStream = 0xffffffffffffffffULL;

struct NodeState {
    long s = 0;
    long i = 0;
    double phi = 0.0;
    double t = 0.0;
    Rng rng{0};
};

void advance(NodeState& n, double t_to, const NodeDynamics& d) {
    if (t_to <= n.t) return;
    if (d.model == EpiModel::sis)
        advance_sis(n.s, n.i, n.t, t_to, d.beta_tx, d.gamma_rec, n.rng);
    else
        advance_sise(n.s, n.i, n.phi, n.t, t_to, d.beta_tx, d.gamma_rec, d.rho, n.rng);
}

long geometric_at_least_one(double mean, Rng& rng) {
    if (mean <= 1.0) return 1;
    const double q = 1.0 - 1.0 / mean;
    return 1 + static_cast<long>(std::floor(std::log(rng.uniform()) / std::log(q)));
}

}  // namespace

void NetworkModel::validate() const {
    if (nodes.empty()) throw std::invalid_argument("network has no nodes");
    for (const auto& n : nodes) {
        if (n.population < 0) throw std::invalid_argument("node population must be nonnegative");
        if (!(n.initial_prevalence >= 0.0 && n.initial_prevalence <= 1.0))
            throw std::invalid_argument("node initial prevalence must lie in [0,1]");
    }
    double last = -kInf;
    for (const auto& m : movements) {
        if (m.src >= nodes.size() || m.dst >= nodes.size()) throw std::invalid_argument("movement refers to an unknown node");
        if (m.count < 0) throw std::invalid_argument("movement count must be nonnegative");
        if (!(m.time >= last)) throw std::invalid_argument("movements must be sorted by time");
        last = m.time;
    }
    if (sentinels.empty()) throw std::invalid_argument("sentinel set is empty");
    for (auto s : sentinels)
        if (s >= nodes.size()) throw std::invalid_argument("sentinel refers to an unknown node");
    if (!(sample_period > 0.0)) throw std::invalid_argument("sample period must be positive");
    if (!(threshold_c > 0.0 && threshold_c <= 1.0)) throw std::invalid_argument("threshold must lie in (0,1]");
    if (!(dynamics.beta_tx >= 0.0) || !(dynamics.gamma_rec > 0.0) ||
        (dynamics.model == EpiModel::sise && !(dynamics.rho > 0.0)))
        throw std::invalid_argument("invalid node dynamics");
}

NetworkModel generate_network(const NetworkGeneratorConfig& cfg, const NodeDynamics& dyn, std::uint64_t seed) {
    if (cfg.nodes < 2) throw std::invalid_argument("network generator needs at least 2 nodes");
    if (!(cfg.median_population > 0.0) || !(cfg.log_sd >= 0.0) || !(cfg.events_per_node_day >= 0.0) ||
        !(cfg.mean_batch >= 1.0) || !(cfg.t_end > 0.0))
        throw std::invalid_argument("invalid network generator settings");
    Rng rng(seed);
    NetworkModel model;
    model.dynamics = dyn;
    model.sample_period = cfg.sample_period;
    model.threshold_c = cfg.threshold_c;
    const double mu = std::log(cfg.median_population);
    for (std::size_t k = 0; k < cfg.nodes; ++k) {
        const long pop = std::max(2L, std::lround(std::exp(mu + cfg.log_sd * rng.normal())));
        model.nodes.push_back({pop, cfg.initial_prevalence});
    }
    // Each event touches two nodes.
    const double rate = cfg.events_per_node_day * static_cast<double>(cfg.nodes) / 2.0;
    if (rate > 0.0) {
        double t = rng.exponential(rate);
        while (t < cfg.t_end) {
            const std::size_t src = rng.below(cfg.nodes);
            std::size_t dst = rng.below(cfg.nodes - 1);
            if (dst >= src) ++dst;
            model.movements.push_back({t, src, dst, geometric_at_least_one(cfg.mean_batch, rng)});
            t += rng.exponential(rate);
        }
    }
    const std::size_t ns = cfg.sentinels == 0 ? cfg.nodes : std::min(cfg.sentinels, cfg.nodes);
    std::vector<std::size_t> idx(cfg.nodes);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < ns; ++k) std::swap(idx[k], idx[k + rng.below(cfg.nodes - k)]);
    model.sentinels.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(ns));
    std::sort(model.sentinels.begin(), model.sentinels.end());
    return model;
}

NetworkOutput simulate_network(const NetworkModel& model, double t_end, std::uint64_t seed) {
    model.validate();
    if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
    const auto& dyn = model.dynamics;
    std::vector<NodeState> state(model.nodes.size());
    for (std::size_t k = 0; k < state.size(); ++k) {
        const auto& n = model.nodes[k];
        const long i0 = std::min(n.population,
                                 static_cast<long>(std::floor(n.initial_prevalence * static_cast<double>(n.population) + 0.5)));
        state[k].i = i0;
        state[k].s = n.population - i0;
        state[k].rng = Rng(derive_seed(seed, k));
    }
    Rng move_rng(derive_seed(seed, kMovementStream));

    std::vector<char> is_sentinel(model.nodes.size(), 0);
    for (auto s : model.sentinels) is_sentinel[s] = 1;

    const std::size_t n_samples = static_cast<std::size_t>(std::floor(t_end / model.sample_period + 1e-9)) + 1;
    NetworkOutput out;
    out.pseudo_prevalence.h = model.sample_period;
    out.pseudo_prevalence.seed = seed;
    out.sentinel_series.assign(model.sentinels.size(), BinarySeries{model.sample_period, {}, {model.threshold_c}});
    std::size_t sentinel_touches = 0;

    std::size_t next_move = 0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double ts = static_cast<double>(k) * model.sample_period;
        while (next_move < model.movements.size() && model.movements[next_move].time <= ts) {
            const auto& mv = model.movements[next_move++];
            NodeState& a = state[mv.src];
            NodeState& b = state[mv.dst];
            advance(a, mv.time, dyn);
            advance(b, mv.time, dyn);
            sentinel_touches += is_sentinel[mv.src] + is_sentinel[mv.dst];
            const long avail = a.s + a.i;
            if (avail == 0) {
                ++out.skipped_movements;
                continue;
            }
            long moving = mv.count;
            if (moving > avail) {
                ++out.partial_movements;
                moving = avail;
            }
            // Sequential draws without replacement give the hypergeometric split.
            long inf = 0;
            long s_left = a.s, i_left = a.i;
            for (long j = 0; j < moving; ++j) {
                const double pi = static_cast<double>(i_left) / static_cast<double>(s_left + i_left);
                if (move_rng.uniform() < pi) {
                    --i_left;
                    ++inf;
                } else {
                    --s_left;
                }
            }
            a.i -= inf;
            a.s -= moving - inf;
            b.i += inf;
            b.s += moving - inf;
        }
        double pop_total = 0.0;
        double pop_positive = 0.0;
        for (std::size_t j = 0; j < model.sentinels.size(); ++j) {
            NodeState& n = state[model.sentinels[j]];
            advance(n, ts, dyn);
            const long pop = n.s + n.i;
            const int y = pop > 0 && static_cast<double>(n.i) >= model.threshold_c * static_cast<double>(pop) ? 1 : 0;
            out.sentinel_series[j].values.push_back(y);
            pop_total += static_cast<double>(pop);
            pop_positive += y * static_cast<double>(pop);
        }
        out.pseudo_prevalence.values.push_back(pop_total > 0.0 ? pop_positive / pop_total : 0.0);
    }
    const double span = static_cast<double>(n_samples - 1) * model.sample_period;
    if (span > 0.0)
        out.sentinel_events_per_node_day =
            static_cast<double>(sentinel_touches) / (static_cast<double>(model.sentinels.size()) * span);
    return out;
}

SummaryStats summary_of(const Trajectory& series) {
    const auto fit = lsq_fit(series);
    return {fit.alpha_hat, fit.beta_hat, fit.gamma_hat};
}

double abc_kernel(const SummaryStats& x, const SummaryStats& y) {
    const auto xv = x.as_vector();
    const auto yv = y.as_vector();
    double sum = 0.0;
    for (std::size_t k = 0; k < xv.size(); ++k) {
        if (xv[k] == 0.0 || !std::isfinite(xv[k]))
            throw std::domain_error("abc_kernel: observed statistics must be finite and nonzero");
        const double r = (xv[k] - yv[k]) / xv[k];
        sum += r * r;
    }
    return std::isnan(sum) ? kInf : std::sqrt(sum);
}

double tolerance_schedule(std::size_t n, double eps1, double decay, std::size_t max_n) {
    if (n < 1 || n > max_n) throw std::out_of_range("tolerance_schedule: generation outside the schedule");
    return eps1 * std::exp(-decay * static_cast<double>(n - 1));
}

bool UniformPrior::contains(std::span<const double> theta) const {
    if (theta.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
        if (!(theta[k] >= lo[k] && theta[k] <= hi[k])) return false;
    return true;
}

void UniformPrior::validate() const {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("prior bounds are inconsistent");
    if (!names.empty() && names.size() != lo.size()) throw std::invalid_argument("prior names do not match bounds");
    for (std::size_t k = 0; k < lo.size(); ++k)
        if (!(hi[k] > lo[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k]))
            throw std::invalid_argument("prior box must be finite with lo < hi");
}

namespace {

struct Proposal {
    std::vector<double> theta;
    double distance = kInf;
};

}  // namespace

AbcResult smc_abc(const AbcSimulator& simulate, const UniformPrior& prior, const SummaryStats& observed,
                  const AbcConfig& cfg, std::uint64_t seed, const AbcPopulation* resume) {
    prior.validate();
    if (cfg.particles == 0) throw std::invalid_argument("smc_abc: particle count must be positive");
    if (cfg.batch == 0) throw std::invalid_argument("smc_abc: batch size must be positive");
    abc_kernel(observed, observed);  // rejects zero components up front
    const std::size_t d = prior.dim();

    AbcResult result;
    AbcPopulation prev;
    std::size_t first = 1;
    if (resume) {
        prev = *resume;
        first = prev.generation + 1;
        for (const auto& th : prev.particles)
            if (th.size() != d) throw std::invalid_argument("smc_abc: resumed particles have wrong dimension");
    }

    for (std::size_t gen = first; gen <= cfg.generations; ++gen) {
        const double eps = tolerance_schedule(gen, cfg.eps1, cfg.eps_decay, cfg.max_generation);
        const bool from_prior = gen == first && !resume;

        std::vector<double> cumw, scale(d, 0.0);
        if (!from_prior) {
            cumw.resize(prev.weights.size());
            std::partial_sum(prev.weights.begin(), prev.weights.end(), cumw.begin());
            for (std::size_t k = 0; k < d; ++k) {
                double mean = 0.0;
                for (std::size_t j = 0; j < prev.particles.size(); ++j) mean += prev.weights[j] * prev.particles[j][k];
                double var = 0.0;
                for (std::size_t j = 0; j < prev.particles.size(); ++j) {
                    const double r = prev.particles[j][k] - mean;
                    var += prev.weights[j] * r * r;
                }
                scale[k] = std::max(std::sqrt(2.0 * var), 1e-12 * (prior.hi[k] - prior.lo[k]));
            }
        }

        const std::uint64_t gen_seed = derive_seed(seed, gen);
        auto propose = [&](std::size_t j) {
            Rng rng(derive_seed(gen_seed, j));
            Proposal p;
            p.theta.resize(d);
            if (from_prior) {
                for (std::size_t k = 0; k < d; ++k) p.theta[k] = rng.uniform(prior.lo[k], prior.hi[k]);
            } else {
                const double u = rng.uniform() * cumw.back();
                const std::size_t a = std::min<std::size_t>(
                    static_cast<std::size_t>(std::upper_bound(cumw.begin(), cumw.end(), u) - cumw.begin()),
                    cumw.size() - 1);
                std::size_t tries = 0;
                do {
                    if (++tries > cfg.max_perturb_tries)
                        throw std::runtime_error("smc_abc: perturbation kernel keeps leaving the prior box");
                    for (std::size_t k = 0; k < d; ++k) p.theta[k] = prev.particles[a][k] + scale[k] * rng.normal();
                } while (!prior.contains(p.theta));
            }
            const auto stats = simulate(p.theta, rng());
            if (stats) p.distance = abc_kernel(observed, *stats);
            return p;
        };

        AbcPopulation pop;
        pop.generation = gen;
        pop.tolerance = eps;
        std::vector<Proposal> batch(cfg.batch);
        std::size_t next = 0;
        bool stalled = false;
        while (pop.accepted < cfg.particles) {
            parallel_for(cfg.batch, cfg.threads, [&](std::size_t b) { batch[b] = propose(next + b); });
            for (std::size_t b = 0; b < cfg.batch && pop.accepted < cfg.particles; ++b) {
                ++pop.attempts;
                if (batch[b].distance < eps) {
                    pop.particles.push_back(std::move(batch[b].theta));
                    pop.distances.push_back(batch[b].distance);
                    ++pop.accepted;
                }
            }
            next += cfg.batch;
            if (pop.accepted < cfg.particles && pop.attempts >= cfg.min_attempts_for_stop &&
                pop.acceptance_rate() < cfg.min_acceptance) {
                stalled = true;
                break;
            }
        }
        if (stalled) {
            result.early_stop = true;
            result.stop_reason = "acceptance rate fell below the floor in generation " + std::to_string(gen);
            break;
        }

        pop.weights.assign(pop.particles.size(), 1.0);
        if (!from_prior) {
            for (std::size_t i = 0; i < pop.particles.size(); ++i) {
                double denom = 0.0;
                for (std::size_t j = 0; j < prev.particles.size(); ++j) {
                    double logk = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double z = (pop.particles[i][k] - prev.particles[j][k]) / scale[k];
                        logk += -0.5 * z * z;
                    }
                    denom += prev.weights[j] * std::exp(logk);
                }
                // Uniform prior: the numerator is constant on the box.
                pop.weights[i] = denom > 0.0 ? 1.0 / denom : 0.0;
            }
        }
        const double total = std::accumulate(pop.weights.begin(), pop.weights.end(), 0.0);
        if (!(total > 0.0)) throw std::runtime_error("smc_abc: all importance weights vanished");
        for (auto& w : pop.weights) w /= total;
        result.generations.push_back(pop);
        prev = std::move(pop);
    }
    return result;
}

double qcd(std::span<const double> sample, std::span<const double> weights) {
    std::vector<double> w(weights.begin(), weights.end());
    if (w.empty()) w.assign(sample.size(), 1.0);
    const double q1 = weighted_quantile(sample, w, 0.25);
    const double q3 = weighted_quantile(sample, w, 0.75);
    if (q3 + q1 == 0.0) throw std::domain_error("qcd: Q1 + Q3 is zero");
    return (q3 - q1) / (q3 + q1);
}

double qcd_concentration(std::span<const double> prior_sample, std::span<const double> posterior_sample,
                         std::span<const double> posterior_weights) {
    if (prior_sample.size() < 20 || posterior_sample.size() < 20)
        throw std::invalid_argument("qcd_concentration: samples need at least 20 points");
    return qcd(posterior_sample, posterior_weights) / qcd(prior_sample);
}

NodeDynamics dynamics_from_theta(EpiModel model, std::span<const double> theta) {
    const std::size_t need = model == EpiModel::sis ? 2 : 3;
    if (theta.size() != need) throw std::invalid_argument("parameter vector has wrong dimension for the model");
    NodeDynamics d;
    d.model = model;
    d.beta_tx = theta[0];
    d.gamma_rec = theta[1];
    if (model == EpiModel::sise) d.rho = theta[2];
    return d;
}

AbcSimulator network_simulator(const NetworkModel& model, double t_end) {
    model.validate();
    return [model, t_end](std::span<const double> theta, std::uint64_t seed) -> std::optional<SummaryStats> {
        NetworkModel m = model;
        m.dynamics = dynamics_from_theta(model.dynamics.model, theta);
        const auto out = simulate_network(m, t_end, seed);
        try {
            const auto s = summary_of(out.pseudo_prevalence);
            if (!std::isfinite(s.gamma_hat) || !std::isfinite(s.alpha_hat)) return std::nullopt;
            return s;
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    };
}

}  // namespace epiou
