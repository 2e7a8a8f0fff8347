#include "epiou/epi_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace epiou {

void SisParams::validate() const {
    if (!(beta_tx >= 0.0) || !std::isfinite(beta_tx))
        throw std::invalid_argument("SIS parameters: beta must be nonnegative");
    if (!(gamma_rec > 0.0) || !std::isfinite(gamma_rec))
        throw std::invalid_argument("SIS parameters: gamma must be positive");
    if (!(sigma_pop >= 2.0) || !std::isfinite(sigma_pop))
        throw std::invalid_argument("SIS parameters: population must be at least 2");
}

double SiseParams::r0() const noexcept { return std::sqrt(beta_tx / (gamma_rec * rho)); }

void SiseParams::validate() const {
    if (!(beta_tx >= 0.0) || !(gamma_rec > 0.0) || !(rho > 0.0))
        throw std::invalid_argument("SIS_E parameters: rates must be positive");
    if (!(sigma_pop >= 2.0)) throw std::invalid_argument("SIS_E parameters: population must be at least 2");
}

namespace {

struct NoJumpHook {
    void operator()(double, long, double) const noexcept {}
};

template <class OnJump>
std::size_t run_sis(long& s, long& i, double& t, double t_to, double beta, double gamma, Rng& rng,
                    OnJump&& on_jump) {
    std::size_t events = 0;
    while (t < t_to) {
        const double n = static_cast<double>(s + i);
        const double infect =
            n > 0.0 ? beta * static_cast<double>(s) * static_cast<double>(i) / n : 0.0;
        const double recover = gamma * static_cast<double>(i);
        const double total = infect + recover;
        if (total <= 0.0) {
            t = t_to;
            break;
        }
        const double dt = rng.exponential(total);
        if (t + dt > t_to) {
            // Memoryless: the pending event is redrawn on the next call.
            t = t_to;
            break;
        }
        t += dt;
        if (rng.uniform() * total < infect) {
            --s;
            ++i;
        } else {
            --i;
            ++s;
        }
        ++events;
        on_jump(t, i, 0.0);
    }
    return events;
}

template <class OnJump>
std::size_t run_sise(long& s, long& i, double& phi, double& t, double t_to, double beta,
                     double gamma, double rho, Rng& rng, OnJump&& on_jump) {
    std::size_t events = 0;
    while (t < t_to) {
        const long n = s + i;
        const double target =
            n > 0 ? static_cast<double>(i) / (static_cast<double>(n) * rho) : 0.0;
        // phi relaxes monotonically towards `target` until the next jump, so
        // the larger endpoint bounds the infection rate on the whole interval.
        const double bound_infect = beta * static_cast<double>(s) * std::max(phi, target);
        const double recover = gamma * static_cast<double>(i);
        const double bound = bound_infect + recover;
        double t_next = t_to;
        if (bound > 0.0) t_next = std::min(t_to, t + rng.exponential(bound));
        phi = target + (phi - target) * std::exp(-rho * (t_next - t));
        t = t_next;
        if (t >= t_to) break;
        const double u = rng.uniform() * bound;
        if (u < recover) {
            --i;
            ++s;
        } else if (u < recover + beta * static_cast<double>(s) * phi) {
            --s;
            ++i;
        } else {
            continue;  // thinned candidate
        }
        ++events;
        on_jump(t, i, phi);
    }
    return events;
}

long checked_population(double sigma_pop, long i0, const char* who) {
    const long pop = std::lround(sigma_pop);
    if (i0 < 0 || i0 > pop) throw std::invalid_argument(std::string(who) + ": i0 outside [0, Sigma]");
    return pop;
}

}  // namespace

std::size_t advance_sis(long& s, long& i, double& t, double t_to, double beta, double gamma,
                        Rng& rng) {
    return run_sis(s, i, t, t_to, beta, gamma, rng, NoJumpHook{});
}

std::size_t advance_sise(long& s, long& i, double& phi, double& t, double t_to, double beta,
                         double gamma, double rho, Rng& rng) {
    return run_sise(s, i, phi, t, t_to, beta, gamma, rho, rng, NoJumpHook{});
}

EventPath simulate_ctmc_sis(const SisParams& p, long i0, double t_end, std::uint64_t seed) {
    p.validate();
    const long pop = checked_population(p.sigma_pop, i0, "simulate_ctmc_sis");
    Rng rng(seed);
    long s = pop - i0;
    long i = i0;
    double t = 0.0;
    EventPath path;
    path.t.push_back(0.0);
    path.i_count.push_back(i);
    run_sis(s, i, t, t_end, p.beta_tx, p.gamma_rec, rng, [&](double tj, long ij, double) {
        path.t.push_back(tj);
        path.i_count.push_back(ij);
    });
    return path;
}

EventPath simulate_ctmc_sise(const SiseParams& p, long i0, double phi0, double t_end,
                             std::uint64_t seed) {
    p.validate();
    const long pop = checked_population(p.sigma_pop, i0, "simulate_ctmc_sise");
    if (!(phi0 >= 0.0)) throw std::invalid_argument("simulate_ctmc_sise: phi0 must be nonnegative");
    Rng rng(seed);
    long s = pop - i0;
    long i = i0;
    double phi = phi0;
    double t = 0.0;
    EventPath path;
    path.t.push_back(0.0);
    path.i_count.push_back(i);
    path.phi.push_back(phi);
    run_sise(s, i, phi, t, t_end, p.beta_tx, p.gamma_rec, p.rho, rng,
             [&](double tj, long ij, double phij) {
                 path.t.push_back(tj);
                 path.i_count.push_back(ij);
                 path.phi.push_back(phij);
             });
    path.t.push_back(t_end);
    path.i_count.push_back(i);
    path.phi.push_back(phi);
    return path;
}

Trajectory sample_ctmc_sis(const SisParams& p, long i0, double h, std::size_t n,
                           std::uint64_t seed) {
    p.validate();
    if (!(h > 0.0)) throw std::invalid_argument("sample_ctmc_sis: h must be positive");
    const long pop = checked_population(p.sigma_pop, i0, "sample_ctmc_sis");
    Rng rng(seed);
    long s = pop - i0;
    long i = i0;
    double t = 0.0;
    Trajectory tr{0.0, h, {}, seed};
    tr.values.reserve(n + 1);
    tr.values.push_back(static_cast<double>(i));
    for (std::size_t k = 1; k <= n; ++k) {
        advance_sis(s, i, t, static_cast<double>(k) * h, p.beta_tx, p.gamma_rec, rng);
        tr.values.push_back(static_cast<double>(i));
    }
    return tr;
}

Trajectory sample_path(const EventPath& path, double h, std::size_t n) {
    if (path.t.empty()) throw std::invalid_argument("sample_path: empty path");
    if (!(h > 0.0)) throw std::invalid_argument("sample_path: h must be positive");
    Trajectory tr{0.0, h, {}, 0};
    tr.values.reserve(n + 1);
    std::size_t e = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double tk = static_cast<double>(k) * h;
        while (e + 1 < path.t.size() && path.t[e + 1] <= tk) ++e;
        tr.values.push_back(static_cast<double>(path.i_count[e]));
    }
    return tr;
}

namespace {

template <class Deriv, class State>
State rk4_step(const Deriv& f, const State& y, double dt) {
    const State k1 = f(y);
    State tmp = y;
    for (std::size_t c = 0; c < y.size(); ++c) tmp[c] = y[c] + 0.5 * dt * k1[c];
    const State k2 = f(tmp);
    for (std::size_t c = 0; c < y.size(); ++c) tmp[c] = y[c] + 0.5 * dt * k2[c];
    const State k3 = f(tmp);
    for (std::size_t c = 0; c < y.size(); ++c) tmp[c] = y[c] + dt * k3[c];
    const State k4 = f(tmp);
    State out = y;
    for (std::size_t c = 0; c < y.size(); ++c)
        out[c] = y[c] + dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    return out;
}

template <class Deriv, class State, class Record>
void integrate_on_grid(const Deriv& f, State y, const std::vector<double>& t_grid, double total,
                       Record&& record) {
    if (t_grid.empty()) throw std::invalid_argument("solve_ode: empty time grid");
    for (std::size_t k = 0; k + 1 < t_grid.size(); ++k)
        if (!(t_grid[k + 1] > t_grid[k])) throw std::invalid_argument("solve_ode: grid must increase");
    // The grid is taken to start at the initial time.
    record(y);
    for (std::size_t k = 0; k + 1 < t_grid.size(); ++k) {
        const double dt = (t_grid[k + 1] - t_grid[k]) / 100.0;
        for (int step = 0; step < 100; ++step) y = rk4_step(f, y, dt);
        if (!(std::abs(y[0] + y[1] - total) <= 1e-6 * total))
            throw std::runtime_error("solve_ode: conservation drift exceeds 1e-6 (unstable step)");
        record(y);
    }
}

}  // namespace

OdeSolution solve_ode_sis(const SisParams& p, double i0, const std::vector<double>& t_grid) {
    p.validate();
    if (!(i0 >= 0.0 && i0 <= p.sigma_pop)) throw std::invalid_argument("solve_ode: I(0) outside [0, Sigma]");
    using State = std::array<double, 2>;
    const double b = p.beta_tx / p.sigma_pop;
    const double g = p.gamma_rec;
    auto f = [&](const State& y) -> State {
        const double flow = b * y[0] * y[1] - g * y[1];
        return {-flow, flow};
    };
    OdeSolution sol;
    sol.t = t_grid;
    integrate_on_grid(f, State{p.sigma_pop - i0, i0}, t_grid, p.sigma_pop, [&](const State& y) {
        sol.s.push_back(y[0]);
        sol.i.push_back(y[1]);
    });
    return sol;
}

OdeSolution solve_ode_sise(const SiseParams& p, double i0, double phi0,
                           const std::vector<double>& t_grid) {
    p.validate();
    if (!(i0 >= 0.0 && i0 <= p.sigma_pop)) throw std::invalid_argument("solve_ode: I(0) outside [0, Sigma]");
    using State = std::array<double, 3>;
    auto f = [&](const State& y) -> State {
        const double flow = p.beta_tx * y[0] * y[2] - p.gamma_rec * y[1];
        return {-flow, flow, y[1] / p.sigma_pop - p.rho * y[2]};
    };
    OdeSolution sol;
    sol.t = t_grid;
    integrate_on_grid(f, State{p.sigma_pop - i0, i0, phi0}, t_grid, p.sigma_pop,
                      [&](const State& y) {
                          sol.s.push_back(y[0]);
                          sol.i.push_back(y[1]);
                          sol.phi.push_back(y[2]);
                      });
    return sol;
}

OuParams sis_to_ou(const SisParams& p) {
    p.validate();
    const double r0 = p.r0();
    if (!(r0 > 1.0)) throw std::domain_error("sis_to_ou: R0 <= 1 has no positive equilibrium");
    OuParams ou;
    ou.k = p.gamma_rec * p.sigma_pop * (r0 - 1.0) * (r0 - 1.0) / r0;
    ou.mu = p.gamma_rec * (r0 - 1.0);
    ou.sigma = std::sqrt(2.0 * p.gamma_rec * p.sigma_pop * (r0 - 1.0) / r0);
    return ou;
}

CanonicalParams sis_to_canonical(const SisParams& p, double h) {
    p.validate();
    if (!(h > 0.0)) throw std::invalid_argument("sis_to_canonical: h must be positive");
    const double r0 = p.r0();
    if (!(r0 > 1.0)) throw std::domain_error("sis_to_canonical: R0 <= 1 has no positive equilibrium");
    CanonicalParams u;
    u.h = h;
    u.alpha = p.sigma_pop * (1.0 - 1.0 / r0);
    u.beta = std::exp(-p.gamma_rec * h * (r0 - 1.0));
    u.gamma = r0 / (p.sigma_pop * (1.0 - u.beta * u.beta));
    return u;
}

SisParams ou_to_sis(const CanonicalParams& u) {
    validate(u);
    const double slope = (1.0 - u.beta * u.beta) * u.gamma;
    const double r0 = 1.0 + u.alpha * slope;
    if (!(r0 > 1.0)) throw std::domain_error("ou_to_sis: parameters imply R0 <= 1");
    const double sigma_pop = u.alpha + 1.0 / slope;
    if (!(sigma_pop > u.alpha)) throw std::domain_error("ou_to_sis: parameters imply Sigma <= alpha");
    const double gamma_rec = -std::log(u.beta) / (u.h * (r0 - 1.0));
    return SisParams::from_r0(r0, gamma_rec, sigma_pop);
}

double r0_of_alpha(double alpha, double sigma_pop) {
    if (!(sigma_pop > 0.0) || !(alpha < sigma_pop))
        throw std::domain_error("r0_of_alpha: need alpha < Sigma");
    return 1.0 / (1.0 - alpha / sigma_pop);
}

double var_r0_asymptotic(const SisParams& p, double h, std::size_t n) {
    if (n < 1) throw std::invalid_argument("var_r0_asymptotic: n must be positive");
    const CanonicalParams u = sis_to_canonical(p, h);
    const double r0 = p.r0();
    return r0 * r0 * r0 / (p.sigma_pop * static_cast<double>(n)) * (1.0 + u.beta) / (1.0 - u.beta);
}

}  // namespace epiou
