#include "epiou/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "epiou/abc_engine.hpp"
#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/posterior_grid.hpp"
#include "epiou/random.hpp"
#include "epiou/sde_estimators.hpp"

namespace epiou {

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

OuParams random_ou(Rng& rng) { return {rng.uniform(-5.0, 5.0), rng.uniform(0.05, 3.0), rng.uniform(0.1, 3.0)}; }

std::vector<double> ou_path(Rng& rng, std::size_t n) {
    const auto p = random_ou(rng);
    return sample_exact(p, p.k / p.mu, rng.uniform(0.1, 1.0), n, rng()).values;
}

SelftestCase conjugacy_closure(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto data = ou_path(rng, 40 + rng.below(60));
        const std::size_t cut = 2 + rng.below(data.size() - 4);
        const std::span<const double> all(data);
        // Prior from an initial segment, then one update against two sequential ones.
        const auto prior = prior_from_first_observation(all);
        const auto tail = all.subspan(1);
        const auto batch = conjugate_update(prior, tail);
        const auto seq = conjugate_update(conjugate_update(prior, tail.first(cut)), tail.subspan(cut - 1));
        for (int k = 0; k < 5; ++k) {
            const CanonicalParams u{rng.uniform(-5.0, 5.0), rng.uniform(0.05, 0.95), rng.uniform(0.1, 5.0), 1.0};
            const double direct = log_posterior(prior, tail, u);
            const double closed = log_posterior(batch, {}, u);
            const double twice = log_posterior(seq, {}, u);
            worst = std::max({worst, rel_err(direct, closed), rel_err(closed, twice)});
        }
        if (std::abs(batch.r - seq.r) > 0.0) worst = std::max(worst, 1.0);
    }
    std::ostringstream d;
    d << "max relative deviation " << worst;
    return {"conjugacy closure", worst < 1e-9, d.str()};
}

SelftestCase map_bijections(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto p = random_ou(rng);
        const double h = rng.uniform(0.05, 2.0);
        const auto back = from_canonical(to_canonical(p, h));
        worst = std::max({worst, rel_err(back.k, p.k), rel_err(back.mu, p.mu), rel_err(back.sigma, p.sigma)});

        const double dt = rng.uniform(0.01, 0.9) / p.mu;
        const auto round = exactifying_params(perturbed_params(p, dt), dt);
        worst = std::max({worst, rel_err(round.k, p.k), rel_err(round.mu, p.mu), rel_err(round.sigma, p.sigma)});

        const auto sis = SisParams::from_r0(rng.uniform(1.05, 4.0), rng.uniform(0.05, 2.0), rng.uniform(50.0, 5000.0));
        const auto sback = ou_to_sis(sis_to_canonical(sis, h));
        worst = std::max({worst, rel_err(sback.beta_tx, sis.beta_tx), rel_err(sback.gamma_rec, sis.gamma_rec),
                          rel_err(sback.sigma_pop, sis.sigma_pop)});
    }
    std::ostringstream d;
    d << "max relative round-trip error " << worst;
    return {"map bijections", worst < 1e-8, d.str()};
}

SelftestCase weight_normalization(Rng& rng) {
    double worst = 0.0;
    // ABC on a toy simulator whose statistics are noisy functions of theta.
    const AbcSimulator toy = [](std::span<const double> th, std::uint64_t s) -> std::optional<SummaryStats> {
        Rng r(s);
        return SummaryStats{th[0] + 0.1 * r.normal(), th[1] + 0.1 * r.normal(), 1.0 + 0.1 * r.normal()};
    };
    const UniformPrior prior{{"a", "b"}, {0.0, 0.0}, {2.0, 2.0}};
    AbcConfig cfg;
    cfg.particles = 100;
    cfg.generations = 6;
    cfg.eps1 = 2.0;
    cfg.eps_decay = 0.3;
    const auto res = smc_abc(toy, prior, {1.0, 0.5, 1.0}, cfg, rng());
    for (const auto& g : res.generations) {
        const double s = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
        worst = std::max(worst, std::abs(s - 1.0));
        for (std::size_t i = 0; i < g.particles.size(); ++i)
            if (!prior.contains(g.particles[i]) || !(g.distances[i] < g.tolerance)) worst = 1.0;
    }
    // Posterior grid masses.
    const GridAxis a{"x", -2.0, 2.0, 31}, b{"y", 0.5, 3.0, 17};
    const double cx = rng.uniform(-1.0, 1.0);
    const auto grid = PosteriorGrid::evaluate(a, b, [cx](double x, double y) { return -50.0 * (x - cx) * (x - cx) * y; });
    double total = 0.0;
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t j = 0; j < b.n; ++j) total += grid.mass(i, j);
    worst = std::max(worst, std::abs(total - 1.0));
    std::ostringstream d;
    d << res.generations.size() << " ABC generations, max |sum - 1| " << worst;
    return {"weight normalization", worst < 1e-12 && res.generations.size() == cfg.generations, d.str()};
}

SelftestCase translation_invariance(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const CanonicalParams u{rng.uniform(-2.0, 2.0), rng.uniform(0.2, 0.9), rng.uniform(0.5, 3.0), 1.0};
        const OuParams p = from_canonical(u);
        const auto x = sample_exact(p, u.alpha, 1.0, 2000, rng());
        const double c = u.alpha + rng.uniform(-0.5, 0.5);
        const auto data = threshold_filter(x, {c});
        const double t = rng.uniform(-10.0, 10.0);
        for (int p_order : {0, 1, 2}) {
            const auto [l0, l1] = filter_shift_check(u, c, t, data, p_order);
            worst = std::max(worst, std::abs(l0 - l1));
        }
    }
    std::ostringstream d;
    d << "max |l(alpha, c) - l(alpha + t, c + t)| " << worst;
    return {"translation invariance", worst <= 1e-10, d.str()};
}

}  // namespace

bool SelftestReport::all_passed() const {
    return std::all_of(cases.begin(), cases.end(), [](const SelftestCase& c) { return c.passed; });
}

SelftestReport run_selftest(std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    SelftestReport report;
    using Suite = SelftestCase (*)(Rng&);
    const Suite suites[] = {conjugacy_closure, map_bijections, weight_normalization, translation_invariance};
    std::uint64_t idx = 0;
    for (Suite s : suites) {
        Rng rng(derive_seed(seed, idx++));
        try {
            report.cases.push_back(s(rng));
        } catch (const std::exception& e) {
            report.cases.push_back({"suite " + std::to_string(idx), false, std::string("exception: ") + e.what()});
        }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace epiou
