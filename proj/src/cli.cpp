#include "epiou/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "epiou/abc_engine.hpp"
#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/io.hpp"
#include "epiou/numerics.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/posterior_grid.hpp"
#include "epiou/random.hpp"
#include "epiou/sde_estimators.hpp"
#include "epiou/selftest.hpp"
#include "epiou/state_filters.hpp"

namespace epiou::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { number, integer, text, flag, numbers };

struct OptionSpec {
    std::string key;
    Kind kind;
    std::string help;
};

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("--" + dashed(key) + ": not a number: " + s);
    return v;
}

json parse_cli_value(const OptionSpec& spec, const std::string& s) {
    switch (spec.kind) {
        case Kind::number:
            return parse_double(spec.key, s);
        case Kind::integer: {
            long long v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw ConfigError("--" + dashed(spec.key) + ": not an integer: " + s);
            return v;
        }
        case Kind::numbers: {
            json arr = json::array();
            std::istringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) arr.push_back(parse_double(spec.key, item));
            return arr;
        }
        case Kind::flag:
            return true;
        case Kind::text:
        default:
            return s;
    }
}

void check_json_value(const OptionSpec& spec, const json& v) {
    bool ok = false;
    switch (spec.kind) {
        case Kind::number: ok = v.is_number(); break;
        case Kind::integer: ok = v.is_number_integer(); break;
        case Kind::text: ok = v.is_string(); break;
        case Kind::flag: ok = v.is_boolean(); break;
        case Kind::numbers:
            ok = v.is_number() || (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); }));
            break;
    }
    if (!ok) throw ConfigError("config key '" + spec.key + "' has the wrong type");
}

/// Merged settings of one command invocation.
class Settings {
public:
    json values = json::object();

    bool has(const std::string& k) const { return values.contains(k); }

    double number(const std::string& k) const {
        require(k);
        return values.at(k).get<double>();
    }
    double number_or(const std::string& k, double def) const { return has(k) ? number(k) : def; }

    long long integer(const std::string& k) const {
        require(k);
        return values.at(k).get<long long>();
    }
    long long integer_or(const std::string& k, long long def) const { return has(k) ? integer(k) : def; }
    std::size_t count_or(const std::string& k, std::size_t def) const {
        const long long v = integer_or(k, static_cast<long long>(def));
        if (v < 0) throw ConfigError("--" + dashed(k) + " must be nonnegative");
        return static_cast<std::size_t>(v);
    }

    std::string text(const std::string& k) const {
        require(k);
        return values.at(k).get<std::string>();
    }
    std::string text_or(const std::string& k, const std::string& def) const { return has(k) ? text(k) : def; }

    bool flag(const std::string& k) const { return has(k) && values.at(k).get<bool>(); }

    std::vector<double> numbers(const std::string& k) const {
        require(k);
        const auto& v = values.at(k);
        if (v.is_number()) return {v.get<double>()};
        return v.get<std::vector<double>>();
    }

    void require(const std::string& k) const {
        if (!has(k)) throw ConfigError("missing required setting --" + dashed(k));
    }
};

struct Context {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    fs::path out_dir = "out";
    std::ostream& out;
    std::ostream& err;
    std::string command;
    std::vector<std::string> outputs;

    fs::path output(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }
};

void write_manifest(Context& ctx, const Settings& s, json extra = json::object()) {
    json config = s.values;
    config["seed"] = ctx.seed;
    write_json(ctx.out_dir / "config.json", config);
    json manifest{{"command", ctx.command},
                  {"seed", ctx.seed},
                  {"threads", ctx.threads},
                  {"config", config},
                  {"rerun", "epiou " + ctx.command + " --config config.json --out <dir>"},
                  {"outputs", ctx.outputs}};
    for (auto& [k, v] : extra.items()) manifest[k] = v;
    write_json(ctx.out_dir / "manifest.json", manifest);
}

// ---------------------------------------------------------------- simulate

const std::vector<OptionSpec> kSimulateOptions = {
    {"model", Kind::text, "ou | sis | sise | network"},
    {"k", Kind::number, "OU drift offset"},
    {"mu", Kind::number, "OU mean reversion rate"},
    {"noise", Kind::number, "OU diffusion amplitude sigma"},
    {"x0", Kind::number, "OU initial state (default k/mu)"},
    {"method", Kind::text, "OU sampler: exact | euler"},
    {"dt", Kind::number, "Euler step (must divide h; default h)"},
    {"r0", Kind::number, "SIS basic reproduction number"},
    {"beta", Kind::number, "transmission rate (SIS_E, network)"},
    {"gamma", Kind::number, "recovery rate"},
    {"rho", Kind::number, "SIS_E pressure decay rate"},
    {"sigma", Kind::number, "population size"},
    {"i0", Kind::integer, "initial infected count (default: endemic level)"},
    {"phi0", Kind::number, "SIS_E initial pressure (default i0/(sigma rho))"},
    {"h", Kind::number, "sampling step (default 1)"},
    {"n", Kind::integer, "number of steps"},
    {"tend", Kind::number, "end time (alternative to n)"},
    {"events", Kind::flag, "also write the jump path"},
    {"ode", Kind::flag, "also write the deterministic ODE solution"},
    {"thresholds", Kind::numbers, "write the threshold-filtered series"},
    {"sigmoid_c", Kind::number, "write a logistic-filtered series centered here"},
    {"sigmoid_w", Kind::number, "logistic filter width (default 1)"},
    {"network_model", Kind::text, "network dynamics: sis | sise"},
    {"nodes", Kind::integer, "network node count"},
    {"median_population", Kind::number, "median node population"},
    {"events_per_node_day", Kind::number, "movement events per node and day"},
    {"sentinels", Kind::integer, "sentinel count (0 = all)"},
    {"threshold", Kind::number, "sentinel prevalence threshold"},
    {"initial_prevalence", Kind::number, "initial nodal prevalence"},
    {"sample_period", Kind::number, "sentinel sampling period"},
};

std::size_t step_count(const Settings& s, double h) {
    if (s.has("n")) {
        const auto n = s.integer("n");
        if (n < 1) throw ConfigError("--n must be positive");
        return static_cast<std::size_t>(n);
    }
    const double tend = s.number("tend");
    if (!(tend > 0.0)) throw ConfigError("--tend must be positive");
    return static_cast<std::size_t>(std::floor(tend / h + 1e-9));
}

int cmd_simulate(Context& ctx, const Settings& s) {
    const std::string model = s.text("model");
    const double h = s.number_or("h", 1.0);
    if (!(h > 0.0)) throw ConfigError("--h must be positive");
    Trajectory traj;
    json params;
    if (model == "ou") {
        const OuParams p{s.number("k"), s.number("mu"), s.number("noise")};
        validate(p, NoiseCheck::allow_zero);
        const std::size_t n = step_count(s, h);
        const double x0 = s.number_or("x0", p.k / p.mu);
        const std::string method = s.text_or("method", "exact");
        if (method == "exact") {
            traj = sample_exact(p, x0, h, n, ctx.seed);
        } else if (method == "euler") {
            const double dt = s.number_or("dt", h);
            const double ratio = h / dt;
            const auto m = static_cast<std::size_t>(std::llround(ratio));
            if (m < 1 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio)
                throw ConfigError("--dt must divide --h");
            const auto fine = sample_euler(p, x0, dt, n * m, ctx.seed);
            traj.h = h;
            traj.seed = ctx.seed;
            for (std::size_t i = 0; i <= n; ++i) traj.values.push_back(fine.values[i * m]);
        } else {
            throw ConfigError("--method must be exact or euler");
        }
        params = {{"k", p.k}, {"mu", p.mu}, {"sigma", p.sigma}, {"x0", x0}, {"method", method}};
    } else if (model == "sis") {
        const auto p = SisParams::from_r0(s.number("r0"), s.number("gamma"), s.number("sigma"));
        p.validate();
        const std::size_t n = step_count(s, h);
        const long i0 = static_cast<long>(
            s.integer_or("i0", std::max(1L, std::lround(std::max(p.endemic_level(), 1.0)))));
        if (s.flag("events")) {
            const auto path = simulate_ctmc_sis(p, i0, static_cast<double>(n) * h, ctx.seed);
            write_event_path_csv(ctx.output("events.csv"), path);
            traj = sample_path(path, h, n);
        } else {
            traj = sample_ctmc_sis(p, i0, h, n, ctx.seed);
        }
        traj.seed = ctx.seed;
        if (s.flag("ode")) {
            std::vector<double> grid(n + 1);
            for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * h;
            const auto sol = solve_ode_sis(p, static_cast<double>(i0), grid);
            std::ostringstream csv;
            csv << "t,s,i\n";
            for (std::size_t i = 0; i < sol.t.size(); ++i)
                csv << format_number(sol.t[i]) << ',' << format_number(sol.s[i]) << ',' << format_number(sol.i[i]) << '\n';
            write_text(ctx.output("ode.csv"), csv.str());
        }
        params = {{"beta_tx", p.beta_tx}, {"gamma_rec", p.gamma_rec}, {"sigma_pop", p.sigma_pop}, {"r0", p.r0()}, {"i0", i0}};
    } else if (model == "sise") {
        const SiseParams p{s.number("beta"), s.number("gamma"), s.number("rho"), s.number("sigma")};
        p.validate();
        const std::size_t n = step_count(s, h);
        const long i0 = static_cast<long>(s.integer_or("i0", std::lround(0.1 * p.sigma_pop)));
        const double phi0 = s.number_or("phi0", static_cast<double>(i0) / (p.sigma_pop * p.rho));
        const auto path = simulate_ctmc_sise(p, i0, phi0, static_cast<double>(n) * h, ctx.seed);
        if (s.flag("events")) write_event_path_csv(ctx.output("events.csv"), path);
        traj = sample_path(path, h, n);
        traj.seed = ctx.seed;
        if (s.flag("ode")) {
            std::vector<double> grid(n + 1);
            for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * h;
            const auto sol = solve_ode_sise(p, static_cast<double>(i0), phi0, grid);
            std::ostringstream csv;
            csv << "t,s,i,phi\n";
            for (std::size_t i = 0; i < sol.t.size(); ++i)
                csv << format_number(sol.t[i]) << ',' << format_number(sol.s[i]) << ',' << format_number(sol.i[i])
                    << ',' << format_number(sol.phi[i]) << '\n';
            write_text(ctx.output("ode.csv"), csv.str());
        }
        params = {{"beta_tx", p.beta_tx}, {"gamma_rec", p.gamma_rec}, {"rho", p.rho}, {"sigma_pop", p.sigma_pop},
                  {"i0", i0}, {"phi0", phi0}};
    } else if (model == "network") {
        NetworkGeneratorConfig g;
        g.nodes = s.count_or("nodes", g.nodes);
        g.median_population = s.number_or("median_population", g.median_population);
        g.events_per_node_day = s.number_or("events_per_node_day", g.events_per_node_day);
        g.t_end = s.number("tend");
        g.sentinels = s.count_or("sentinels", g.sentinels);
        g.threshold_c = s.number_or("threshold", g.threshold_c);
        g.initial_prevalence = s.number_or("initial_prevalence", g.initial_prevalence);
        g.sample_period = s.number_or("sample_period", g.sample_period);
        const std::string nm = s.text_or("network_model", "sis");
        if (nm != "sis" && nm != "sise") throw ConfigError("--network-model must be sis or sise");
        NodeDynamics dyn{nm == "sis" ? EpiModel::sis : EpiModel::sise, s.number("beta"), s.number("gamma"),
                         s.number_or("rho", 0.45)};
        const auto net = generate_network(g, dyn, derive_seed(ctx.seed, 1));
        const auto res = simulate_network(net, g.t_end, derive_seed(ctx.seed, 2));
        traj = res.pseudo_prevalence;
        std::ostringstream csv;
        csv << "t";
        for (auto id : net.sentinels) csv << ",node_" << id;
        csv << '\n';
        for (std::size_t i = 0; i < traj.values.size(); ++i) {
            csv << format_number(traj.time(i));
            for (const auto& ser : res.sentinel_series) csv << ',' << ser.values[i];
            csv << '\n';
        }
        write_text(ctx.output("sentinels.csv"), csv.str());
        params = {{"beta_tx", dyn.beta_tx},
                  {"gamma_rec", dyn.gamma_rec},
                  {"skipped_movements", res.skipped_movements},
                  {"partial_movements", res.partial_movements},
                  {"sentinel_events_per_node_day", res.sentinel_events_per_node_day}};
    } else {
        throw ConfigError("--model must be ou, sis, sise or network");
    }

    write_trajectory_csv(ctx.output("trajectory.csv"), traj);
    if (s.has("thresholds")) write_series_csv(ctx.output("series.csv"), threshold_filter(traj, s.numbers("thresholds")));
    if (s.has("sigmoid_c")) {
        const auto resp = logistic_response(s.number("sigmoid_c"), s.number_or("sigmoid_w", 1.0));
        write_series_csv(ctx.output("sigmoid_series.csv"), sigmoid_filter_sample(traj, resp, derive_seed(ctx.seed, 3)));
    }
    write_json(ctx.output("trajectory.json"), json{{"seed", ctx.seed}, {"model", model}, {"h", traj.h}, {"params", params}});
    write_manifest(ctx, s);
    ctx.out << "wrote " << traj.values.size() << " samples to " << (ctx.out_dir / "trajectory.csv").string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- fit

const std::vector<OptionSpec> kFitOptions = {
    {"input", Kind::text, "trajectory CSV (t,value)"},
    {"map", Kind::text, "none | sis: also report SIS parameters"},
};

int cmd_fit(Context& ctx, const Settings& s) {
    const auto data = read_trajectory_csv(s.text("input"));
    const std::string map = s.text_or("map", "none");
    if (map != "none" && map != "sis") throw ConfigError("--map must be none or sis");
    const auto est = lsq_fit(data);
    json report{{"n_transitions", est.n},
                {"h", data.h},
                {"alpha_hat", est.alpha_hat},
                {"beta_hat", est.beta_hat},
                {"gamma_hat", est.gamma_hat},
                {"residual_ss", est.residual_ss}};
    bool degraded = false;
    const CanonicalParams u{est.alpha_hat, est.beta_hat, est.gamma_hat, data.h};
    if (est.beta_hat > 0.0 && est.beta_hat < 1.0 && std::isfinite(est.gamma_hat) && est.gamma_hat > 0.0) {
        const auto v = bvm_covariance(u, est.n);
        report["sd"] = {{"alpha", std::sqrt(v.alpha)}, {"beta", std::sqrt(v.beta)}, {"gamma", std::sqrt(v.gamma)}};
        const auto ou = from_canonical(u);
        report["ou"] = {{"k", ou.k}, {"mu", ou.mu}, {"sigma", ou.sigma}};
        if (map == "sis") {
            std::optional<SisParams> mapped;
            try {
                mapped = ou_to_sis(u);
            } catch (const std::domain_error&) {
            }
            if (mapped) {
                const auto& sis = *mapped;
                report["sis"] = {{"r0", sis.r0()},
                                 {"sd_r0", std::sqrt(var_r0_asymptotic(sis, data.h, est.n))},
                                 {"sigma_pop", sis.sigma_pop},
                                 {"gamma_rec", sis.gamma_rec},
                                 {"beta_tx", sis.beta_tx}};
            } else {
                degraded = true;
                report["sis"] = "estimates do not map to an endemic SIS model";
            }
        }
    } else {
        degraded = true;
        report["warning"] = "estimates outside the stationary region (beta in (0,1), finite gamma)";
    }
    write_json(ctx.output("report.json"), report);
    write_manifest(ctx, s);
    ctx.out << report.dump(2) << '\n';
    return degraded ? kDegraded : kOk;
}

// ---------------------------------------------------------------- grid

const std::vector<OptionSpec> kGridOptions = {
    {"kind", Kind::text, "full_state (R0, gamma_rec) | binary (R0, sigma_pop) | pseudo (alpha, gamma)"},
    {"input", Kind::text, "trajectory CSV (full_state) or series CSV t,y (binary, pseudo)"},
    {"x_lo", Kind::number, "first axis lower bound"},
    {"x_hi", Kind::number, "first axis upper bound"},
    {"x_n", Kind::integer, "first axis points"},
    {"y_lo", Kind::number, "second axis lower bound"},
    {"y_hi", Kind::number, "second axis upper bound"},
    {"y_n", Kind::integer, "second axis points"},
    {"sigma_pop", Kind::number, "fixed population (full_state)"},
    {"gamma_rec", Kind::number, "fixed recovery rate (binary)"},
    {"beta", Kind::number, "fixed AR(1) coefficient (pseudo)"},
    {"threshold", Kind::number, "binary threshold c"},
    {"thresholds", Kind::numbers, "thresholds for pseudo (one or two)"},
    {"p", Kind::integer, "block order for pseudo (0..2, default 1)"},
    {"particles", Kind::integer, "particle count (binary, default 100)"},
    {"dt", Kind::number, "Kalman step (default h/4)"},
    {"singular_overlay", Kind::flag, "write the theoretical singular curve"},
    {"true_r0", Kind::number, "reference R0 for the overlay (binary)"},
    {"true_sigma", Kind::number, "reference population for the overlay (binary)"},
    {"true_alpha", Kind::number, "reference alpha for the overlay (pseudo)"},
    {"true_gamma", Kind::number, "reference gamma for the overlay (pseudo)"},
};

int cmd_grid(Context& ctx, const Settings& s) {
    const std::string kind = s.text("kind");
    auto axis = [&](const std::string& pre, const std::string& name) {
        const auto n = s.integer(pre + "_n");
        if (n < 1) throw ConfigError("--" + pre + "-n must be positive (empty grid)");
        GridAxis a{name, s.number(pre + "_lo"), s.number(pre + "_hi"), static_cast<std::size_t>(n)};
        try {
            a.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        return a;
    };
    std::function<double(double, double)> fn;
    GridAxis ax, ay;
    std::string overlay_csv;
    if (kind == "full_state") {
        ax = axis("x", "r0");
        ay = axis("y", "gamma_rec");
        const auto data = read_trajectory_csv(s.text("input"));
        const double sigma = s.number("sigma_pop");
        const double dt = s.number_or("dt", data.h / 4.0);
        fn = [data, sigma, dt](double r0, double g) {
            return kalman_loglik(SisParams::from_r0(r0, g, sigma), data, dt).log_lik;
        };
    } else if (kind == "binary") {
        ax = axis("x", "r0");
        ay = axis("y", "sigma_pop");
        const double c = s.number("threshold");
        const auto data = read_series_csv(s.text("input"), {c});
        const double g = s.number("gamma_rec");
        const double dt = s.number_or("dt", data.h / 4.0);
        const std::size_t m = s.count_or("particles", 100);
        fn = [data, c, g, dt, m](double r0, double sigma) {
            if (!(r0 > 1.0) || !(c < sigma)) return -std::numeric_limits<double>::infinity();
            return particle_kalman_binary_loglik(SisParams::from_r0(r0, g, sigma), data, c, m, dt).log_lik;
        };
        if (s.flag("singular_overlay")) {
            const auto truth = SisParams::from_r0(s.number("true_r0"), g, s.number("true_sigma"));
            std::vector<double> r0s;
            for (std::size_t i = 0; i < 4 * ax.n; ++i) {
                const double r = ax.lo + (ax.hi - ax.lo) * static_cast<double>(i) / static_cast<double>(4 * ax.n - 1);
                if (r > 1.0) r0s.push_back(r);
            }
            std::ostringstream csv;
            csv << "r0,sigma_pop\n";
            for (auto [r, sg] : singular_curve_in_sis_plane(sis_to_canonical(truth, data.h), c, g, data.h, r0s))
                csv << format_number(r) << ',' << format_number(sg) << '\n';
            overlay_csv = csv.str();
        }
    } else if (kind == "pseudo") {
        ax = axis("x", "alpha");
        ay = axis("y", "gamma");
        const auto thresholds = s.numbers("thresholds");
        const auto data = read_series_csv(s.text("input"), thresholds);
        const double beta = s.number("beta");
        const int p = static_cast<int>(s.integer_or("p", 1));
        if (p < 0 || p > 2) throw ConfigError("--p must be 0, 1 or 2");
        const auto counts = block_counts(data, p);
        fn = [thresholds, beta, p, counts, h = data.h](double alpha, double gamma) {
            return pseudo_loglik(cell_law({alpha, beta, gamma, h}, thresholds, p), counts);
        };
        if (s.flag("singular_overlay")) {
            if (thresholds.size() != 1) throw ConfigError("--singular-overlay needs a single threshold");
            const auto set = singular_set({s.number("true_alpha"), beta, s.number("true_gamma"), data.h}, thresholds[0]);
            std::ostringstream csv;
            csv << "alpha,gamma\n";
            for (std::size_t j = 0; j < 4 * ay.n; ++j) {
                const double g = ay.lo + (ay.hi - ay.lo) * static_cast<double>(j) / static_cast<double>(4 * ay.n - 1);
                if (g > 0.0) csv << format_number(set.alpha_at(g)) << ',' << format_number(g) << '\n';
            }
            overlay_csv = csv.str();
        }
    } else {
        throw ConfigError("--kind must be full_state, binary or pseudo");
    }

    PosteriorGrid grid;
    try {
        grid = PosteriorGrid::evaluate(ax, ay, fn, ctx.threads);
    } catch (const std::domain_error& e) {
        ctx.err << "grid: " << e.what() << '\n';
        write_manifest(ctx, s, {{"status", "degraded"}});
        return kDegraded;
    }
    write_posterior_grid(ctx.out_dir, "grid", grid);
    for (const char* f : {"grid.csv", "grid.json"}) ctx.outputs.push_back(f);
    ctx.outputs.push_back("grid_marginal_" + ax.name + ".csv");
    ctx.outputs.push_back("grid_marginal_" + ay.name + ".csv");
    if (!overlay_csv.empty()) write_text(ctx.output("overlay.csv"), overlay_csv);
    write_manifest(ctx, s);
    const auto [i, j] = grid.argmax();
    ctx.out << "grid argmax " << ax.name << '=' << ax.value(i) << ' ' << ay.name << '=' << ay.value(j) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- abc

const std::vector<OptionSpec> kAbcOptions = {
    {"model", Kind::text, "sis | sise"},
    {"self_data", Kind::flag, "simulate the observed data from the truth parameters"},
    {"observed", Kind::text, "observed pseudo-prevalence CSV (t,value)"},
    {"network", Kind::text, "network JSON (default: synthetic generator)"},
    {"truth_beta", Kind::number, "true transmission rate (self-data)"},
    {"truth_gamma", Kind::number, "true recovery rate (self-data)"},
    {"truth_rho", Kind::number, "true pressure decay (self-data, sise)"},
    {"nodes", Kind::integer, "generator node count"},
    {"median_population", Kind::number, "generator median population"},
    {"events_per_node_day", Kind::number, "generator movement intensity"},
    {"sentinels", Kind::integer, "sentinel count (0 = all)"},
    {"threshold", Kind::number, "sentinel prevalence threshold"},
    {"initial_prevalence", Kind::number, "initial nodal prevalence"},
    {"sample_period", Kind::number, "sampling period (default 7)"},
    {"tend", Kind::number, "observation horizon"},
    {"particles", Kind::integer, "SMC particles"},
    {"generations", Kind::integer, "SMC generations"},
    {"eps1", Kind::number, "first tolerance"},
    {"eps_decay", Kind::number, "tolerance decay per generation"},
    {"min_acceptance", Kind::number, "acceptance-rate floor"},
    {"min_attempts", Kind::integer, "attempts before the floor applies"},
    {"batch", Kind::integer, "proposals per parallel batch"},
    {"prior_beta", Kind::numbers, "uniform prior box for beta (lo,hi)"},
    {"prior_gamma", Kind::numbers, "uniform prior box for gamma (lo,hi)"},
    {"prior_rho", Kind::numbers, "uniform prior box for rho (lo,hi)"},
    {"resume", Kind::text, "generation CSV to continue from"},
    {"resume_generation", Kind::integer, "generation index of --resume"},
};

json network_to_json(const NetworkModel& m) {
    json nodes = json::array();
    for (const auto& n : m.nodes) nodes.push_back({{"population", n.population}, {"initial_prevalence", n.initial_prevalence}});
    json moves = json::array();
    for (const auto& mv : m.movements) moves.push_back({mv.time, mv.src, mv.dst, mv.count});
    return {{"nodes", nodes}, {"movements", moves}, {"sentinels", m.sentinels},
            {"sample_period", m.sample_period}, {"threshold", m.threshold_c}};
}

NetworkModel network_from_json(const json& j) {
    static const std::vector<std::string> keys = {"nodes", "movements", "sentinels", "sample_period", "threshold"};
    for (auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("network file: unknown key '" + k + "'");
    try {
        NetworkModel m;
        for (const auto& n : j.at("nodes")) m.nodes.push_back({n.at("population").get<long>(), n.at("initial_prevalence").get<double>()});
        for (const auto& mv : j.value("movements", json::array()))
            m.movements.push_back({mv.at(0).get<double>(), mv.at(1).get<std::size_t>(), mv.at(2).get<std::size_t>(), mv.at(3).get<long>()});
        m.sentinels = j.at("sentinels").get<std::vector<std::size_t>>();
        m.sample_period = j.value("sample_period", 7.0);
        m.threshold_c = j.value("threshold", 0.3);
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network file: ") + e.what());
    }
}

int cmd_abc(Context& ctx, const Settings& s) {
    const std::string model_name = s.text_or("model", "sis");
    if (model_name != "sis" && model_name != "sise") throw ConfigError("--model must be sis or sise");
    const EpiModel em = model_name == "sis" ? EpiModel::sis : EpiModel::sise;
    const double t_end = s.number_or("tend", 365.0);

    NodeDynamics truth{em, s.number_or("truth_beta", 0.16), s.number_or("truth_gamma", 0.1), s.number_or("truth_rho", 0.45)};
    NetworkModel net;
    if (s.has("network")) {
        net = network_from_json(read_json(s.text("network")));
        net.dynamics = truth;
    } else {
        NetworkGeneratorConfig g;
        g.nodes = s.count_or("nodes", g.nodes);
        g.median_population = s.number_or("median_population", g.median_population);
        g.events_per_node_day = s.number_or("events_per_node_day", g.events_per_node_day);
        g.sentinels = s.count_or("sentinels", g.sentinels);
        g.threshold_c = s.number_or("threshold", g.threshold_c);
        g.initial_prevalence = s.number_or("initial_prevalence", g.initial_prevalence);
        g.sample_period = s.number_or("sample_period", g.sample_period);
        g.t_end = t_end;
        net = generate_network(g, truth, derive_seed(ctx.seed, 1));
    }
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    write_json(ctx.output("network.json"), network_to_json(net));

    Trajectory observed;
    if (s.has("observed")) {
        if (s.flag("self_data")) throw ConfigError("--observed and --self-data are exclusive");
        observed = read_trajectory_csv(s.text("observed"));
    } else {
        observed = simulate_network(net, t_end, derive_seed(ctx.seed, 2)).pseudo_prevalence;
    }
    write_trajectory_csv(ctx.output("observed.csv"), observed);
    SummaryStats obs_stats;
    try {
        obs_stats = summary_of(observed);
        abc_kernel(obs_stats, obs_stats);
    } catch (const std::domain_error& e) {
        ctx.err << "abc: observed series unusable: " << e.what() << '\n';
        write_manifest(ctx, s, {{"status", "degraded"}});
        return kDegraded;
    }

    UniformPrior prior;
    auto add_prior = [&](const std::string& name, std::vector<double> def) {
        const auto box = s.has("prior_" + name) ? s.numbers("prior_" + name) : def;
        if (box.size() != 2) throw ConfigError("--prior-" + name + " needs two numbers");
        prior.names.push_back(name);
        prior.lo.push_back(box[0]);
        prior.hi.push_back(box[1]);
    };
    add_prior("beta", {0.0, 1.0});
    add_prior("gamma", {0.0, 1.0});
    if (em == EpiModel::sise) add_prior("rho", {0.4, 0.5});
    try {
        prior.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    AbcConfig cfg;
    cfg.particles = s.count_or("particles", cfg.particles);
    cfg.generations = s.count_or("generations", cfg.generations);
    cfg.eps1 = s.number_or("eps1", cfg.eps1);
    cfg.eps_decay = s.number_or("eps_decay", cfg.eps_decay);
    cfg.min_acceptance = s.number_or("min_acceptance", cfg.min_acceptance);
    cfg.min_attempts_for_stop = s.count_or("min_attempts", cfg.min_attempts_for_stop);
    cfg.batch = s.count_or("batch", cfg.batch);
    cfg.max_generation = std::max(cfg.max_generation, cfg.generations);
    cfg.threads = ctx.threads;
    if (cfg.particles == 0 || cfg.generations == 0 || cfg.batch == 0)
        throw ConfigError("particles, generations and batch must be positive");

    std::optional<AbcPopulation> resume;
    if (s.has("resume")) {
        resume = read_abc_generation_csv(s.text("resume"), prior.dim());
        const auto g = s.integer("resume_generation");
        if (g < 1) throw ConfigError("--resume-generation must be positive");
        resume->generation = static_cast<std::size_t>(g);
        resume->tolerance = tolerance_schedule(resume->generation, cfg.eps1, cfg.eps_decay, cfg.max_generation);
    }

    const auto result = smc_abc(network_simulator(net, t_end), prior, obs_stats, cfg, derive_seed(ctx.seed, 3),
                                resume ? &*resume : nullptr);

    std::ostringstream acc;
    acc << "generation,tolerance,accepted,attempts,acceptance_rate\n";
    for (const auto& g : result.generations) {
        std::ostringstream name;
        name << "generation_" << std::setw(2) << std::setfill('0') << g.generation << ".csv";
        write_abc_generation_csv(ctx.output(name.str()), g, prior.names);
        acc << g.generation << ',' << format_number(g.tolerance) << ',' << g.accepted << ',' << g.attempts << ','
            << format_number(g.acceptance_rate()) << '\n';
    }
    write_text(ctx.output("acceptance.csv"), acc.str());

    json qcd_report = json::object();
    if (!result.generations.empty()) {
        const auto& last = result.generations.back();
        Rng rng(derive_seed(ctx.seed, 4));
        const std::size_t np = 20000;
        std::vector<std::vector<double>> prior_cols(prior.dim()), post_cols(prior.dim());
        std::vector<double> prior_r0, post_r0;
        for (std::size_t i = 0; i < np; ++i) {
            std::vector<double> th(prior.dim());
            for (std::size_t k = 0; k < prior.dim(); ++k) prior_cols[k].push_back(th[k] = rng.uniform(prior.lo[k], prior.hi[k]));
            const auto d = dynamics_from_theta(em, th);
            prior_r0.push_back(em == EpiModel::sis ? d.beta_tx / d.gamma_rec : std::sqrt(d.beta_tx / (d.gamma_rec * d.rho)));
        }
        for (const auto& th : last.particles) {
            for (std::size_t k = 0; k < prior.dim(); ++k) post_cols[k].push_back(th[k]);
            const auto d = dynamics_from_theta(em, th);
            post_r0.push_back(em == EpiModel::sis ? d.beta_tx / d.gamma_rec : std::sqrt(d.beta_tx / (d.gamma_rec * d.rho)));
        }
        if (last.particles.size() >= 20) {
            for (std::size_t k = 0; k < prior.dim(); ++k)
                qcd_report[prior.names[k]] = qcd_concentration(prior_cols[k], post_cols[k], last.weights);
            qcd_report["r0"] = qcd_concentration(prior_r0, post_r0, last.weights);
        }
        qcd_report["r0_quantiles"] = {weighted_quantile(post_r0, last.weights, 0.025),
                                      weighted_quantile(post_r0, last.weights, 0.5),
                                      weighted_quantile(post_r0, last.weights, 0.975)};
    }
    write_json(ctx.output("qcd.json"), qcd_report);

    json schedule = json::array();
    for (std::size_t n = 1; n <= cfg.generations; ++n) schedule.push_back(tolerance_schedule(n, cfg.eps1, cfg.eps_decay, cfg.max_generation));
    json priors = json::object();
    for (std::size_t k = 0; k < prior.dim(); ++k) priors[prior.names[k]] = {prior.lo[k], prior.hi[k]};
    write_manifest(ctx, s,
                   {{"schedule", schedule},
                    {"priors", priors},
                    {"observed_stats", {obs_stats.alpha_hat, obs_stats.beta_hat, obs_stats.gamma_hat}},
                    {"early_stop", result.early_stop},
                    {"stop_reason", result.stop_reason}});
    ctx.out << "abc: " << result.generations.size() << " generations written to " << ctx.out_dir.string() << '\n';
    if (result.early_stop) {
        ctx.err << "abc: early stop: " << result.stop_reason << '\n';
        return kDegraded;
    }
    return kOk;
}

// ---------------------------------------------------------------- selftest

int cmd_selftest(Context& ctx, const Settings&) {
    const auto report = run_selftest(ctx.seed);
    for (const auto& c : report.cases) ctx.out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ctx.out << "selftest finished in " << std::fixed << std::setprecision(2) << report.seconds << " s\n";
    return report.all_passed() ? kOk : kDegraded;
}

struct Command {
    const char* name;
    const char* help;
    const std::vector<OptionSpec>* options;
    int (*run)(Context&, const Settings&);
    bool writes_files;
};

const std::vector<OptionSpec> kNoOptions;

const Command kCommands[] = {
    {"simulate", "Simulate OU, SIS, SIS_E or network paths", &kSimulateOptions, cmd_simulate, true},
    {"fit", "Least-squares OU fit of a trajectory", &kFitOptions, cmd_fit, true},
    {"grid", "Tabulate a posterior on a parameter grid", &kGridOptions, cmd_grid, true},
    {"abc", "SMC-ABC on a network epidemic", &kAbcOptions, cmd_abc, true},
    {"selftest", "Run the built-in property checks", &kNoOptions, cmd_selftest, false},
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inference tools for OU meta-models of epidemics", "epiou"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    auto* opt_config = app.add_option("--config", config_path, "JSON config file");
    auto* opt_seed = app.add_option("--seed", seed, "root random seed");
    auto* opt_out = app.add_option("--out", out_dir, "output directory");
    auto* opt_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : kCommands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        sub->set_help_flag("--help", "Print this help message and exit");
        subs[c.name] = sub;
        for (const auto& o : *c.options) {
            auto& slot = raw[c.name][o.key];
            if (o.kind == Kind::flag)
                sub->add_flag("--" + dashed(o.key), o.help)->each([&slot](const std::string&) { slot = "1"; });
            else
                sub->add_option("--" + dashed(o.key), slot, o.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "epiou: " << e.what() << '\n';
        return kConfigError;
    }

    const Command* cmd = nullptr;
    for (const auto& c : kCommands)
        if (subs[c.name]->parsed()) cmd = &c;

    Context ctx{1, 1, "out", out, err, cmd->name, {}};
    try {
        Settings settings;
        json file = json::object();
        if (opt_config->count()) {
            file = read_json(config_path);
            if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
        }
        for (auto& [k, v] : file.items()) {
            if (k == "seed") {
                if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a nonnegative integer");
                ctx.seed = v.get<std::uint64_t>();
            } else if (k == "threads") {
                if (!v.is_number_unsigned() || v.get<unsigned>() == 0) throw ConfigError("config key 'threads' must be positive");
                ctx.threads = v.get<unsigned>();
            } else if (k == "out") {
                if (!v.is_string()) throw ConfigError("config key 'out' must be a string");
                ctx.out_dir = v.get<std::string>();
            } else {
                const auto it = std::find_if(cmd->options->begin(), cmd->options->end(),
                                             [&](const OptionSpec& o) { return o.key == k; });
                if (it == cmd->options->end()) throw ConfigError("unknown config key '" + k + "' for " + cmd->name);
                check_json_value(*it, v);
                settings.values[k] = v;
            }
        }
        for (const auto& o : *cmd->options) {
            auto* opt = subs[cmd->name]->get_option_no_throw("--" + dashed(o.key));
            if (opt && opt->count()) settings.values[o.key] = parse_cli_value(o, raw[cmd->name][o.key]);
        }
        if (opt_seed->count()) ctx.seed = seed;
        if (opt_threads->count()) ctx.threads = threads;
        if (opt_out->count()) ctx.out_dir = out_dir;

        if (cmd->writes_files) {
            std::error_code ec;
            fs::create_directories(ctx.out_dir, ec);
            if (ec) throw IoError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
        }
        return cmd->run(ctx, settings);
    } catch (const ConfigError& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kIoError;
    } catch (const std::invalid_argument& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "epiou " << cmd->name << ": " << e.what() << '\n';
        return kIoError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("epiou");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace epiou::cli
