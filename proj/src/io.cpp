#include "epiou/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace epiou {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e)
        throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

// Header plus numeric rows.
std::vector<std::vector<double>> read_table(const fs::path& path, std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split(line);
    std::vector<std::vector<double>> rows;
    std::size_t ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw IoError(path.string() + ":" + std::to_string(ln) + ": expected " + std::to_string(header.size()) +
                          " columns");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c, path, ln));
        rows.push_back(std::move(row));
    }
    return rows;
}

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want, const fs::path& path) {
    if (got != want) {
        std::string w;
        for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
        throw IoError(path.string() + ": expected header '" + w + "'");
    }
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_trajectory_csv(const fs::path& path, const Trajectory& x) {
    auto out = open_out(path);
    out << "t,value\n";
    for (std::size_t i = 0; i < x.values.size(); ++i)
        out << format_number(x.time(i)) << ',' << format_number(x.values[i]) << '\n';
    finish(out, path);
}

Trajectory read_trajectory_csv(const fs::path& path) {
    std::vector<std::string> header;
    const auto rows = read_table(path, header);
    expect_header(header, {"t", "value"}, path);
    Trajectory x;
    if (rows.empty()) return x;
    x.t0 = rows[0][0];
    if (rows.size() > 1) {
        x.h = rows[1][0] - rows[0][0];
        if (!(x.h > 0.0)) throw IoError(path.string() + ": time column must increase");
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (std::abs(rows[i][0] - x.time(i)) > 1e-6 * x.h * static_cast<double>(i + 1))
                throw IoError(path.string() + ": time grid is not uniform");
    }
    for (const auto& r : rows) x.values.push_back(r[1]);
    return x;
}

void write_event_path_csv(const fs::path& path, const EventPath& p) {
    auto out = open_out(path);
    const bool with_phi = !p.phi.empty();
    out << (with_phi ? "t,i_count,phi\n" : "t,i_count\n");
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        out << format_number(p.t[i]) << ',' << p.i_count[i];
        if (with_phi) out << ',' << format_number(p.phi[i]);
        out << '\n';
    }
    finish(out, path);
}

void write_series_csv(const fs::path& path, const BinarySeries& s) {
    auto out = open_out(path);
    out << "t,y\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out << format_number(static_cast<double>(i) * s.h) << ',' << s.values[i] << '\n';
    finish(out, path);
}

BinarySeries read_series_csv(const fs::path& path, std::vector<double> thresholds) {
    std::vector<std::string> header;
    const auto rows = read_table(path, header);
    expect_header(header, {"t", "y"}, path);
    BinarySeries s{1.0, {}, std::move(thresholds)};
    if (rows.size() > 1) s.h = rows[1][0] - rows[0][0];
    for (const auto& r : rows) {
        if (r[1] != std::floor(r[1])) throw IoError(path.string() + ": y must be an integer symbol");
        s.values.push_back(static_cast<int>(r[1]));
    }
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return s;
}

void write_posterior_grid(const fs::path& dir, const std::string& stem, const PosteriorGrid& g) {
    const auto& a1 = g.axis1();
    const auto& a2 = g.axis2();
    {
        const auto path = dir / (stem + ".csv");
        auto out = open_out(path);
        out << a1.name << '\\' << a2.name;
        for (std::size_t j = 0; j < a2.n; ++j) out << ',' << format_number(a2.value(j));
        out << '\n';
        for (std::size_t i = 0; i < a1.n; ++i) {
            out << format_number(a1.value(i));
            for (std::size_t j = 0; j < a2.n; ++j) out << ',' << format_number(g.mass(i, j));
            out << '\n';
        }
        finish(out, path);
    }
    auto axis_json = [](const GridAxis& a) { return nlohmann::json{{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; };
    const auto [ai, aj] = g.argmax();
    nlohmann::json meta{{"axis1", axis_json(a1)},
                        {"axis2", axis_json(a2)},
                        {"log_normalization", g.normalization()},
                        {"normalization", "masses sum to one over the grid nodes"},
                        {"argmax", {a1.value(ai), a2.value(aj)}},
                        {"mean", {g.summary1().mean, g.summary2().mean}},
                        {"sd", {g.summary1().sd, g.summary2().sd}}};
    write_json(dir / (stem + ".json"), meta);
    auto marginal = [&](const GridAxis& a, const std::vector<double>& m) {
        const auto path = dir / (stem + "_marginal_" + a.name + ".csv");
        auto out = open_out(path);
        out << a.name << ",mass\n";
        for (std::size_t i = 0; i < a.n; ++i) out << format_number(a.value(i)) << ',' << format_number(m[i]) << '\n';
        finish(out, path);
    };
    marginal(a1, g.marginal1());
    marginal(a2, g.marginal2());
}

void write_abc_generation_csv(const fs::path& path, const AbcPopulation& pop, const std::vector<std::string>& names) {
    auto out = open_out(path);
    out << "particle_id";
    for (const auto& n : names) out << ',' << n;
    out << ",weight,distance\n";
    for (std::size_t i = 0; i < pop.particles.size(); ++i) {
        out << i;
        for (double v : pop.particles[i]) out << ',' << format_number(v);
        out << ',' << format_number(pop.weights[i]) << ',' << format_number(pop.distances[i]) << '\n';
    }
    finish(out, path);
}

AbcPopulation read_abc_generation_csv(const fs::path& path, std::size_t dim) {
    std::vector<std::string> header;
    const auto rows = read_table(path, header);
    if (header.size() != dim + 3 || header.front() != "particle_id" || header[dim + 1] != "weight" ||
        header[dim + 2] != "distance")
        throw IoError(path.string() + ": not an ABC generation file for " + std::to_string(dim) + " parameters");
    AbcPopulation pop;
    for (const auto& r : rows) {
        pop.particles.emplace_back(r.begin() + 1, r.begin() + 1 + static_cast<std::ptrdiff_t>(dim));
        pop.weights.push_back(r[dim + 1]);
        pop.distances.push_back(r[dim + 2]);
    }
    if (pop.particles.empty()) throw IoError(path.string() + ": no particles");
    pop.accepted = pop.particles.size();
    return pop;
}

}  // namespace epiou
