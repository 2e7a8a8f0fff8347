#pragma once

// File formats: CSV tables with shortest round-trip number formatting and
// JSON sidecars/manifests.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiou/abc_engine.hpp"
#include "epiou/censored_inference.hpp"
#include "epiou/epi_models.hpp"
#include "epiou/ou_core.hpp"
#include "epiou/posterior_grid.hpp"

namespace epiou {

/// Unreadable/unwritable files and malformed tables.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// `t,value`
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& x);
/// Requires a uniform time grid; the step is taken from the first two rows.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// `t,i_count[,phi]`
void write_event_path_csv(const std::filesystem::path& path, const EventPath& path_data);

/// `t,y`; thresholds are not part of the file.
void write_series_csv(const std::filesystem::path& path, const BinarySeries& s);
BinarySeries read_series_csv(const std::filesystem::path& path, std::vector<double> thresholds);

/// Writes <stem>.csv (normalized masses, one row per axis1 value, with a
/// header of axis2 values), <stem>.json (axes and log normalization),
/// <stem>_marginal_<axis>.csv for both axes.
void write_posterior_grid(const std::filesystem::path& dir, const std::string& stem, const PosteriorGrid& g);

/// `particle_id,<names...>,weight,distance`
void write_abc_generation_csv(const std::filesystem::path& path, const AbcPopulation& pop,
                              const std::vector<std::string>& names);
AbcPopulation read_abc_generation_csv(const std::filesystem::path& path, std::size_t dim);

}  // namespace epiou
