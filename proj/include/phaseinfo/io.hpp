#pragma once

#include <filesystem>
#include <string>

#include "phaseinfo/analysis.hpp"
#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/fringe.hpp"

namespace phaseinfo {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kBuildId = "phaseinfo-0.1.0";

// 64-bit FNV-1a of a canonical string; stamps configs into output files
std::uint64_t fnv1a(const std::string& text);
std::string config_hash(const Meta& config);

// Ensemble files: CSV (one row per shot, one column per pixel, 17 significant
// digits) plus a JSON sidecar <base>.meta.json with grid, dz, units, source,
// seed and preprocessing history.
void write_ensemble(const PhaseEnsemble& ens, const std::filesystem::path& csv_path);
PhaseEnsemble read_ensemble(const std::filesystem::path& csv_path);

// Interferogram files: CSV matrix (n_z rows, n_x columns) plus meta sidecar
// holding the transverse grid.
void write_interferogram(const Interferogram& img, const std::filesystem::path& csv_path);
Interferogram read_interferogram(const std::filesystem::path& csv_path);

// ScanResult: machine-readable JSON plus a plot-ready long-format CSV.
void write_scan(const ScanResult& scan, const std::filesystem::path& base_path, Units units);
ScanResult read_scan(const std::filesystem::path& json_path);

Meta estimate_to_json(const EstimateWithCI& est);
EstimateWithCI estimate_from_json(const Meta& j);

}  // namespace phaseinfo
