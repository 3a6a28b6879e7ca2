#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseinfo/errors.hpp"

namespace phaseinfo {

using Meta = nlohmann::ordered_json;

// Ensemble of 1D relative-phase profiles: n_shots rows sampled on a common
// uniform spatial grid (pixel centers, micrometres). Values in radians.
// Immutable by convention: every operation returns a new ensemble.
struct PhaseEnsemble {
    std::vector<double> samples;  // row-major, n_shots x n_z
    std::vector<double> grid;     // pixel centers [um], strictly increasing, uniform
    double dz = 0.0;              // pixel pitch [um]
    Meta meta;                    // provenance: source, seed, parameters, history

    int n_shots = 0;
    int n_z = 0;

    double operator()(int shot, int pixel) const { return samples[static_cast<std::size_t>(shot) * n_z + pixel]; }
    double& operator()(int shot, int pixel) { return samples[static_cast<std::size_t>(shot) * n_z + pixel]; }
    std::span<const double> row(int shot) const {
        return {samples.data() + static_cast<std::size_t>(shot) * n_z, static_cast<std::size_t>(n_z)};
    }

    // Checks the type invariants; throws ValidationError on violation.
    void validate() const;

    // New ensemble containing the given shots (in the given order).
    PhaseEnsemble select_shots(std::span<const int> shots) const;

    void append_history(const std::string& step);
};

PhaseEnsemble make_ensemble(int n_shots, std::vector<double> grid, Meta meta = {});

// Assignment of pixels to subsystems A and B. Indices are 0-based and must be
// disjoint, nonempty, and valid for the grid they are used with.
struct Partition {
    std::vector<int> axes_a;
    std::vector<int> axes_b;

    // number of adjacent pixel pairs (i, i+1) with one member in A, one in B
    int boundary_count() const;
    void validate(int n_z) const;
    std::string id() const;  // e.g. "A={1,2,3}|B={4,5,6}" (1-based labels)
};

// N points in D dimensions with the first d_a axes belonging to subsystem A.
// Column order: A axes ascending pixel index, then B axes ascending.
struct DataCloud {
    std::vector<double> points;  // row-major, n x d
    int n = 0;
    int d = 0;
    int d_a = 0;
    std::vector<double> scale;  // per-axis data range, jitter amplitude reference

    double operator()(int i, int axis) const { return points[static_cast<std::size_t>(i) * d + axis]; }
    double& operator()(int i, int axis) { return points[static_cast<std::size_t>(i) * d + axis]; }
    std::span<const double> point(int i) const {
        return {points.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
    }
    int d_b() const { return d - d_a; }

    void compute_scale();
    DataCloud select_rows(std::span<const int> rows) const;
};

DataCloud make_cloud(int n, int d, int d_a);

// -- preprocessing ----------------------------------------------------------

// Unwraps a profile of phases in (-pi, pi] by assuming neighbouring pixels
// never jump by more than 2pi. First element is kept; every output differs
// from its input by an integer multiple of 2pi.
std::vector<double> unwrap_profile(std::span<const double> wrapped);

// Wraps values back to (-pi, pi].
double wrap_phase(double phi);

// Shifts each profile by a multiple of 2pi so its spatial mean lies in
// [0, 2pi). Leaves intra-profile differences and <cos phi> unchanged.
PhaseEnsemble reduce_global_offset(const PhaseEnsemble& ens);

// Block-averages to target_nz equal contiguous blocks; new grid points are
// block centers. Throws IndivisibleGrid if n_z % target_nz != 0.
PhaseEnsemble coarse_grain(const PhaseEnsemble& ens, int target_nz);

// Keeps the centered contiguous block of round(fraction * n_z) pixels.
PhaseEnsemble select_central(const PhaseEnsemble& ens, double fraction);

// One cloud point per shot; coordinates are phase values at the partition's
// pixels, A axes first. Throws InvalidPartition on overlap / bad indices.
DataCloud build_cloud(const PhaseEnsemble& ens, const Partition& partition);

}  // namespace phaseinfo
