#include "phaseinfo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace phaseinfo {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void PhaseEnsemble::validate() const {
    if (n_shots < 1 || n_z < 1) throw ValidationError("ensemble must have n_shots >= 1 and n_z >= 1");
    if (samples.size() != static_cast<std::size_t>(n_shots) * n_z)
        throw ValidationError("sample matrix size does not match n_shots x n_z");
    if (grid.size() != static_cast<std::size_t>(n_z)) throw ValidationError("grid length does not match n_z");
    for (double v : samples)
        if (!std::isfinite(v)) throw ValidationError("non-finite sample value in ensemble");
    if (n_z > 1) {
        const double step = grid[1] - grid[0];
        if (step <= 0.0) throw ValidationError("grid must be strictly increasing");
        for (int j = 1; j < n_z; ++j) {
            const double s = grid[j] - grid[j - 1];
            if (s <= 0.0 || std::abs(s - step) > 1e-9 * std::abs(step))
                throw ValidationError("grid spacing not uniform within 1e-9 relative tolerance");
        }
        if (std::abs(dz - step) > 1e-9 * std::abs(step)) throw ValidationError("dz does not match grid spacing");
    }
}

PhaseEnsemble PhaseEnsemble::select_shots(std::span<const int> shots) const {
    PhaseEnsemble out;
    out.grid = grid;
    out.dz = dz;
    out.meta = meta;
    out.n_shots = static_cast<int>(shots.size());
    out.n_z = n_z;
    out.samples.resize(shots.size() * static_cast<std::size_t>(n_z));
    for (std::size_t r = 0; r < shots.size(); ++r) {
        const int s = shots[r];
        if (s < 0 || s >= n_shots) throw ValidationError("shot index out of range in select_shots");
        std::copy_n(samples.begin() + static_cast<std::size_t>(s) * n_z, n_z,
                    out.samples.begin() + r * static_cast<std::size_t>(n_z));
    }
    return out;
}

void PhaseEnsemble::append_history(const std::string& step) {
    if (!meta.contains("history")) meta["history"] = Meta::array();
    meta["history"].push_back(step);
}

PhaseEnsemble make_ensemble(int n_shots, std::vector<double> grid, Meta meta) {
    PhaseEnsemble e;
    e.n_shots = n_shots;
    e.n_z = static_cast<int>(grid.size());
    e.grid = std::move(grid);
    e.dz = e.n_z > 1 ? e.grid[1] - e.grid[0] : 0.0;
    e.meta = std::move(meta);
    e.samples.assign(static_cast<std::size_t>(n_shots) * e.n_z, 0.0);
    return e;
}

int Partition::boundary_count() const {
    const std::set<int> a(axes_a.begin(), axes_a.end());
    const std::set<int> b(axes_b.begin(), axes_b.end());
    int count = 0;
    for (int i : a)
        if (b.count(i + 1)) ++count;
    for (int i : b)
        if (a.count(i + 1)) ++count;
    return count;
}

void Partition::validate(int n_z) const {
    if (axes_a.empty() || axes_b.empty()) throw InvalidPartition("both subsystems must be nonempty");
    std::set<int> a(axes_a.begin(), axes_a.end());
    for (int i : axes_b)
        if (a.count(i)) throw InvalidPartition("subsystems A and B overlap at pixel " + std::to_string(i + 1));
    for (int i : axes_a)
        if (i < 0 || i >= n_z) throw InvalidPartition("A pixel index out of range: " + std::to_string(i + 1));
    for (int i : axes_b)
        if (i < 0 || i >= n_z) throw InvalidPartition("B pixel index out of range: " + std::to_string(i + 1));
}

std::string Partition::id() const {
    auto fmt = [](const std::vector<int>& v) {
        std::vector<int> s(v);
        std::sort(s.begin(), s.end());
        std::ostringstream os;
        for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i] + 1;
        return os.str();
    };
    return "A={" + fmt(axes_a) + "}|B={" + fmt(axes_b) + "}";
}

void DataCloud::compute_scale() {
    scale.assign(d, 0.0);
    if (n == 0) return;
    for (int a = 0; a < d; ++a) {
        double lo = (*this)(0, a), hi = lo;
        for (int i = 1; i < n; ++i) {
            lo = std::min(lo, (*this)(i, a));
            hi = std::max(hi, (*this)(i, a));
        }
        scale[a] = hi - lo;
    }
}

DataCloud DataCloud::select_rows(std::span<const int> rows) const {
    DataCloud out = make_cloud(static_cast<int>(rows.size()), d, d_a);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy_n(points.begin() + static_cast<std::size_t>(rows[r]) * d, d,
                    out.points.begin() + r * static_cast<std::size_t>(d));
    out.compute_scale();
    return out;
}

DataCloud make_cloud(int n, int d, int d_a) {
    DataCloud c;
    c.n = n;
    c.d = d;
    c.d_a = d_a;
    c.points.assign(static_cast<std::size_t>(n) * d, 0.0);
    return c;
}

std::vector<double> unwrap_profile(std::span<const double> wrapped) {
    std::vector<double> out(wrapped.begin(), wrapped.end());
    double offset = 0.0;
    for (std::size_t j = 1; j < out.size(); ++j) {
        const double diff = wrapped[j] - wrapped[j - 1];
        if (diff > std::numbers::pi)
            offset -= kTwoPi;
        else if (diff <= -std::numbers::pi)
            offset += kTwoPi;
        out[j] = wrapped[j] + offset;
    }
    return out;
}

double wrap_phase(double phi) {
    double w = std::remainder(phi, kTwoPi);  // (-pi, pi], remainder gives [-pi, pi]
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

PhaseEnsemble reduce_global_offset(const PhaseEnsemble& ens) {
    PhaseEnsemble out = ens;
    auto row_mean = [&](int i) {
        double acc = 0.0;
        for (int j = 0; j < ens.n_z; ++j) acc += out(i, j);
        return acc / ens.n_z;
    };
    for (int i = 0; i < ens.n_shots; ++i) {
        long m = static_cast<long>(std::floor(row_mean(i) / kTwoPi));
        // verify on the recomputed mean of the shifted row, so a second
        // application is a bit-level no-op even at the interval boundary
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double shift = -kTwoPi * static_cast<double>(m);
            for (int j = 0; j < ens.n_z; ++j) out(i, j) = ens(i, j) + shift;
            const double mu = row_mean(i);
            if (mu >= 0.0 && mu < kTwoPi) break;
            m += mu < 0.0 ? -1 : 1;
        }
    }
    out.append_history("reduce_global_offset");
    return out;
}

PhaseEnsemble coarse_grain(const PhaseEnsemble& ens, int target_nz) {
    if (target_nz < 1 || ens.n_z % target_nz != 0)
        throw IndivisibleGrid("n_z=" + std::to_string(ens.n_z) + " not divisible by target " +
                              std::to_string(target_nz));
    const int block = ens.n_z / target_nz;
    std::vector<double> grid(target_nz);
    for (int j = 0; j < target_nz; ++j) {
        double c = 0.0;
        for (int b = 0; b < block; ++b) c += ens.grid[j * block + b];
        grid[j] = c / block;
    }
    PhaseEnsemble out = make_ensemble(ens.n_shots, std::move(grid), ens.meta);
    for (int i = 0; i < ens.n_shots; ++i)
        for (int j = 0; j < target_nz; ++j) {
            double acc = 0.0;
            for (int b = 0; b < block; ++b) acc += ens(i, j * block + b);
            out(i, j) = acc / block;
        }
    out.meta["coarse_factor"] = block;
    out.append_history("coarse_grain to " + std::to_string(target_nz));
    return out;
}

PhaseEnsemble select_central(const PhaseEnsemble& ens, double fraction) {
    if (fraction <= 0.0 || fraction > 1.0) throw ValidationError("fraction must be in (0, 1]");
    const int keep = static_cast<int>(std::lround(fraction * ens.n_z));
    if (keep < 1) throw EmptySelection("central selection is empty");
    const int start = (ens.n_z - keep) / 2;
    PhaseEnsemble out = make_ensemble(
        ens.n_shots, std::vector<double>(ens.grid.begin() + start, ens.grid.begin() + start + keep), ens.meta);
    for (int i = 0; i < ens.n_shots; ++i)
        for (int j = 0; j < keep; ++j) out(i, j) = ens(i, start + j);
    out.append_history("select_central " + std::to_string(fraction));
    return out;
}

DataCloud build_cloud(const PhaseEnsemble& ens, const Partition& partition) {
    partition.validate(ens.n_z);
    std::vector<int> a(partition.axes_a), b(partition.axes_b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    DataCloud cloud = make_cloud(ens.n_shots, static_cast<int>(a.size() + b.size()), static_cast<int>(a.size()));
    for (int i = 0; i < ens.n_shots; ++i) {
        int col = 0;
        for (int j : a) cloud(i, col++) = ens(i, j);
        for (int j : b) cloud(i, col++) = ens(i, j);
    }
    cloud.compute_scale();
    return cloud;
}

}  // namespace phaseinfo
