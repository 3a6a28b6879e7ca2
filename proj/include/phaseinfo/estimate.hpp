#pragma once

#include <cmath>
#include <numbers>
#include <string>

namespace phaseinfo {

enum class Units { nats, bits };

inline const char* to_string(Units u) { return u == Units::nats ? "nats" : "bits"; }

// Scalar estimate with jackknife standard error and 95% interval
// (ci = value +- 2 * std_error).
struct EstimateWithCI {
    double value = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    Units units = Units::nats;
    int k = 0;
    int n_samples = 0;
    std::string method;

    EstimateWithCI to_bits() const {
        EstimateWithCI out = *this;
        if (units == Units::bits) return out;
        const double f = 1.0 / std::numbers::ln2;
        out.value *= f;
        out.std_error *= f;
        out.ci_lo *= f;
        out.ci_hi *= f;
        out.units = Units::bits;
        return out;
    }

    EstimateWithCI to_nats() const {
        EstimateWithCI out = *this;
        if (units == Units::nats) return out;
        const double f = std::numbers::ln2;
        out.value *= f;
        out.std_error *= f;
        out.ci_lo *= f;
        out.ci_hi *= f;
        out.units = Units::nats;
        return out;
    }
};

inline EstimateWithCI make_estimate(double value, double std_error, std::string method, int k = 0,
                                    int n_samples = 0) {
    EstimateWithCI e;
    e.value = value;
    e.std_error = std_error;
    e.ci_lo = value - 2.0 * std_error;
    e.ci_hi = value + 2.0 * std_error;
    e.method = std::move(method);
    e.k = k;
    e.n_samples = n_samples;
    return e;
}

}  // namespace phaseinfo
