#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hawkes/model.hpp"
#include "hawkes/paths.hpp"

namespace hawkes {

/*
 * Time-rescaled residuals per type: compensator values at the events, their
 * increments (unit-rate exponential under the true model) and the uniform
 * transforms 1 - exp(-increment).
 */
struct ResidualSet {
    std::vector<std::vector<double>> compensated;
    std::vector<std::vector<double>> increments;
    std::vector<std::vector<double>> uniform;
};

[[nodiscard]] ResidualSet residuals(const EventPath& path, const ModelSpec& model, std::span<const double> theta);

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
    double critical_99{0.0};

    [[nodiscard]] bool passes_99() const noexcept { return statistic <= critical_99; }
};

// Survival function of the Kolmogorov distribution, series cut at 100 terms.
[[nodiscard]] double kolmogorov_sf(double lambda);

// One-sample test against Uniform[0, 1]; needs at least 10 values.
[[nodiscard]] KsResult ks_uniform(std::span<const double> z);

// Two-sample test with the asymptotic p-value; critical value at 1%.
[[nodiscard]] KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct BridgeSeries {
    std::vector<double> position;  // m / (N + 1)
    std::vector<double> value;     // sqrt(N - 1) (z_(m) - m / (N + 1))
    double band{0.0};              // 99% band is +- band
};

[[nodiscard]] BridgeSeries bridge_series(std::span<const double> z);

struct QqSeries {
    std::vector<double> theoretical;  // unit exponential quantiles at m / (N + 1)
    std::vector<double> empirical;    // sorted increments
};

[[nodiscard]] QqSeries qq_series(std::span<const double> increments);

// Per-kernel terms behind both metrics, indexed k * d + i.
struct MetricReport {
    double l2_rel_err{0.0};
    double wass_err{0.0};
    double background_sq{0.0};                // sum (mu* - mu)^2
    double background_abs{0.0};               // sum |mu* - mu|
    std::vector<double> kernel_l2_sq;         // ||phi*_ki - phi_ki||^2
    std::vector<double> kernel_transport;     // W1 of the normalised kernels
    std::vector<double> kernel_mass_gap;      // | ||phi*_ki|| - ||phi_ki|| |
};

/*
 * Both error metrics against a reference model of the same dimension. The
 * families may differ. The transport term needs positive kernel masses;
 * with allow_zero_mass a pair with an empty side contributes no transport
 * term (only its mass gap), otherwise ArgumentError. l2_rel_err is NaN when
 * the reference has no background or no kernel mass.
 */
[[nodiscard]] MetricReport compare_models(const ModelSpec& truth, std::span<const double> truth_theta,
                                          const ModelSpec& model, std::span<const double> theta,
                                          bool allow_zero_mass = false);

[[nodiscard]] double l2_rel_err(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                                std::span<const double> theta);
[[nodiscard]] double wass_err(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                              std::span<const double> theta, bool allow_zero_mass = false);

// Integral of (a - b)^2 over [0, inf).
[[nodiscard]] double kernel_distance_sq(KernelView a, KernelView b);
// W1 between a / ||a|| and b / ||b||.
[[nodiscard]] double kernel_transport(KernelView a, KernelView b);

}  // namespace hawkes
