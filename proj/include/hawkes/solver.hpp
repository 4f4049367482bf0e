#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hawkes/model.hpp"
#include "hawkes/paths.hpp"
#include "hawkes/strata.hpp"

namespace hawkes {

// Sampling plans for every sum entering the gradient of row k.
struct RowPlans {
    std::vector<SingleSumPlan> single;   // per source type i
    std::vector<DoubleSumPlan> excite;   // per source type j: pairs (t^k_m, t^j_n)
    std::vector<DoubleSumPlan> overlap;  // i * d + j: pairs (t^i_m, t^j_n)
};

[[nodiscard]] RowPlans make_row_plans(const EventPath& path, const ModelSpec& model, std::size_t k,
                                      const StrataConfig& config);

// Allocations fitted for each double sum, same indexing as RowPlans.
struct RowAllocations {
    std::vector<std::vector<double>> excite;
    std::vector<std::vector<double>> overlap;

    [[nodiscard]] bool empty() const noexcept { return excite.empty() && overlap.empty(); }
};

// EMA of the two most recent allocations; either may be empty.
[[nodiscard]] RowAllocations blend_allocations(const RowAllocations& last, const RowAllocations& before,
                                               double weight);

struct GradientEstimate {
    std::vector<double> values;  // aligned with row k of theta
    RowAllocations allocation;
};

// Identifies the random stream of one gradient estimate.
struct EstimateStream {
    std::uint64_t seed{0};
    std::uint64_t iteration{0};
};

/*
 * Stochastic gradient of R^(k) at `row`. Each sum draws from its own stream
 * keyed by (seed, iteration, k, term), terms being i for single sums, d + j
 * for excitation sums and 2d + i d + j for overlap sums.
 */
[[nodiscard]] GradientEstimate gradient_estimate(const EventPath& path, const ModelSpec& model,
                                                 std::span<const double> row, std::size_t k, const RowPlans& plans,
                                                 const RowAllocations& warm, EstimateStream stream);

struct AdamConfig {
    double learning_rate{0.1};   // initial rate, halved every halving_period steps
    std::size_t halving_period{200};
    double first_decay{0.9};
    double second_decay{0.999};
    double epsilon{1e-8};
};

[[nodiscard]] double learning_rate(const AdamConfig& config, std::size_t step);

class AdamState {
public:
    explicit AdamState(std::size_t size) : first_(size, 0.0), second_(size, 0.0) {}

    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }

    /*
     * One projected step. Frozen entries are left alone, the rest are clamped
     * to floor from below. Non-finite gradients throw NumericalError without
     * touching the state.
     */
    void step(std::span<double> theta, std::span<const double> gradient, std::span<const double> floor,
              const std::vector<bool>& frozen, const AdamConfig& config);

private:
    std::vector<double> first_;
    std::vector<double> second_;
    std::size_t steps_{0};
};

struct SolverConfig {
    std::size_t iterations{1000};
    AdamConfig adam;
    StrataConfig strata;
    double projection_floor{1e-10};
    bool early_stop{true};
    double stop_weight{0.95};       // EMA weight on the running gradient norm
    double stop_tolerance{1e-4};    // relative to 1 + |theta_k|
    std::size_t stop_patience{50};  // consecutive iterations below tolerance
    double divergence_bound{1e8};
    std::uint64_t seed{0};
    std::size_t threads{1};
};

// Trajectory of the program fitting row k.
struct RowRecord {
    std::size_t k{0};
    std::vector<std::vector<double>> theta;      // one row per executed iteration, plus the start
    std::vector<std::vector<double>> gradient;   // estimate at each theta above
    std::vector<RowAllocations> allocation;      // allocations fitted along each estimate
    std::vector<double> seconds;                 // elapsed wall time at each theta
    bool stopped_early{false};

    [[nodiscard]] std::size_t iterations() const noexcept { return theta.empty() ? 0 : theta.size() - 1; }
};

struct FitRecord {
    std::vector<double> theta;  // final estimate, full layout
    std::vector<RowRecord> rows;
    std::uint64_t seed{0};
};

/*
 * Random start scaled to the data: mu at half the event rate, weights
 * log-uniform in [0.01, 1], scales log-uniform in [0.1, 10], locations uniform
 * over ten median inter-arrival times. Frozen entries are copied from
 * `fixed` when given, otherwise set to 0 for delays and drawn otherwise.
 */
[[nodiscard]] std::vector<double> initial_row(const EventPath& path, const ModelSpec& model, std::size_t k,
                                              std::uint64_t seed, std::span<const double> fixed = {});
[[nodiscard]] std::vector<double> initial_theta(const EventPath& path, const ModelSpec& model, std::uint64_t seed,
                                                std::span<const double> fixed = {});

// Runs the program for row k alone from `start`.
[[nodiscard]] RowRecord fit_row(const EventPath& path, const ModelSpec& model, std::size_t k,
                                std::span<const double> start, const SolverConfig& config);

// Fits every row, on up to config.threads threads. `start` defaults to initial_theta.
[[nodiscard]] FitRecord fit(const EventPath& path, const ModelSpec& model, const SolverConfig& config,
                            std::span<const double> start = {});

}  // namespace hawkes
