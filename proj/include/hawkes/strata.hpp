#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hawkes/errors.hpp"
#include "hawkes/paths.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

struct StrataConfig {
    std::size_t single_budget{1000};     // draws for each single sum outside its exact tail
    std::size_t single_tail_cap{1000};   // the exact tail holds min(cap, ceil(N / 10)) events
    std::size_t single_final_gap{50};    // width of the last sampled stratum before the tail
    std::size_t double_budget{1000};     // draws for each double sum over the adaptive lags
    std::size_t lag_cutoff{40};          // lags up to this value are stratified adaptively
    std::size_t lag_groups{10};
    std::size_t rounds{4};
    double ema_weight{0.6};              // warm-start blend of the last two fitted allocations
    std::size_t remainder_strata{5};
    std::size_t remainder_draws{20};
    bool exhaustive{false};              // evaluate every term; for testing
};

// Uniform draws without replacement from [0, n), continued across calls.
// Sparse Fisher-Yates: memory grows with the number of draws only.
class SparseShuffler {
public:
    explicit SparseShuffler(std::uint64_t n) : n_(n) {}

    [[nodiscard]] std::uint64_t remaining() const noexcept { return n_ - cursor_; }

    std::uint64_t next(CounterRng& rng) {
        if (cursor_ >= n_) throw RangeError("sampler exhausted");
        const std::uint64_t j = cursor_ + rng.below(n_ - cursor_);
        const std::uint64_t picked = at(j);
        if (j != cursor_) moved_[j] = at(cursor_);
        moved_.erase(cursor_);
        ++cursor_;
        return picked;
    }

private:
    [[nodiscard]] std::uint64_t at(std::uint64_t k) const {
        const auto it = moved_.find(k);
        return it == moved_.end() ? k : it->second;
    }

    std::uint64_t n_;
    std::uint64_t cursor_{0};
    std::unordered_map<std::uint64_t, std::uint64_t> moved_;
};

/*
 * Running mean and centred second moment of vector-valued draws from one
 * stratum of known size. Batches are merged exactly, so the result does not
 * depend on how draws were split into rounds.
 */
class StratumMoments {
public:
    StratumMoments(std::uint64_t population, std::size_t width);

    // values holds rows x width entries, row-major.
    void add_batch(std::span<const double> values);

    [[nodiscard]] std::uint64_t population() const noexcept { return population_; }
    [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }
    [[nodiscard]] std::size_t width() const noexcept { return mean_.size(); }
    [[nodiscard]] double mean(std::size_t c) const { return mean_.at(c); }
    // Population size times the sample mean.
    [[nodiscard]] double sum_estimate(std::size_t c) const;
    // (N - 1) / N times the sample variance, an unbiased estimate of the
    // stratum's population variance. Undefined below two draws.
    [[nodiscard]] std::optional<double> variance(std::size_t c) const;
    // Root of the summed component variances.
    [[nodiscard]] std::optional<double> spread() const;

private:
    std::uint64_t population_;
    std::uint64_t draws_{0};
    std::vector<double> mean_;
    std::vector<double> m2_;
};

// Blend of the last two allocations, floored and renormalised.
[[nodiscard]] std::vector<double> ema_allocation(std::span<const double> previous, std::span<const double> before,
                                                 double weight, double floor = 1e-6);

// Allocation minimising the summed variance of a stratified estimator with
// per-stratum population standard deviations sigma.
[[nodiscard]] std::vector<double> optimal_allocation(std::span<const std::uint64_t> sizes,
                                                     std::span<const double> sigma);
// Variance of the stratified estimator with draws q (without replacement).
[[nodiscard]] double stratified_variance(std::span<const std::uint64_t> sizes, std::span<const std::uint64_t> draws,
                                         std::span<const double> sigma);
// Variance reached by optimal_allocation with a total of `budget` draws (continuous relaxation).
[[nodiscard]] double optimal_variance_bound(std::span<const std::uint64_t> sizes, std::span<const double> sigma,
                                            double budget);
// Integer draw counts from shares: floor(share * budget), at least 1, at most the size.
[[nodiscard]] std::vector<std::uint64_t> draws_from_shares(std::span<const double> shares,
                                                           std::span<const std::uint64_t> sizes, double budget);

// Index strata [bounds[p], bounds[p+1] - 1] plus an exact tail [bounds.back(), population].
struct SingleSumPlan {
    std::uint64_t population{0};
    std::vector<std::uint64_t> bounds{1};
    std::vector<std::uint64_t> draws;

    [[nodiscard]] std::size_t strata() const noexcept { return bounds.size() - 1; }
    [[nodiscard]] std::uint64_t size(std::size_t p) const { return bounds.at(p + 1) - bounds.at(p); }
    void validate() const;
};

[[nodiscard]] SingleSumPlan make_single_sum_plan(std::uint64_t population, const StrataConfig& config);

struct LagGroup {
    std::size_t first;
    std::size_t last;
};

struct DoubleSumPlan {
    std::vector<LagGroup> groups;     // adaptive part
    std::vector<LagGroup> remainder;  // fixed-budget part
    std::uint64_t budget{0};
    std::size_t rounds{1};
    std::uint64_t remainder_draws{0};

    void validate() const;
};

[[nodiscard]] DoubleSumPlan make_double_sum_plan(const LagIndex& lags, const StrataConfig& config);

struct SumEstimate {
    std::vector<double> value;
    std::vector<double> allocation;  // fitted shares of the adaptive strata
};

// ---------------------------------------------------------------------------

namespace detail {

// Draws count points from one stratum and returns them row-major.
template <class Point>
void draw_batch(SparseShuffler& sampler, std::uint64_t count, std::size_t width, Point& point,
                std::vector<double>& out, CounterRng& rng) {
    out.assign(count * width, 0.0);
    for (std::uint64_t q = 0; q < count; ++q)
        point(sampler.next(rng), std::span<double>(out.data() + q * width, width));
}

}  // namespace detail

/*
 * Adaptive stratified estimate of sum over strata of sum over their points.
 * point(p, index, out) writes the summand at flat index of stratum p.
 * Each round splits budget / rounds draws by the current allocation, drawing
 * at least once per stratum; the allocation is then refitted from all draws so far.
 *
 * Pooling every draw into one sample mean would be biased, since later draw
 * counts depend on earlier values. Instead each round gives its own estimate
 * of a stratum total: the exact sum of points already drawn plus the number
 * not yet drawn times the round's mean. That is unbiased given the past, and
 * rounds get equal fixed weights, so the combination is unbiased.
 */
template <class Point>
SumEstimate estimate_adaptive(std::span<const std::uint64_t> sizes, std::size_t width, Point&& point,
                              std::uint64_t budget, std::size_t rounds, std::span<const double> warm,
                              CounterRng& rng) {
    const std::size_t n = sizes.size();
    if (rounds == 0) throw PlanError("adaptive estimator needs at least one round");
    if (!warm.empty() && warm.size() != n) throw ArgumentError("warm-start allocation has wrong size");
    std::vector<double> alloc(warm.begin(), warm.end());
    if (alloc.empty()) alloc.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);

    std::vector<StratumMoments> moments;
    std::vector<SparseShuffler> samplers;
    moments.reserve(n);
    samplers.reserve(n);
    for (auto s : sizes) {
        moments.emplace_back(s, width);
        samplers.emplace_back(s);
    }
    const double per_round = static_cast<double>(budget) / static_cast<double>(rounds);
    const double round_weight = 1.0 / static_cast<double>(rounds);
    std::vector<double> drawn(n * width, 0.0);  // exact sum of points drawn so far
    SumEstimate out{std::vector<double>(width, 0.0), {}};
    std::vector<double> batch;
    std::vector<double> weights(n);
    for (std::size_t s = 0; s < rounds; ++s) {
        for (std::size_t p = 0; p < n; ++p) {
            double* seen = drawn.data() + p * width;
            const std::uint64_t left = samplers[p].remaining();
            if (left == 0) {
                for (std::size_t c = 0; c < width; ++c) out.value[c] += round_weight * seen[c];
                continue;
            }
            const auto want = static_cast<std::uint64_t>(std::max(1.0, std::floor(alloc[p] * per_round)));
            const std::uint64_t take = std::min(want, left);
            auto at = [&](std::uint64_t idx, std::span<double> o) { point(p, idx, o); };
            detail::draw_batch(samplers[p], take, width, at, batch, rng);
            moments[p].add_batch(batch);
            const double scale = static_cast<double>(left) / static_cast<double>(take);
            for (std::size_t c = 0; c < width; ++c) {
                double sum = 0.0;
                for (std::uint64_t q = 0; q < take; ++q) sum += batch[q * width + c];
                out.value[c] += round_weight * (seen[c] + scale * sum);
                seen[c] += sum;
            }
        }
        // Refit: shares proportional to size * sqrt(size / (size - 1)) * spread.
        double widest = 0.0;
        for (const auto& m : moments)
            if (auto sp = m.spread()) widest = std::max(widest, *sp);
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double size = static_cast<double>(sizes[p]);
            if (samplers[p].remaining() == 0 || sizes[p] < 2) {
                weights[p] = 0.0;
                continue;
            }
            const double sp = moments[p].spread().value_or(widest);
            weights[p] = size * std::sqrt(size / (size - 1.0)) * sp;
            total += weights[p];
        }
        if (total > 0.0)
            for (std::size_t p = 0; p < n; ++p) alloc[p] = weights[p] / total;
        else
            std::fill(alloc.begin(), alloc.end(), n ? 1.0 / static_cast<double>(n) : 0.0);
    }
    out.allocation = std::move(alloc);
    return out;
}

// Stratified estimate with fixed draw counts per stratum.
template <class Point>
std::vector<double> estimate_fixed(std::span<const std::uint64_t> sizes, std::span<const std::uint64_t> draws,
                                   std::size_t width, Point&& point, CounterRng& rng) {
    if (draws.size() != sizes.size()) throw PlanError("draw counts and strata differ in number");
    std::vector<double> total(width, 0.0), batch;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
        if (sizes[p] == 0) continue;
        if (draws[p] == 0 || draws[p] > sizes[p]) throw PlanError("draw count outside [1, stratum size]");
        SparseShuffler sampler(sizes[p]);
        auto at = [&](std::uint64_t idx, std::span<double> out) { point(p, idx, out); };
        detail::draw_batch(sampler, draws[p], width, at, batch, rng);
        const double scale = static_cast<double>(sizes[p]) / static_cast<double>(draws[p]);
        for (std::uint64_t q = 0; q < draws[p]; ++q)
            for (std::size_t c = 0; c < width; ++c) total[c] += scale * batch[q * width + c];
    }
    return total;
}

/*
 * Sum over the type-i events of f(T - t^i_m). Sampled strata of event indices
 * followed by an exactly summed tail. f(x, out) writes `width` values.
 */
template <class F>
std::vector<double> estimate_single_sum(const EventPath& path, std::size_t i, std::size_t width, F&& f,
                                        const SingleSumPlan& plan, CounterRng& rng) {
    const auto times = path.times(i);
    if (plan.population != times.size()) throw PlanError("single-sum plan built for a different population");
    const double T = path.horizon();
    std::vector<std::uint64_t> sizes(plan.strata());
    for (std::size_t p = 0; p < sizes.size(); ++p) sizes[p] = plan.size(p);
    auto point = [&](std::size_t p, std::uint64_t idx, std::span<double> out) {
        f(T - times[plan.bounds[p] - 1 + idx], out);
    };
    auto total = estimate_fixed(sizes, plan.draws, width, point, rng);
    std::vector<double> buf(width);
    for (std::uint64_t m = plan.bounds.back(); m <= plan.population; ++m) {
        f(T - times[m - 1], buf);
        for (std::size_t c = 0; c < width; ++c) total[c] += buf[c];
    }
    return total;
}

/*
 * Sum over all pairs with t^j_n < t^i_m of f(T - t^i_m, t^i_m - t^j_n),
 * grouped by lag. f(pair, out) writes `width` values.
 */
template <class F>
SumEstimate estimate_double_sum(const LagIndex& lags, std::size_t width, F&& f, const DoubleSumPlan& plan,
                                std::span<const double> warm, CounterRng& rng) {
    std::vector<std::uint64_t> sizes;
    for (const auto& g : plan.groups) sizes.push_back(lags.group_size(g.first, g.last));
    auto point = [&](std::size_t p, std::uint64_t idx, std::span<double> out) {
        f(lags.pair_in_group(plan.groups[p].first, idx), out);
    };
    auto est = estimate_adaptive(sizes, width, point, plan.budget, plan.rounds, warm, rng);

    if (!plan.remainder.empty()) {
        std::vector<std::uint64_t> rsizes, rdraws;
        for (const auto& g : plan.remainder) {
            rsizes.push_back(lags.group_size(g.first, g.last));
            rdraws.push_back(std::min<std::uint64_t>(plan.remainder_draws, rsizes.back()));
        }
        auto rpoint = [&](std::size_t p, std::uint64_t idx, std::span<double> out) {
            f(lags.pair_in_group(plan.remainder[p].first, idx), out);
        };
        const auto rest = estimate_fixed(rsizes, rdraws, width, rpoint, rng);
        for (std::size_t c = 0; c < width; ++c) est.value[c] += rest[c];
    }
    return est;
}

}  // namespace hawkes
