#include "hawkes/strata.hpp"

#include <numeric>
#include <string>

namespace hawkes {

StratumMoments::StratumMoments(std::uint64_t population, std::size_t width)
    : population_(population), mean_(width, 0.0), m2_(width, 0.0) {
    if (width == 0) throw ArgumentError("moments need at least one component");
}

void StratumMoments::add_batch(std::span<const double> values) {
    const std::size_t w = width();
    if (values.size() % w != 0) throw ArgumentError("batch is not a whole number of rows");
    const std::uint64_t rows = values.size() / w;
    if (rows == 0) return;
    if (draws_ + rows > population_) throw RangeError("more draws than stratum members");
    const double nb = static_cast<double>(rows);
    const double na = static_cast<double>(draws_);
    const double n = na + nb;
    for (std::size_t c = 0; c < w; ++c) {
        double mb = 0.0;
        for (std::uint64_t r = 0; r < rows; ++r) mb += values[r * w + c];
        mb /= nb;
        double m2b = 0.0;
        for (std::uint64_t r = 0; r < rows; ++r) {
            const double e = values[r * w + c] - mb;
            m2b += e * e;
        }
        const double delta = mb - mean_[c];
        mean_[c] += delta * nb / n;
        m2_[c] += m2b + delta * delta * na * nb / n;
    }
    draws_ += rows;
}

double StratumMoments::sum_estimate(std::size_t c) const {
    return static_cast<double>(population_) * mean(c);
}

std::optional<double> StratumMoments::variance(std::size_t c) const {
    if (draws_ < 2) return std::nullopt;
    const double N = static_cast<double>(population_);
    return (N - 1.0) / N * m2_.at(c) / static_cast<double>(draws_ - 1);
}

std::optional<double> StratumMoments::spread() const {
    if (draws_ < 2) return std::nullopt;
    double total = 0.0;
    for (std::size_t c = 0; c < width(); ++c) total += *variance(c);
    return std::sqrt(total);
}

std::vector<double> ema_allocation(std::span<const double> previous, std::span<const double> before, double weight,
                                   double floor) {
    if (previous.size() != before.size()) throw ArgumentError("allocations differ in length");
    if (!(weight >= 0.0 && weight <= 1.0)) throw ArgumentError("blend weight outside [0, 1]");
    std::vector<double> out(previous.size());
    double total = 0.0;
    for (std::size_t p = 0; p < out.size(); ++p) {
        const double v = weight * previous[p] + (1.0 - weight) * before[p];
        out[p] = std::isfinite(v) ? std::max(v, floor) : floor;
        total += out[p];
    }
    for (auto& v : out) v /= total;
    return out;
}

std::vector<double> optimal_allocation(std::span<const std::uint64_t> sizes, std::span<const double> sigma) {
    if (sizes.size() != sigma.size()) throw ArgumentError("sizes and deviations differ in length");
    std::vector<double> out(sizes.size(), 0.0);
    double total = 0.0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
        const double n = static_cast<double>(sizes[p]);
        if (sizes[p] < 2) continue;
        out[p] = n * std::sqrt(n / (n - 1.0)) * sigma[p];
        total += out[p];
    }
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
        return out;
    }
    for (auto& v : out) v /= total;
    return out;
}

double stratified_variance(std::span<const std::uint64_t> sizes, std::span<const std::uint64_t> draws,
                           std::span<const double> sigma) {
    double total = 0.0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
        const double n = static_cast<double>(sizes[p]);
        const double q = static_cast<double>(draws[p]);
        if (sizes[p] < 2) continue;
        total += n * n / q * (1.0 - (q - 1.0) / (n - 1.0)) * sigma[p] * sigma[p];
    }
    return total;
}

double optimal_variance_bound(std::span<const std::uint64_t> sizes, std::span<const double> sigma, double budget) {
    double lead = 0.0, offset = 0.0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
        const double n = static_cast<double>(sizes[p]);
        if (sizes[p] < 2) continue;
        lead += n * std::sqrt(n / (n - 1.0)) * sigma[p];
        offset += n * n * sigma[p] * sigma[p] / (n - 1.0);
    }
    return lead * lead / budget - offset;
}

std::vector<std::uint64_t> draws_from_shares(std::span<const double> shares, std::span<const std::uint64_t> sizes,
                                             double budget) {
    std::vector<std::uint64_t> out(shares.size());
    for (std::size_t p = 0; p < shares.size(); ++p) {
        const auto want = static_cast<std::uint64_t>(std::max(1.0, std::floor(shares[p] * budget)));
        out[p] = std::min(want, sizes[p]);
    }
    return out;
}

void SingleSumPlan::validate() const {
    if (bounds.empty() || bounds.front() != 1) throw PlanError("single-sum plan must start at index 1");
    for (std::size_t p = 0; p + 1 < bounds.size(); ++p)
        if (!(bounds[p] < bounds[p + 1])) throw PlanError("single-sum bounds must increase");
    if (bounds.back() > population + 1) throw PlanError("single-sum bounds exceed the population");
    if (draws.size() != strata()) throw PlanError("one draw count per stratum required");
    for (std::size_t p = 0; p < strata(); ++p)
        if (draws[p] == 0 || draws[p] > size(p))
            throw PlanError("draw count for stratum " + std::to_string(p) + " outside [1, size]");
}

SingleSumPlan make_single_sum_plan(std::uint64_t population, const StrataConfig& config) {
    SingleSumPlan plan;
    plan.population = population;
    const std::uint64_t tail = std::min<std::uint64_t>(config.single_tail_cap, (population + 9) / 10);
    const std::uint64_t last = population > tail ? population - tail : 1;
    if (config.exhaustive || last <= 1) {
        plan.bounds = {1};
        return plan;
    }
    // Widths grow as squares going backwards from the tail.
    std::vector<std::uint64_t> rev{last};
    std::uint64_t gap = std::max<std::uint64_t>(config.single_final_gap, 2);
    while (rev.back() > 1) {
        rev.push_back(rev.back() > gap ? rev.back() - gap : 1);
        gap = gap > (1ULL << 31) ? gap : gap * gap;
    }
    plan.bounds.assign(rev.rbegin(), rev.rend());
    std::vector<std::uint64_t> sizes(plan.strata());
    std::uint64_t sampled = 0;
    for (std::size_t p = 0; p < sizes.size(); ++p) sampled += sizes[p] = plan.size(p);
    std::vector<double> shares(sizes.size());
    for (std::size_t p = 0; p < sizes.size(); ++p)
        shares[p] = static_cast<double>(sizes[p]) / static_cast<double>(sampled);
    plan.draws = draws_from_shares(shares, sizes, static_cast<double>(config.single_budget));
    plan.validate();
    return plan;
}

void DoubleSumPlan::validate() const {
    if (rounds == 0) throw PlanError("double-sum plan needs at least one round");
    std::size_t next = 1;
    for (const auto* part : {&groups, &remainder})
        for (const auto& g : *part) {
            if (g.first != next || g.last < g.first) throw PlanError("lag groups must tile consecutive lags");
            next = g.last + 1;
        }
    if (!groups.empty() && budget < groups.size()) throw PlanError("budget below one draw per lag group");
    if (!remainder.empty() && remainder_draws == 0) throw PlanError("remainder strata need draws");
}

DoubleSumPlan make_double_sum_plan(const LagIndex& lags, const StrataConfig& config) {
    DoubleSumPlan plan;
    plan.rounds = config.rounds;
    const std::size_t top = lags.max_lag();
    const std::size_t cut = config.exhaustive ? top : std::min(config.lag_cutoff, top);
    if (config.lag_groups == 0) throw PlanError("need at least one lag group");

    // Widths 1, 1, 2, 2, 4, 4, ... up to the cutoff, then split the widest until
    // there are lag_groups groups.
    std::vector<std::size_t> widths;
    for (std::size_t covered = 0, k = 0; covered < cut; ++k) {
        const std::size_t w = std::min<std::size_t>(std::size_t{1} << (k / 2), cut - covered);
        widths.push_back(w);
        covered += w;
    }
    while (widths.size() < config.lag_groups) {
        auto widest = std::max_element(widths.begin(), widths.end());
        if (widest == widths.end() || *widest < 2) break;
        const std::size_t w = *widest;
        *widest = w / 2;
        widths.insert(widest + 1, w - w / 2);
    }
    std::size_t h = 1;
    for (auto w : widths) {
        plan.groups.push_back({h, h + w - 1});
        h += w;
    }

    if (cut < top) {
        const double span = static_cast<double>(top - cut);
        const std::size_t n = std::max<std::size_t>(config.remainder_strata, 1);
        std::size_t prev = cut;
        for (std::size_t p = 1; p <= n; ++p) {
            auto end = p == n ? top
                              : cut + static_cast<std::size_t>(std::ceil(std::pow(span, static_cast<double>(p) / n)));
            end = std::min(end, top);
            if (end <= prev) continue;
            plan.remainder.push_back({prev + 1, end});
            prev = end;
        }
        plan.remainder_draws = config.remainder_draws;
    }

    std::uint64_t total = 0;
    for (const auto& g : plan.groups) total += lags.group_size(g.first, g.last);
    plan.budget = config.exhaustive ? total * plan.rounds * std::max<std::size_t>(plan.groups.size(), 1)
                                    : std::max<std::uint64_t>(config.double_budget, plan.groups.size());
    plan.validate();
    return plan;
}

}  // namespace hawkes
