#include "hawkes/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "hawkes/errors.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

RowPlans make_row_plans(const EventPath& path, const ModelSpec& model, std::size_t k, const StrataConfig& config) {
    const std::size_t d = model.dimension();
    if (path.dimension() != d) throw ArgumentError("path and model dimensions differ");
    RowPlans plans;
    for (std::size_t i = 0; i < d; ++i) plans.single.push_back(make_single_sum_plan(path.count(i), config));
    for (std::size_t j = 0; j < d; ++j) plans.excite.push_back(make_double_sum_plan(path.lag_index(k, j), config));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            plans.overlap.push_back(make_double_sum_plan(path.lag_index(i, j), config));
    return plans;
}

RowAllocations blend_allocations(const RowAllocations& last, const RowAllocations& before, double weight) {
    if (last.empty()) return {};
    if (before.empty()) return last;
    const auto mix = [weight](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
        std::vector<std::vector<double>> out(a.size());
        for (std::size_t t = 0; t < a.size(); ++t)
            out[t] = (a[t].empty() || b.at(t).size() != a[t].size()) ? a[t] : ema_allocation(a[t], b[t], weight);
        return out;
    };
    return {mix(last.excite, before.excite), mix(last.overlap, before.overlap)};
}

GradientEstimate gradient_estimate(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                   std::size_t k, const RowPlans& plans, const RowAllocations& warm,
                                   EstimateStream stream) {
    const std::size_t d = model.dimension();
    if (path.dimension() != d) throw ArgumentError("path and model dimensions differ");
    if (plans.single.size() != d || plans.excite.size() != d || plans.overlap.size() != d * d)
        throw PlanError("plans do not match the model dimension");
    model.require_supported(k);
    const double T = path.horizon();
    const double mu = row[0];
    const auto rng_for = [&](std::size_t term) { return CounterRng::stream(stream.seed, {stream.iteration, k, term}); };
    const auto warm_for = [](const std::vector<std::vector<double>>& w, std::size_t t) {
        return t < w.size() ? std::span<const double>(w[t]) : std::span<const double>();
    };

    GradientEstimate out;
    out.values.assign(row.size(), 0.0);
    const auto block = [&](std::size_t i) {
        return std::span<double>(out.values).subspan(model.kernel_offset(k, i), model.kernel(k, i).size());
    };

    // Mass and self-overlap at lag zero: [psi, grad psi, grad upsilon(., 0)].
    double mass = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto v = model.view(row, k, i);
        const std::size_t P = v.params.size();
        auto f = [&](double x, std::span<double> o) {
            o[0] = psi(v, x);
            psi_gradient(v, x, o.subspan(1, P));
            upsilon_gradient_same(v, x, 0.0, o.subspan(1 + P, P));
        };
        auto rng = rng_for(i);
        const auto s = estimate_single_sum(path, i, 1 + 2 * P, f, plans.single[i], rng);
        mass += s[0];
        auto g = block(i);
        for (std::size_t p = 0; p < P; ++p) g[p] += 2.0 * mu / T * s[1 + p] + s[1 + P + p] / T;
    }
    out.values[0] = 2.0 * (mu - path.event_rate(k) + mass / T);

    // Excitation at the type-k events.
    out.allocation.excite.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const auto v = model.view(row, k, j);
        auto f = [&](LagPair pr, std::span<double> o) { phi_gradient(v, pr.time_difference, o); };
        auto rng = rng_for(d + j);
        auto s = estimate_double_sum(path.lag_index(k, j), v.params.size(), f, plans.excite[j],
                                     warm_for(warm.excite, j), rng);
        auto g = block(j);
        for (std::size_t p = 0; p < g.size(); ++p) g[p] -= 2.0 / T * s.value[p];
        out.allocation.excite[j] = std::move(s.allocation);
    }

    // Overlaps of kernel pairs shifted by event pairs.
    out.allocation.overlap.resize(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto a = model.view(row, k, i), b = model.view(row, k, j);
            const std::size_t Pa = a.params.size(), Pb = i == j ? 0 : b.params.size();
            auto f = [&](LagPair pr, std::span<double> o) {
                if (i == j)
                    upsilon_gradient_same(a, pr.time_to_horizon, pr.time_difference, o);
                else
                    upsilon_gradient(a, b, pr.time_to_horizon, pr.time_difference, o.first(Pa), o.subspan(Pa, Pb));
            };
            auto rng = rng_for(2 * d + i * d + j);
            auto s = estimate_double_sum(path.lag_index(i, j), Pa + Pb, f, plans.overlap[i * d + j],
                                         warm_for(warm.overlap, i * d + j), rng);
            auto ga = block(i);
            for (std::size_t p = 0; p < Pa; ++p) ga[p] += 2.0 / T * s.value[p];
            if (i != j) {
                auto gb = block(j);
                for (std::size_t p = 0; p < Pb; ++p) gb[p] += 2.0 / T * s.value[Pa + p];
            }
            out.allocation.overlap[i * d + j] = std::move(s.allocation);
        }
    return out;
}

double learning_rate(const AdamConfig& config, std::size_t step) {
    if (config.halving_period == 0) return config.learning_rate;
    return std::ldexp(config.learning_rate, -static_cast<int>(step / config.halving_period));
}

void AdamState::step(std::span<double> theta, std::span<const double> gradient, std::span<const double> floor,
                     const std::vector<bool>& frozen, const AdamConfig& config) {
    const std::size_t n = first_.size();
    if (theta.size() != n || gradient.size() != n || floor.size() != n || frozen.size() != n)
        throw ArgumentError("optimiser state and parameter sizes differ");
    for (std::size_t p = 0; p < n; ++p)
        if (!std::isfinite(gradient[p]))
            throw NumericalError("non-finite gradient component " + std::to_string(p) + " (" +
                                 std::to_string(gradient[p]) + ") at step " + std::to_string(steps_ + 1));
    ++steps_;
    const double rate = learning_rate(config, steps_);
    const double c1 = 1.0 - std::pow(config.first_decay, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config.second_decay, static_cast<double>(steps_));
    for (std::size_t p = 0; p < n; ++p) {
        if (frozen[p]) continue;
        const double g = gradient[p];
        first_[p] = config.first_decay * first_[p] + (1.0 - config.first_decay) * g;
        second_[p] = config.second_decay * second_[p] + (1.0 - config.second_decay) * g * g;
        const double m = first_[p] / c1, v = second_[p] / c2;
        theta[p] = std::max(theta[p] - rate * m / (std::sqrt(v) + config.epsilon), floor[p]);
    }
}

namespace {

double median_gap(const EventPath& path) {
    std::vector<double> all;
    for (std::size_t i = 0; i < path.dimension(); ++i) {
        const auto t = path.times(i);
        all.insert(all.end(), t.begin(), t.end());
    }
    if (all.size() < 2) return path.horizon();
    std::sort(all.begin(), all.end());
    std::vector<double> gaps(all.size() - 1);
    for (std::size_t m = 0; m + 1 < all.size(); ++m) gaps[m] = all[m + 1] - all[m];
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return *mid;
}

double log_uniform(CounterRng& rng, double lo, double hi) {
    return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

double norm(std::span<const double> x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

}  // namespace

std::vector<double> initial_row(const EventPath& path, const ModelSpec& model, std::size_t k, std::uint64_t seed,
                                std::span<const double> fixed) {
    const std::size_t n = model.row_size(k);
    if (!fixed.empty() && fixed.size() != n) throw ArgumentError("fixed row has the wrong size");
    auto rng = CounterRng::stream(seed, {0x696e6974ULL, k});
    const double spread = 10.0 * median_gap(path);
    std::vector<double> row(n, 0.0);
    row[0] = std::max(0.5 * path.event_rate(k), 1e-10);
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const auto& spec = model.kernel(k, i);
        const std::size_t off = model.kernel_offset(k, i);
        for (std::size_t p = 0; p < spec.size(); ++p) {
            double& x = row[off + p];
            const Role role = spec.role(p);
            // Draw first so the stream does not depend on which entries are frozen.
            switch (role) {
                case Role::weight: x = log_uniform(rng, 1e-2, 1.0); break;
                case Role::beta: x = log_uniform(rng, 0.1, 10.0); break;
                case Role::alpha: x = rng.uniform() * spread; break;
                case Role::delta:
                    x = spec.family == Family::triangular ? log_uniform(rng, 0.1, 10.0) : rng.uniform() * spread;
                    break;
            }
            if (spec.is_frozen(p)) {
                if (!fixed.empty())
                    x = fixed[off + p];
                else if (role == Role::delta && spec.family == Family::delayed_exponential)
                    x = 0.0;
            }
        }
    }
    return row;
}

std::vector<double> initial_theta(const EventPath& path, const ModelSpec& model, std::uint64_t seed,
                                  std::span<const double> fixed) {
    if (!fixed.empty() && fixed.size() != model.size()) throw ArgumentError("fixed parameters have the wrong size");
    std::vector<double> theta;
    theta.reserve(model.size());
    for (std::size_t k = 0; k < model.dimension(); ++k) {
        const auto r = initial_row(path, model, k, seed, fixed.empty() ? fixed : model.row(fixed, k));
        theta.insert(theta.end(), r.begin(), r.end());
    }
    return theta;
}

RowRecord fit_row(const EventPath& path, const ModelSpec& model, std::size_t k, std::span<const double> start,
                  const SolverConfig& config) {
    path.require_nontrivial();
    model.require_supported(k);
    model.validate_row(start, k);
    const auto plans = make_row_plans(path, model, k, config.strata);
    const std::size_t n = start.size();
    const auto floor = model.row_floor(k, config.projection_floor);
    std::vector<bool> frozen(n);
    for (std::size_t p = 0; p < n; ++p) frozen[p] = model.is_frozen(k, p);

    RowRecord record;
    record.k = k;
    std::vector<double> row(start.begin(), start.end());
    for (std::size_t p = 0; p < n; ++p) row[p] = std::max(row[p], frozen[p] ? row[p] : floor[p]);
    AdamState adam(n);
    RowAllocations last, before;
    double running = 0.0;
    std::size_t calm = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    record.theta.push_back(row);
    record.seconds.push_back(0.0);
    for (std::size_t t = 0;; ++t) {
        auto est = gradient_estimate(path, model, row, k, plans, blend_allocations(last, before, config.strata.ema_weight),
                                     {config.seed, t});
        record.gradient.push_back(est.values);
        record.allocation.push_back(est.allocation);
        if (t == config.iterations) break;

        if (config.early_stop) {
            double g2 = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                if (!frozen[p]) g2 += est.values[p] * est.values[p];
            const double g = std::sqrt(g2);
            running = t == 0 ? g : config.stop_weight * running + (1.0 - config.stop_weight) * g;
            calm = running < config.stop_tolerance * (1.0 + norm(row)) ? calm + 1 : 0;
            if (calm >= config.stop_patience) {
                record.stopped_early = true;
                break;
            }
        }

        before = std::move(last);
        last = std::move(est.allocation);
        adam.step(row, est.values, floor, frozen, config.adam);
        for (std::size_t p = 0; p < n; ++p)
            if (!(std::abs(row[p]) <= config.divergence_bound))
                throw NumericalError("row " + std::to_string(k) + " diverged at iteration " + std::to_string(t + 1) +
                                     ": entry " + std::to_string(p) + " = " + std::to_string(row[p]));
        record.theta.push_back(row);
        record.seconds.push_back(elapsed());
    }
    return record;
}

FitRecord fit(const EventPath& path, const ModelSpec& model, const SolverConfig& config,
              std::span<const double> start) {
    if (path.dimension() != model.dimension()) throw ArgumentError("path and model dimensions differ");
    path.require_nontrivial();
    std::vector<double> theta(start.begin(), start.end());
    if (theta.empty()) theta = initial_theta(path, model, config.seed);
    model.validate(theta);
    path.prepare();

    const std::size_t d = model.dimension();
    FitRecord record;
    record.seed = config.seed;
    record.rows.resize(d);
    std::vector<std::exception_ptr> failures(d);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < d; k = next++) {
            try {
                record.rows[k] = fit_row(path, model, k, model.row(theta, k), config);
            } catch (...) {
                failures[k] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(config.threads, 1, d);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    record.theta = theta;
    for (std::size_t k = 0; k < d; ++k) {
        const auto& last = record.rows[k].theta.back();
        std::copy(last.begin(), last.end(), model.mutable_row(record.theta, k).begin());
    }
    return record;
}

}  // namespace hawkes
