#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hawkes/errors.hpp"
#include "hawkes/strata.hpp"

using namespace hawkes;

namespace {

std::vector<double> uniform_times(std::mt19937_64& gen, std::size_t n, double horizon) {
    std::uniform_real_distribution<double> u(0.0, horizon);
    std::set<double> s;
    while (s.size() < n) s.insert(u(gen));
    return {s.begin(), s.end()};
}

// Plain two-pass statistics of a sample.
std::pair<double, double> sample_mean_var(const std::vector<double>& x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double v = 0.0;
    for (double y : x) v += (y - m) * (y - m);
    return {m, v / (x.size() - 1)};
}

}  // namespace

TEST_CASE("sparse shuffler draws each index once") {
    CounterRng rng(5);
    SparseShuffler s(1000);
    std::set<std::uint64_t> seen;
    for (int k = 0; k < 1000; ++k) CHECK(seen.insert(s.next(rng)).second);
    CHECK(*seen.rbegin() == 999);
    CHECK(s.remaining() == 0);
    CHECK_THROWS_AS(s.next(rng), RangeError);
}

TEST_CASE("sparse shuffler first draw is uniform") {
    std::vector<int> hits(10, 0);
    for (int rep = 0; rep < 20000; ++rep) {
        auto rng = CounterRng::stream(9, {static_cast<std::uint64_t>(rep)});
        SparseShuffler s(10);
        ++hits[s.next(rng)];
    }
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - 2000.0) * (h - 2000.0) / 2000.0;
    CHECK(chi2 < 27.88);  // chi-square(9) upper 0.1%
}

TEST_CASE("merging two batches gives the moments of the union") {
    StratumMoments m(10, 1);
    const std::vector<double> a{1.0, 2.0}, b{3.0, 4.0};
    m.add_batch(a);
    m.add_batch(b);
    CHECK(m.draws() == 4);
    CHECK(m.mean(0) == doctest::Approx(2.5));
    CHECK(*m.variance(0) == doctest::Approx(0.9 * 5.0 / 3.0));
    CHECK(m.sum_estimate(0) == doctest::Approx(25.0));
}

TEST_CASE("batched moments equal from-scratch statistics") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd(3.0, 2.0);
    std::vector<double> all;
    StratumMoments m(1000, 1);
    for (int batch : {3, 17, 1, 40, 9}) {
        std::vector<double> b(batch);
        for (auto& x : b) x = nd(gen);
        m.add_batch(b);
        all.insert(all.end(), b.begin(), b.end());
    }
    const auto [mean, var] = sample_mean_var(all);
    CHECK(std::abs(m.mean(0) - mean) <= 1e-12 * std::abs(mean));
    CHECK(std::abs(*m.variance(0) - 0.999 * var) <= 1e-12 * var);
}

TEST_CASE("finite-population factor and constant batches") {
    StratumMoments full(4, 1);
    const std::vector<double> all{1.0, 4.0, 2.0, 9.0};
    full.add_batch(std::span<const double>(all).first(1));
    full.add_batch(std::span<const double>(all).subspan(1));
    const double mu = 4.0;
    double pop = 0.0;
    for (double x : all) pop += (x - mu) * (x - mu);
    CHECK(*full.variance(0) == doctest::Approx(pop / 4.0));

    StratumMoments flat(100, 1);
    flat.add_batch(std::vector<double>(7, 3.25));
    flat.add_batch(std::vector<double>(5, 3.25));
    CHECK(*flat.variance(0) == 0.0);
}

TEST_CASE("variance is undefined below two draws") {
    StratumMoments m(5, 2);
    CHECK_FALSE(m.variance(0).has_value());
    m.add_batch(std::vector<double>{1.0, 2.0});
    CHECK_FALSE(m.variance(1).has_value());
    CHECK_FALSE(m.spread().has_value());
    CHECK_THROWS_AS(m.add_batch(std::vector<double>(12, 0.0)), RangeError);
}

TEST_CASE("allocation blending") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    const auto mid = ema_allocation(a, b, 0.5);
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));
    const std::vector<double> c{0.2, 0.3, 0.5}, e{0.6, 0.2, 0.2};
    const auto same = ema_allocation(c, e, 1.0);
    for (int p = 0; p < 3; ++p) CHECK(same[p] == doctest::Approx(c[p]));
    const auto floored = ema_allocation(a, a, 1.0);
    CHECK(floored[1] > 0.0);
    CHECK(floored[0] + floored[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)ema_allocation(a, c, 0.5), ArgumentError);
}

TEST_CASE("optimal allocation puts nothing on a constant stratum") {
    const std::vector<std::uint64_t> sizes{50, 50};
    const std::vector<double> sigma{0.0, 2.0};
    const auto q = optimal_allocation(sizes, sigma);
    CHECK(q[0] == doctest::Approx(0.0));
    CHECK(q[1] == doctest::Approx(1.0));
}

TEST_CASE("optimal allocation minimises the stratified variance") {
    const std::vector<std::uint64_t> sizes{40, 300, 1000};
    const std::vector<double> sigma{5.0, 1.0, 0.3};
    const double budget = 120.0;
    const auto q = optimal_allocation(sizes, sigma);
    const double bound = optimal_variance_bound(sizes, sigma, budget);
    // continuous variance at the optimum
    double at_opt = 0.0;
    for (int p = 0; p < 3; ++p) {
        const double n = sizes[p], d = q[p] * budget;
        at_opt += n * n / d * (1.0 - (d - 1.0) / (n - 1.0)) * sigma[p] * sigma[p];
    }
    CHECK(at_opt == doctest::Approx(bound).epsilon(1e-12));
    // brute-force search over integer splits
    double best = 1e300;
    for (std::uint64_t a = 1; a < 119; ++a)
        for (std::uint64_t b = 1; a + b < 120; ++b) {
            const std::vector<std::uint64_t> d{a, b, 120 - a - b};
            best = std::min(best, stratified_variance(sizes, d, sigma));
        }
    CHECK(bound <= best * (1.0 + 1e-12));
    CHECK(best <= bound * 1.02);
}

TEST_CASE("single-sum plan layout") {
    StrataConfig cfg;
    const auto plan = make_single_sum_plan(300, cfg);
    CHECK(plan.bounds == std::vector<std::uint64_t>{1, 220, 270});
    CHECK(plan.draws.size() == 2);
    const auto big = make_single_sum_plan(1000000, cfg);
    CHECK(big.bounds.back() == 999000);
    CHECK(big.size(big.strata() - 1) == 50);
    CHECK(big.size(big.strata() - 2) == 2500);
    const auto small = make_single_sum_plan(8, cfg);
    CHECK(small.bounds == std::vector<std::uint64_t>{1, 7});
    CHECK(make_single_sum_plan(1, cfg).strata() == 0);

    SingleSumPlan bad = plan;
    bad.draws[0] = 500;
    CHECK_THROWS_AS(bad.validate(), PlanError);
    bad = plan;
    bad.bounds = {1, 280, 270};
    CHECK_THROWS_AS(bad.validate(), PlanError);
}

TEST_CASE("single sums: constant summands and exhaustive plans are exact") {
    std::mt19937_64 gen(4);
    const EventPath path({uniform_times(gen, 500, 100.0)}, 100.0);
    const auto plan = make_single_sum_plan(500, StrataConfig{});
    CounterRng rng(1);
    const auto c = estimate_single_sum(path, 0, 1, [](double, std::span<double> o) { o[0] = 2.5; }, plan, rng);
    CHECK(c[0] == doctest::Approx(1250.0).epsilon(1e-14));

    StrataConfig ex;
    ex.exhaustive = true;
    const auto full = make_single_sum_plan(500, ex);
    const auto f = [](double x, std::span<double> o) { o[0] = std::exp(-0.1 * x); o[1] = x; };
    const auto est = estimate_single_sum(path, 0, 2, f, full, rng);
    double e0 = 0.0, e1 = 0.0;
    for (double t : path.times(0)) {
        e0 += std::exp(-0.1 * (100.0 - t));
        e1 += 100.0 - t;
    }
    CHECK(std::abs(est[0] - e0) <= 1e-12 * e0);
    CHECK(std::abs(est[1] - e1) <= 1e-12 * e1);
}

TEST_CASE("double-sum plan layout") {
    std::mt19937_64 gen(6);
    const EventPath path({uniform_times(gen, 400, 100.0)}, 100.0);
    const auto& lags = path.lag_index(0, 0);
    const auto plan = make_double_sum_plan(lags, StrataConfig{});
    CHECK(plan.groups.size() == 10);
    CHECK(plan.groups.front().first == 1);
    CHECK(plan.groups.back().last == 40);
    CHECK(plan.groups[0].last == 1);
    CHECK(plan.groups[1].first == 2);
    CHECK(plan.groups[2].last - plan.groups[2].first == 1);
    CHECK(plan.remainder.front().first == 41);
    CHECK(plan.remainder.back().last == 399);
    CHECK(plan.remainder.size() <= 5);

    DoubleSumPlan bad = plan;
    bad.groups[1].first = 5;
    CHECK_THROWS_AS(bad.validate(), PlanError);
    bad = plan;
    bad.rounds = 0;
    CHECK_THROWS_AS(bad.validate(), PlanError);
}

TEST_CASE("double sums: constant summands and exhaustive plans are exact") {
    std::mt19937_64 gen(12);
    const EventPath path({uniform_times(gen, 300, 50.0), uniform_times(gen, 200, 50.0)}, 50.0);
    const auto& lags = path.lag_index(0, 1);
    CounterRng rng(2);
    const auto plan = make_double_sum_plan(lags, StrataConfig{});
    const auto c = estimate_double_sum(lags, 1, [](LagPair, std::span<double> o) { o[0] = -1.5; }, plan, {}, rng);
    CHECK(c.value[0] == doctest::Approx(-1.5 * lags.total_pairs()).epsilon(1e-13));

    StrataConfig ex;
    ex.exhaustive = true;
    const auto full = make_double_sum_plan(lags, ex);
    const auto f = [](LagPair p, std::span<double> o) { o[0] = std::exp(-p.time_difference) * p.time_to_horizon; };
    const auto est = estimate_double_sum(lags, 1, f, full, {}, rng);
    double exact = 0.0;
    for (double tm : path.times(0))
        for (double tn : path.times(1))
            if (tn < tm) exact += std::exp(-(tm - tn)) * (50.0 - tm);
    CHECK(std::abs(est.value[0] - exact) <= 1e-12 * exact);
}

TEST_CASE("double-sum estimate is unbiased on a small path") {
    std::mt19937_64 gen(21);
    const EventPath path({uniform_times(gen, 150, 60.0)}, 60.0);
    const auto& lags = path.lag_index(0, 0);
    StrataConfig cfg;
    cfg.double_budget = 80;
    const auto plan = make_double_sum_plan(lags, cfg);
    const auto f = [](LagPair p, std::span<double> o) { o[0] = std::exp(-0.5 * p.time_difference); };
    double exact = 0.0;
    for (std::size_t h = 1; h <= lags.max_lag(); ++h)
        for (std::size_t s = 1; s <= lags.set_size(h); ++s) {
            std::vector<double> o(1);
            f(lags.pair(h, s), o);
            exact += o[0];
        }
    const int reps = 3000;
    double sum = 0.0, sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto rng = CounterRng::stream(77, {static_cast<std::uint64_t>(r)});
        const double v = estimate_double_sum(lags, 1, f, plan, {}, rng).value[0];
        sum += v;
        sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("adaptive allocation concentrates on the noisy stratum") {
    const std::vector<std::uint64_t> sizes{200, 200};
    CounterRng rng(3);
    auto point = [](std::size_t p, std::uint64_t idx, std::span<double> o) {
        o[0] = p == 0 ? 1.0 : static_cast<double>(idx % 7);
    };
    const auto est = estimate_adaptive(sizes, 1, point, 100, 4, {}, rng);
    CHECK(est.allocation[0] == doctest::Approx(0.0));
    CHECK(est.allocation[1] == doctest::Approx(1.0));
}
