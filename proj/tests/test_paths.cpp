#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hawkes/errors.hpp"
#include "hawkes/paths.hpp"

using namespace hawkes;

namespace {

std::vector<double> random_times(std::mt19937_64& gen, std::size_t n, double horizon) {
    std::uniform_real_distribution<double> u(0.0, horizon);
    std::set<double> s;
    while (s.size() < n) s.insert(u(gen));
    return {s.begin(), s.end()};
}

std::size_t brute_kappa(const EventPath& p, std::size_t i, std::size_t j, std::size_t n) {
    std::size_t c = 0;
    for (double t : p.times(i))
        if (t < p.times(j)[n - 1]) ++c;
    return c;
}

std::size_t brute_varpi(const EventPath& p, std::size_t i, std::size_t j, std::size_t h) {
    for (std::size_t m = 1; m <= p.count(i); ++m)
        if (brute_kappa(p, j, i, m) >= h) return m;
    return p.count(i) + 1;
}

}  // namespace

TEST_CASE("kappa and varpi on a small two-dimensional path") {
    const EventPath p({{0.5, 1.5, 2.5}, {1.0, 2.0}}, 3.0);
    CHECK(p.kappa(0, 1, 2) == 2);
    CHECK(p.kappa(0, 1, 1) == 1);
    CHECK(p.varpi(0, 1, 1) == 2);
    CHECK(p.kappa(1, 0, 1) == 0);
    CHECK(p.varpi(0, 1, 3) == 4);  // sentinel N + 1
}

TEST_CASE("kappa counts strictly earlier events") {
    const EventPath p({{1.0}, {2.0}}, 3.0);
    CHECK(p.kappa(0, 1, 1) == 1);
    CHECK(p.kappa(1, 0, 1) == 0);
}

TEST_CASE("same-type shortcuts") {
    std::mt19937_64 gen(7);
    const EventPath p({random_times(gen, 40, 10.0)}, 10.0);
    for (std::size_t n = 1; n <= 40; ++n) CHECK(p.kappa(0, 0, n) == n - 1);
    for (std::size_t h = 1; h < 40; ++h) {
        CHECK(p.varpi(0, 0, h) == h + 1);
        CHECK(p.lag_set_size(0, 0, h) == 40 - h);
    }
}

TEST_CASE("lag pairs on a univariate path") {
    const EventPath p({{1.0, 2.0, 4.0}}, 10.0);
    auto a = p.lag_pair(0, 0, 1, 1);
    CHECK(a.time_to_horizon == doctest::Approx(8.0));
    CHECK(a.time_difference == doctest::Approx(1.0));
    auto b = p.lag_pair(0, 0, 2, 1);
    CHECK(b.time_to_horizon == doctest::Approx(6.0));
    CHECK(b.time_difference == doctest::Approx(3.0));
    CHECK_THROWS_AS((void)p.lag_pair(0, 0, 3, 1), RangeError);
}

TEST_CASE("event rate and index errors") {
    std::vector<double> t(18754);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = 0.5 * (k + 1.0);
    const EventPath p({t}, 1e4);
    CHECK(p.event_rate(0) == doctest::Approx(1.8754).epsilon(1e-12));
    const EventPath q({{1.0, 2.0}}, 3.0);
    CHECK_THROWS_AS((void)q.kappa(0, 0, 0), ArgumentError);
    CHECK_THROWS_AS((void)q.kappa(0, 0, 3), ArgumentError);
    CHECK_THROWS_AS((void)q.kappa(0, 1, 1), ArgumentError);
}

TEST_CASE("path validation") {
    CHECK_THROWS_AS(EventPath({{2.0, 1.0}}, 3.0), ArgumentError);
    CHECK_THROWS_AS(EventPath({{1.0, 1.0}}, 3.0), ArgumentError);
    CHECK_THROWS_AS(EventPath({{1.0, 4.0}}, 3.0), ArgumentError);
    CHECK_THROWS_AS(EventPath({{0.0, 1.0}}, 3.0), ArgumentError);
    CHECK_THROWS_AS(EventPath({{1.0}}, -1.0), ArgumentError);
}

TEST_CASE("non-triviality") {
    CHECK(EventPath({{1.0, 2.0, 3.0}}, 4.0).is_nontrivial());
    CHECK_FALSE(EventPath({{1.0}}, 4.0).is_nontrivial());
    // dimension 0 has no events after the last event of dimension 1
    const EventPath p({{1.0, 2.0}, {3.0, 3.5}}, 4.0);
    CHECK_FALSE(p.is_nontrivial());
    CHECK_THROWS_AS(p.require_nontrivial(), PreconditionError);
}

TEST_CASE("index helpers match brute force on random paths") {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 5; ++rep) {
        const EventPath p({random_times(gen, 30 + rep, 20.0), random_times(gen, 25, 20.0)}, 20.0);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                const auto& lag = p.lag_index(i, j);
                for (std::size_t n = 1; n <= p.count(j); ++n) CHECK(p.kappa(i, j, n) == brute_kappa(p, i, j, n));
                for (std::size_t m = 1; m <= p.count(i); ++m) CHECK(lag.preceding(m) == brute_kappa(p, j, i, m));
                for (std::size_t h = 1; h <= p.count(j) + 1; ++h) {
                    CHECK(p.varpi(i, j, h) == brute_varpi(p, i, j, h));
                    CHECK(lag.first_index(h) == brute_varpi(p, i, j, h));
                    CHECK(lag.set_size(h) == p.lag_set_size(i, j, h));
                }
            }
    }
}

TEST_CASE("lag sets partition every ordered pair of events") {
    std::mt19937_64 gen(3);
    const EventPath p({random_times(gen, 35, 15.0), random_times(gen, 20, 15.0)}, 15.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            std::multiset<std::pair<double, double>> brute, via_sets, via_groups;
            for (double tm : p.times(i))
                for (double tn : p.times(j))
                    if (tn < tm) brute.insert({15.0 - tm, tm - tn});
            const auto& lag = p.lag_index(i, j);
            for (std::size_t h = 1; h <= lag.max_lag(); ++h)
                for (std::size_t slot = 1; slot <= p.lag_set_size(i, j, h); ++slot) {
                    const auto a = p.lag_pair(i, j, h, slot);
                    const auto b = lag.pair(h, slot);
                    CHECK(a.time_to_horizon == b.time_to_horizon);
                    CHECK(a.time_difference == b.time_difference);
                    via_sets.insert({a.time_to_horizon, a.time_difference});
                }
            // groups of three lags
            for (std::size_t h = 1; h <= lag.max_lag(); h += 3) {
                const auto size = lag.group_size(h, h + 2);
                for (std::uint64_t q = 0; q < size; ++q) {
                    const auto a = lag.pair_in_group(h, q);
                    via_groups.insert({a.time_to_horizon, a.time_difference});
                }
            }
            CHECK(brute == via_sets);
            CHECK(brute == via_groups);
            CHECK(lag.total_pairs() == brute.size());
        }
}

TEST_CASE("truncation keeps a prefix and copies share lag indexes") {
    const EventPath p({{1.0, 2.0, 4.0, 7.0}}, 10.0);
    const auto q = p.truncated(4.0);
    CHECK(q.count(0) == 3);
    CHECK(q.horizon() == 4.0);
    const EventPath copy = p;
    CHECK(&copy.lag_index(0, 0) == &p.lag_index(0, 0));
    CHECK_THROWS_AS((void)p.truncated(11.0), ArgumentError);
}
