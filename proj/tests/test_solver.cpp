#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hawkes/errors.hpp"
#include "hawkes/lse.hpp"
#include "hawkes/solver.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

std::vector<double> uniform_times(std::mt19937_64& gen, std::size_t n, double horizon) {
    std::uniform_real_distribution<double> u(0.0, horizon);
    std::set<double> s;
    while (s.size() < n) s.insert(u(gen));
    return {s.begin(), s.end()};
}

EventPath random_path(std::mt19937_64& gen, std::vector<std::size_t> counts, double horizon) {
    std::vector<std::vector<double>> times;
    for (auto n : counts) times.push_back(uniform_times(gen, n, horizon));
    return EventPath(std::move(times), horizon);
}

// Row with random kernel parameters and background rate 0.8.
std::vector<double> random_row(const ModelSpec& model, std::size_t k, std::mt19937_64& gen) {
    std::vector<double> row{0.8};
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const auto p = oracle::random_kernel(model.kernel(k, i).family, model.kernel(k, i).bases, gen);
        row.insert(row.end(), p.begin(), p.end());
    }
    return row;
}

StrataConfig exhaustive() {
    StrataConfig c;
    c.exhaustive = true;
    return c;
}

// Kernel with every parameter frozen, so only the background rate moves.
KernelSpec inert(Family f) {
    auto spec = KernelSpec::make(f);
    spec.frozen.assign(spec.size(), true);
    return spec;
}

}  // namespace

TEST_CASE("exhaustive gradient estimate equals the exact gradient") {
    std::mt19937_64 gen(31);
    for (Family f : {Family::exponential, Family::gaussian, Family::rayleigh, Family::triangular}) {
        for (std::size_t d : {1, 2}) {
            CAPTURE(to_string(f));
            CAPTURE(d);
            const auto path = random_path(gen, std::vector<std::size_t>(d, 40), 30.0);
            const auto model = ModelSpec::uniform(d, KernelSpec::make(f, 2));
            for (std::size_t k = 0; k < d; ++k) {
                const auto row = random_row(model, k, gen);
                const auto plans = make_row_plans(path, model, k, exhaustive());
                const auto est = gradient_estimate(path, model, row, k, plans, {}, {7, 0});
                const auto exact = lse_gradient_row(path, model, row, k);
                double scale = 0.0;
                for (double g : exact) scale = std::max(scale, std::abs(g));
                for (std::size_t p = 0; p < row.size(); ++p) {
                    CAPTURE(p);
                    CHECK(std::abs(est.values[p] - exact[p]) <= 1e-12 * scale);
                }
            }
        }
    }
}

TEST_CASE("background component without excitation") {
    std::mt19937_64 gen(2);
    const auto path = random_path(gen, {120}, 50.0);
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::exponential));
    const std::vector<double> row{1.7, 0.0, 1.3};
    const auto plans = make_row_plans(path, model, 0, StrataConfig{});
    const auto est = gradient_estimate(path, model, row, 0, plans, {}, {1, 0});
    CHECK(est.values[0] == doctest::Approx(2.0 * (1.7 - 120.0 / 50.0)).epsilon(1e-14));
}

TEST_CASE("sampled gradient estimate is unbiased") {
    std::mt19937_64 gen(17);
    const auto path = random_path(gen, {300}, 150.0);
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::exponential));
    const std::vector<double> row{1.2, 0.4, 0.9};
    StrataConfig cfg;
    cfg.single_budget = 50;
    cfg.double_budget = 200;
    const auto plans = make_row_plans(path, model, 0, cfg);
    const auto exact = lse_gradient_row(path, model, row, 0);
    const int reps = 1000;
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    for (int r = 0; r < reps; ++r) {
        const auto g = gradient_estimate(path, model, row, 0, plans, {}, {5, static_cast<std::uint64_t>(r)}).values;
        for (int p = 0; p < 3; ++p) {
            sum[p] += g[p];
            sq[p] += g[p] * g[p];
        }
    }
    for (int p = 0; p < 3; ++p) {
        CAPTURE(p);
        const double mean = sum[p] / reps;
        const double se = std::sqrt(std::max(sq[p] / reps - mean * mean, 0.0) / reps);
        CHECK(std::abs(mean - exact[p]) <= 3.0 * se + 1e-12 * std::abs(exact[p]));
    }
}

TEST_CASE("adam step rules") {
    AdamConfig cfg;
    const std::vector<double> floor(2, 1e-10);
    const std::vector<bool> free(2, false);

    SUBCASE("zero gradient keeps the point") {
        AdamState s(2);
        std::vector<double> x{0.5, 2.0};
        for (int t = 0; t < 10; ++t) s.step(x, std::vector<double>{0.0, 0.0}, floor, free, cfg);
        CHECK(x == std::vector<double>{0.5, 2.0});
    }
    SUBCASE("constant gradient moves by the learning rate") {
        AdamState s(2);
        std::vector<double> x{100.0, 100.0};
        double before = x[0];
        for (std::size_t t = 1; t <= 150; ++t) {
            s.step(x, std::vector<double>{3.0, -0.01}, floor, free, cfg);
            CHECK(before - x[0] == doctest::Approx(learning_rate(cfg, t)).epsilon(1e-6));
            before = x[0];
        }
        CHECK(x[1] > 100.0);
    }
    SUBCASE("learning rate halves every period") {
        const double a = cfg.learning_rate;
        CHECK(learning_rate(cfg, 0) == a);
        CHECK(learning_rate(cfg, 199) == a);
        CHECK(learning_rate(cfg, 200) == a / 2);
        CHECK(learning_rate(cfg, 400) == a / 4);
    }
    SUBCASE("projection and frozen entries") {
        AdamState s(2);
        std::vector<double> x{0.01, 0.01};
        const std::vector<bool> mask{false, true};
        s.step(x, std::vector<double>{1.0, 1.0}, floor, mask, cfg);
        CHECK(x[0] == 1e-10);
        CHECK(x[1] == 0.01);
    }
    SUBCASE("non-finite gradient") {
        AdamState s(2);
        std::vector<double> x{1.0, 1.0};
        CHECK_THROWS_AS(s.step(x, std::vector<double>{1.0, NAN}, floor, free, cfg), NumericalError);
        CHECK(s.steps() == 0);
    }
}

TEST_CASE("background-only fit converges to the event rate") {
    std::mt19937_64 gen(3);
    const auto path = random_path(gen, {400, 250}, 200.0);
    const auto model = ModelSpec::uniform(2, inert(Family::exponential));
    std::vector<double> start{0.3, 0.0, 1.0, 0.0, 1.0, 5.0, 0.0, 1.0, 0.0, 1.0};
    SolverConfig cfg;
    cfg.iterations = 2000;
    cfg.early_stop = false;
    const auto rec = fit(path, model, cfg, start);
    CHECK(std::abs(rec.theta[0] - 2.0) < 1e-3);
    CHECK(std::abs(rec.theta[5] - 1.25) < 1e-3);
    CHECK(rec.rows[0].theta.size() == 2001);
    CHECK(rec.rows[0].gradient.size() == 2001);
}

TEST_CASE("early stop once the gradient vanishes") {
    std::mt19937_64 gen(3);
    const auto path = random_path(gen, {100}, 50.0);
    const auto model = ModelSpec::uniform(1, inert(Family::exponential));
    const std::vector<double> start{2.0, 0.0, 1.0};
    SolverConfig cfg;
    const auto rec = fit(path, model, cfg, start);
    CHECK(rec.rows[0].stopped_early);
    CHECK(rec.rows[0].theta.size() == cfg.stop_patience);
    CHECK(rec.rows[0].gradient.size() == rec.rows[0].theta.size());
    CHECK(rec.theta[0] == 2.0);
}

TEST_CASE("fit is reproducible and rows are independent") {
    std::mt19937_64 gen(8);
    const auto path = random_path(gen, {150, 120}, 80.0);
    const auto model = ModelSpec::uniform(2, KernelSpec::make(Family::exponential));
    SolverConfig cfg;
    cfg.iterations = 40;
    cfg.seed = 99;
    cfg.strata.single_budget = 60;
    cfg.strata.double_budget = 100;
    const auto a = fit(path, model, cfg);
    cfg.threads = 2;
    const auto b = fit(path, model, cfg);
    CHECK(a.theta == b.theta);
    CHECK(a.rows[1].gradient == b.rows[1].gradient);
    CHECK(a.rows[0].iterations() == 40);

    const auto start = initial_theta(path, model, 99);
    const auto alone = fit_row(path, model, 1, model.row(start, 1), cfg);
    CHECK(alone.theta == a.rows[1].theta);

    cfg.seed = 100;
    const auto c = fit(path, model, cfg);
    CHECK(c.theta != a.theta);
}

TEST_CASE("exhaustive fit follows full-gradient adam") {
    std::mt19937_64 gen(44);
    const auto path = random_path(gen, {60}, 40.0);
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::exponential));
    const std::vector<double> start{0.7, 0.3, 1.5};
    SolverConfig cfg;
    cfg.iterations = 60;
    cfg.early_stop = false;
    cfg.strata.exhaustive = true;
    const auto a = fit_row(path, model, 0, start, cfg);
    cfg.seed = 12345;
    const auto b = fit_row(path, model, 0, start, cfg);
    for (std::size_t t = 0; t < a.theta.size(); ++t)
        for (std::size_t p = 0; p < 3; ++p) CHECK(std::abs(a.theta[t][p] - b.theta[t][p]) <= 1e-12);

    // Reference descent on the exact gradient.
    std::vector<double> x = start;
    AdamState adam(3);
    const auto floor = model.row_floor(0, cfg.projection_floor);
    const std::vector<bool> free(3, false);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        adam.step(x, lse_gradient_row(path, model, x, 0), floor, free, cfg.adam);
        for (std::size_t p = 0; p < 3; ++p) CHECK(std::abs(a.theta[t + 1][p] - x[p]) <= 1e-9);
    }
}

TEST_CASE("initial point and guards") {
    std::mt19937_64 gen(5);
    const auto path = random_path(gen, {200}, 100.0);
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::gaussian, 3));
    const auto x = initial_theta(path, model, 1);
    CHECK(x[0] == doctest::Approx(1.0));
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(x[1 + 3 * l] >= 1e-2);
        CHECK(x[1 + 3 * l] <= 1.0);
        CHECK(x[2 + 3 * l] >= 0.1);
        CHECK(x[2 + 3 * l] <= 10.0);
        CHECK(x[3 + 3 * l] >= 0.0);
    }
    CHECK(initial_theta(path, model, 1) == x);
    CHECK(initial_theta(path, model, 2) != x);

    const auto sbf = ModelSpec::uniform(1, KernelSpec::make(Family::gaussian, 2, true));
    const std::vector<double> fixed{0.0, 0.0, 0.5, 1.0, 0.0, 0.5, 3.0};
    const auto y = initial_theta(path, sbf, 1, fixed);
    CHECK(y[2] == 0.5);
    CHECK(y[3] == 1.0);
    CHECK(y[6] == 3.0);
    CHECK(y[1] > 0.0);

    SolverConfig cfg;
    cfg.iterations = 50;
    cfg.adam.learning_rate = 1e6;
    cfg.divergence_bound = 100.0;
    CHECK_THROWS_AS((void)fit(path, model, cfg), NumericalError);

    const EventPath thin({{1.0}}, 10.0);
    CHECK_THROWS_AS((void)fit(thin, model, SolverConfig{}), PreconditionError);
}
