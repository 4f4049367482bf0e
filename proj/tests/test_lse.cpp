#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hawkes/errors.hpp"
#include "hawkes/lse.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

std::vector<double> uniform_times(std::mt19937_64& gen, std::size_t n, double horizon) {
    std::uniform_real_distribution<double> u(0.0, horizon);
    std::set<double> s;
    while (s.size() < n) s.insert(u(gen));
    return {s.begin(), s.end()};
}

struct Instance {
    ModelSpec model;
    std::vector<double> theta;
    EventPath path;
};

Instance random_instance(Family f, std::size_t d, std::size_t r, std::mt19937_64& gen) {
    auto model = ModelSpec::uniform(d, KernelSpec::make(f, r));
    std::vector<double> theta;
    std::uniform_real_distribution<double> u(0.2, 1.5);
    for (std::size_t k = 0; k < d; ++k) {
        theta.push_back(u(gen));
        for (std::size_t i = 0; i < d; ++i) {
            auto p = oracle::random_kernel(f, r, gen);
            theta.insert(theta.end(), p.begin(), p.end());
        }
    }
    std::vector<std::vector<double>> times;
    for (std::size_t i = 0; i < d; ++i) times.push_back(uniform_times(gen, 25 + 5 * i, 20.0));
    return {std::move(model), std::move(theta), EventPath(std::move(times), 20.0)};
}

}  // namespace

TEST_CASE("single event against a hand integral") {
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::exponential));
    const double mu = 0.7, w = 0.4, b = 1.3, t1 = 2.0, T = 5.0;
    const std::vector<double> theta{mu, w, b};
    const EventPath path({{t1}}, T);
    const double tail = T - t1;
    const double integral = mu * mu * T + 2.0 * mu * w * (1.0 - std::exp(-b * tail)) +
                            w * w * b / 2.0 * (1.0 - std::exp(-2.0 * b * tail));
    const double expected = integral / T - 2.0 * mu / T;
    CHECK(lse_decomposed(path, model, theta) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(lse_exact(path, model, theta) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("decomposition matches the integral for every family") {
    std::mt19937_64 gen(17);
    for (auto f : {Family::exponential, Family::delayed_exponential, Family::gaussian, Family::rayleigh,
                   Family::triangular}) {
        CAPTURE(to_string(f));
        for (std::size_t d : {1u, 2u}) {
            const auto inst = random_instance(f, d, 2, gen);
            const double direct = lse_exact(inst.path, inst.model, inst.theta);
            const double split = lse_decomposed(inst.path, inst.model, inst.theta);
            CHECK(std::abs(direct - split) <= 1e-8 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("both integration schemes agree") {
    std::mt19937_64 gen(29);
    for (auto f : {Family::exponential, Family::gaussian, Family::triangular}) {
        const auto inst = random_instance(f, 2, 1, gen);
        const double gk = lse_exact(inst.path, inst.model, inst.theta, Quadrature::gauss_kronrod);
        const double simpson = lse_exact(inst.path, inst.model, inst.theta, Quadrature::adaptive_simpson);
        CHECK(std::abs(gk - simpson) <= 1e-8 * std::max(1.0, std::abs(gk)));
    }
}

TEST_CASE("contrast is the sum of its rows") {
    std::mt19937_64 gen(31);
    const auto inst = random_instance(Family::exponential, 2, 1, gen);
    double rows = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
        rows += lse_decomposed_row(inst.path, inst.model, inst.model.row(inst.theta, k), k);
    CHECK(rows == doctest::Approx(lse_decomposed(inst.path, inst.model, inst.theta)).epsilon(1e-14));
}

TEST_CASE("exact gradient matches central differences") {
    std::mt19937_64 gen(37);
    for (auto f : {Family::exponential, Family::delayed_exponential, Family::gaussian, Family::rayleigh,
                   Family::triangular}) {
        CAPTURE(to_string(f));
        const auto inst = random_instance(f, 2, 2, gen);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto row = inst.model.row(inst.theta, k);
            const std::vector<double> base(row.begin(), row.end());
            const auto g = lse_gradient_row(inst.path, inst.model, row, k);
            for (std::size_t p = 0; p < base.size(); ++p) {
                const double fd = oracle::central_difference(
                    [&](const std::vector<double>& q) { return lse_decomposed_row(inst.path, inst.model, q, k); },
                    base, p);
                CHECK(oracle::close(g[p], fd, 1e-5, 1e-8));
            }
        }
    }
}

TEST_CASE("mixed gaussian and exponential rows are rejected") {
    const ModelSpec model(2, {KernelSpec::make(Family::gaussian), KernelSpec::make(Family::exponential),
                              KernelSpec::make(Family::exponential), KernelSpec::make(Family::exponential)});
    const std::vector<double> theta{1.0, 0.2, 1.0, 1.0, 0.2, 1.0, 1.0, 0.2, 1.0, 0.2, 1.0};
    const EventPath path({{1.0, 2.0, 3.0}, {1.5, 2.5, 3.5}}, 4.0);
    CHECK_THROWS_AS((void)lse_decomposed_row(path, model, model.row(theta, 0), 0), CapabilityError);
    CHECK_NOTHROW((void)lse_decomposed_row(path, model, model.row(theta, 1), 1));
}

TEST_CASE("exponential rows may mix delays") {
    const ModelSpec model(2, {KernelSpec::make(Family::exponential), KernelSpec::make(Family::delayed_exponential),
                              KernelSpec::make(Family::delayed_exponential), KernelSpec::make(Family::exponential)});
    const std::vector<double> theta{1.0, 0.2, 1.0, 0.3, 2.0, 0.5, 0.8, 0.1, 1.5, 0.7, 0.3, 1.1};
    std::mt19937_64 gen(41);
    const EventPath path({uniform_times(gen, 20, 10.0), uniform_times(gen, 15, 10.0)}, 10.0);
    const double direct = lse_exact(path, model, theta);
    CHECK(std::abs(direct - lse_decomposed(path, model, theta)) <= 1e-8 * std::abs(direct));
}

TEST_CASE("argument checks") {
    const auto model = ModelSpec::uniform(1, KernelSpec::make(Family::exponential));
    const EventPath path({{1.0, 2.0}}, 3.0);
    CHECK_THROWS_AS((void)lse_decomposed(path, model, std::vector<double>{1.0, -0.1, 1.0}), ArgumentError);
    CHECK_THROWS_AS((void)lse_decomposed(path, model, std::vector<double>{1.0, 0.1}), ArgumentError);
}
