#include "hawkes/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "hawkes/errors.hpp"

namespace hawkes {

namespace {

void check_model(const ModelSpec& model, std::span<const double> theta, double horizon) {
    model.validate(theta);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("horizon must be positive and finite");
}

// Sorted streams; exact ties inside one type (probability zero) keep one copy.
EventPath assemble(std::vector<std::vector<double>> times, double horizon) {
    for (auto& t : times) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
    }
    return EventPath(std::move(times), horizon);
}

}  // namespace

Eigen::MatrixXd branching_matrix(const ModelSpec& model, std::span<const double> theta) {
    const std::size_t d = model.dimension();
    Eigen::MatrixXd m(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto row = model.row(theta, k);
        for (std::size_t i = 0; i < d; ++i)
            m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = l1_norm(model.view(row, k, i));
    }
    return m;
}

double spectral_radius(const ModelSpec& model, std::span<const double> theta) {
    const auto m = branching_matrix(model, theta);
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void require_stable(const ModelSpec& model, std::span<const double> theta) {
    const double r = spectral_radius(model, theta);
    if (!(r < 1.0))
        throw PreconditionError("unstable model: spectral radius of the kernel masses is " + std::to_string(r));
}

EventPath simulate_cluster(const ModelSpec& model, std::span<const double> theta, double horizon, CounterRng& rng,
                           ClusterStats* stats) {
    check_model(model, theta, horizon);
    require_stable(model, theta);
    const std::size_t d = model.dimension();
    const auto mass = branching_matrix(model, theta);
    if (stats) {
        stats->parents.assign(d, 0);
        stats->children.assign(d * d, 0);
    }

    std::vector<std::vector<double>> times(d);
    struct Pending {
        std::size_t type;
        double time;
    };
    std::vector<Pending> queue;
    for (std::size_t k = 0; k < d; ++k) {
        std::poisson_distribution<std::uint64_t> immigrants(model.row(theta, k)[0] * horizon);
        const auto n = immigrants(rng);
        for (std::uint64_t q = 0; q < n; ++q) queue.push_back({k, horizon * rng.uniform_open()});
    }
    while (!queue.empty()) {
        const Pending e = queue.back();
        queue.pop_back();
        times[e.type].push_back(e.time);
        if (stats) ++stats->parents[e.type];
        for (std::size_t k = 0; k < d; ++k) {
            const double m = mass(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(e.type));
            if (!(m > 0.0)) continue;
            std::poisson_distribution<std::uint64_t> offspring(m);
            const auto n = offspring(rng);
            if (stats) stats->children[k * d + e.type] += n;
            const auto kernel = model.view(model.row(theta, k), k, e.type);
            for (std::uint64_t q = 0; q < n; ++q) {
                const double t = e.time + sample_delay(kernel, rng);
                if (t <= horizon && t > e.time) queue.push_back({k, t});
            }
        }
    }
    return assemble(std::move(times), horizon);
}

EventPath simulate_thinning(const ModelSpec& model, std::span<const double> theta, double horizon, CounterRng& rng) {
    check_model(model, theta, horizon);
    require_stable(model, theta);
    const std::size_t d = model.dimension();
    std::vector<std::vector<double>> times(d);
    std::vector<double> rate(d);

    double base = 0.0;
    for (std::size_t k = 0; k < d; ++k) base += model.row(theta, k)[0];

    // Sum over k of the kernel contributions of past events at t (or their tail sup).
    const auto excitation = [&](double t, bool bound, std::size_t k) {
        const auto row = model.row(theta, k);
        double total = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const auto v = model.view(row, k, i);
            for (double s : times[i]) total += bound ? phi_tail_sup(v, t - s) : phi(v, t - s);
        }
        return total;
    };

    double t = 0.0;
    double envelope = base;
    for (;;) {
        if (!(envelope > 0.0)) break;
        t -= std::log(rng.uniform_open()) / envelope;
        if (t > horizon) break;
        double total = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            rate[k] = model.row(theta, k)[0] + excitation(t, false, k);
            total += rate[k];
        }
        const double u = rng.uniform() * envelope;
        if (u < total) {
            std::size_t k = 0;
            double acc = rate[0];
            while (u >= acc && k + 1 < d) acc += rate[++k];
            times[k].push_back(t);
        }
        envelope = base;
        for (std::size_t k = 0; k < d; ++k) envelope += excitation(t, true, k);
    }
    return assemble(std::move(times), horizon);
}

}  // namespace hawkes
