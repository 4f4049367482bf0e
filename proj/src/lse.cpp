#include "hawkes/lse.hpp"

#include <algorithm>
#include <string>

#include "hawkes/errors.hpp"
#include "hawkes/quadrature.hpp"

namespace hawkes {

namespace {

constexpr std::size_t exact_event_cap = 10000;

void check_row(const EventPath& path, const ModelSpec& model, std::span<const double> row, std::size_t k) {
    if (path.dimension() != model.dimension()) throw ArgumentError("path and model dimensions differ");
    model.validate_row(row, k);
}

// Event times plus every kink of the shifted kernels, clipped to [0, T].
std::vector<double> integration_breaks(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                       std::size_t k) {
    const double T = path.horizon();
    std::vector<double> b{0.0, T};
    for (std::size_t i = 0; i < path.dimension(); ++i) {
        const auto kk = kinks(model.view(row, k, i));
        for (double t : path.times(i)) {
            b.push_back(t);
            for (double x : kk)
                if (t + x < T) b.push_back(t + x);
        }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

}  // namespace

double lse_exact_row(const EventPath& path, const ModelSpec& model, std::span<const double> row, std::size_t k,
                     Quadrature scheme) {
    check_row(path, model, row, k);
    if (path.total_count() > exact_event_cap)
        throw PreconditionError("exact contrast is limited to " + std::to_string(exact_event_cap) + " events");
    const double T = path.horizon();
    const auto sq = [&](double t) {
        const double l = intensity(path, model, row, k, t);
        return l * l;
    };
    const auto breaks = integration_breaks(path, model, row, k);
    double area = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        area += scheme == Quadrature::gauss_kronrod ? quad::gauss_kronrod(sq, a, b)
                                                    : quad::adaptive_simpson(sq, a, b, 1e-10 * (b - a));
    }
    double at_events = 0.0;
    for (double t : path.times(k)) at_events += intensity(path, model, row, k, t);
    return area / T - 2.0 * at_events / T;
}

double lse_exact(const EventPath& path, const ModelSpec& model, std::span<const double> theta, Quadrature scheme) {
    double total = 0.0;
    for (std::size_t k = 0; k < model.dimension(); ++k) total += lse_exact_row(path, model, model.row(theta, k), k, scheme);
    return total;
}

double lse_decomposed_row(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                          std::size_t k) {
    check_row(path, model, row, k);
    model.require_supported(k);
    const std::size_t d = model.dimension();
    const double T = path.horizon();
    const double mu = row[0];

    double cross = 0.0;  // pairs (m, n) with t^j_n < t^i_m
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto a = model.view(row, k, i), b = model.view(row, k, j);
            const auto ti = path.times(i), tj = path.times(j);
            for (double tm : ti)
                for (std::size_t n = 0; n < tj.size() && tj[n] < tm; ++n) cross += upsilon(a, b, T - tm, tm - tj[n]);
        }

    double excite = 0.0;
    const auto tk = path.times(k);
    for (std::size_t j = 0; j < d; ++j) {
        const auto v = model.view(row, k, j);
        const auto tj = path.times(j);
        for (double tm : tk)
            for (std::size_t n = 0; n < tj.size() && tj[n] < tm; ++n) excite += phi(v, tm - tj[n]);
    }

    double mass = 0.0, diagonal = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto v = model.view(row, k, i);
        for (double tm : path.times(i)) {
            mass += psi(v, T - tm);
            diagonal += upsilon(v, v, T - tm, 0.0);
        }
    }

    return 2.0 / T * cross - 2.0 / T * excite + mu * mu - 2.0 * path.event_rate(k) * mu + 2.0 * mu / T * mass +
           diagonal / T;
}

double lse_decomposed(const EventPath& path, const ModelSpec& model, std::span<const double> theta) {
    double total = 0.0;
    for (std::size_t k = 0; k < model.dimension(); ++k) total += lse_decomposed_row(path, model, model.row(theta, k), k);
    return total;
}

std::vector<double> lse_gradient_row(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                     std::size_t k) {
    check_row(path, model, row, k);
    model.require_supported(k);
    const std::size_t d = model.dimension();
    const double T = path.horizon();
    const double mu = row[0];
    std::vector<double> grad(row.size(), 0.0);
    std::vector<double> ga, gb;

    const auto block = [&](std::size_t i) {
        return std::span<double>(grad).subspan(model.kernel_offset(k, i), model.kernel(k, i).size());
    };
    const auto add = [](std::span<double> dst, const std::vector<double>& src, double scale) {
        for (std::size_t p = 0; p < src.size(); ++p) dst[p] += scale * src[p];
    };

    double mass = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto v = model.view(row, k, i);
        ga.resize(v.params.size());
        for (double tm : path.times(i)) {
            mass += psi(v, T - tm);
            psi_gradient(v, T - tm, ga);
            add(block(i), ga, 2.0 * mu / T);
            upsilon_gradient_same(v, T - tm, 0.0, ga);
            add(block(i), ga, 1.0 / T);
        }
    }
    grad[0] = 2.0 * mu - 2.0 * path.event_rate(k) + 2.0 / T * mass;

    const auto tk = path.times(k);
    for (std::size_t j = 0; j < d; ++j) {
        const auto v = model.view(row, k, j);
        const auto tj = path.times(j);
        ga.resize(v.params.size());
        for (double tm : tk)
            for (std::size_t n = 0; n < tj.size() && tj[n] < tm; ++n) {
                phi_gradient(v, tm - tj[n], ga);
                add(block(j), ga, -2.0 / T);
            }
    }

    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto a = model.view(row, k, i), b = model.view(row, k, j);
            ga.resize(a.params.size());
            gb.resize(b.params.size());
            const auto ti = path.times(i), tj = path.times(j);
            for (double tm : ti)
                for (std::size_t n = 0; n < tj.size() && tj[n] < tm; ++n) {
                    if (i == j) {
                        upsilon_gradient_same(a, T - tm, tm - tj[n], ga);
                        add(block(i), ga, 2.0 / T);
                    } else {
                        upsilon_gradient(a, b, T - tm, tm - tj[n], ga, gb);
                        add(block(i), ga, 2.0 / T);
                        add(block(j), gb, 2.0 / T);
                    }
                }
        }
    return grad;
}

}  // namespace hawkes
