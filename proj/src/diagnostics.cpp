#include "hawkes/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hawkes/errors.hpp"
#include "hawkes/quadrature.hpp"

namespace hawkes {

namespace {

constexpr double ks_99 = 1.628;  // asymptotic 1% point of sqrt(n) D

// Kinks and Gaussian peaks of both kernels, sorted, inside [0, end].
std::vector<double> merged_breaks(KernelView a, KernelView b, double end) {
    std::vector<double> out{0.0, end};
    for (KernelView k : {a, b}) {
        for (double x : kinks(k)) out.push_back(x);
        if (k.spec.family == Family::gaussian)
            for (std::size_t l = 0; l < k.spec.bases; ++l) {
                const double loc = k.params[l * 3 + 2], scale = k.params[l * 3 + 1];
                for (double z : {-2.0, 0.0, 2.0}) out.push_back(loc + z * scale);
            }
    }
    std::erase_if(out, [end](double x) { return !(x >= 0.0 && x <= end); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Integral over [0, inf) of f, piecewise up to the joint support, then doubling
// tail intervals until their contribution drops below 1e-10.
template <class F>
double half_line(F&& f, KernelView a, KernelView b) {
    const double end = std::max({effective_support(a), effective_support(b), 1e-6});
    const auto breaks = merged_breaks(a, b, end);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) total += quad::gauss_kronrod(f, breaks[p], breaks[p + 1]);
    double lo = end, width = end;
    for (int step = 0; step < 60; ++step) {
        const double piece = quad::gauss_kronrod(f, lo, lo + width);
        total += piece;
        if (std::abs(piece) < 1e-10) break;
        lo += width;
        width *= 2.0;
    }
    return total;
}

void check_pair(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                std::span<const double> theta) {
    if (truth.dimension() != model.dimension()) throw ArgumentError("models differ in dimension");
    truth.validate(truth_theta);
    model.validate(theta);
}

}  // namespace

ResidualSet residuals(const EventPath& path, const ModelSpec& model, std::span<const double> theta) {
    if (path.dimension() != model.dimension()) throw ArgumentError("path and model dimensions differ");
    model.validate(theta);
    const std::size_t d = model.dimension();
    ResidualSet out;
    out.compensated.resize(d);
    out.increments.resize(d);
    out.uniform.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto row = model.row(theta, k);
        double previous = 0.0;
        for (double t : path.times(k)) {
            const double s = compensator(path, model, row, k, t);
            const double gap = std::max(s - previous, 0.0);
            out.compensated[k].push_back(s);
            out.increments[k].push_back(gap);
            out.uniform[k].push_back(-std::expm1(-gap));
            previous = s;
        }
    }
    return out;
}

double kolmogorov_sf(double lambda) {
    if (!(lambda > 0.0)) return 1.0;
    if (lambda < 0.1) return 1.0;  // 1 - 1e-20 and below; the series is slow here
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_uniform(std::span<const double> z) {
    const std::size_t n = z.size();
    if (n < 10) throw ArgumentError("the uniformity test needs at least 10 values, got " + std::to_string(n));
    std::vector<double> s(z.begin(), z.end());
    std::sort(s.begin(), s.end());
    double d = 0.0;
    const double nn = static_cast<double>(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double x = std::clamp(s[m], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(m) + 1.0) / nn - x, x - static_cast<double>(m) / nn});
    }
    return {d, kolmogorov_sf(std::sqrt(nn) * d), ks_99 / std::sqrt(nn)};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("two-sample test needs non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double en = std::sqrt(n * m / (n + m));
    return {d, kolmogorov_sf(en * d), ks_99 / en};
}

BridgeSeries bridge_series(std::span<const double> z) {
    std::vector<double> s(z.begin(), z.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    BridgeSeries out;
    if (s.empty()) return out;
    const double scale = std::sqrt(std::max(n - 1.0, 0.0));
    for (std::size_t m = 0; m < s.size(); ++m) {
        const double pos = (static_cast<double>(m) + 1.0) / (n + 1.0);
        out.position.push_back(pos);
        out.value.push_back(scale * (s[m] - pos));
    }
    out.band = ks_99 * scale / std::sqrt(n);
    return out;
}

QqSeries qq_series(std::span<const double> increments) {
    QqSeries out;
    out.empirical.assign(increments.begin(), increments.end());
    std::sort(out.empirical.begin(), out.empirical.end());
    const double n = static_cast<double>(out.empirical.size());
    for (std::size_t m = 0; m < out.empirical.size(); ++m)
        out.theoretical.push_back(-std::log1p(-(static_cast<double>(m) + 1.0) / (n + 1.0)));
    return out;
}

double kernel_distance_sq(KernelView a, KernelView b) {
    return half_line(
        [&](double x) {
            const double e = phi(a, x) - phi(b, x);
            return e * e;
        },
        a, b);
}

double kernel_transport(KernelView a, KernelView b) {
    const double ma = l1_norm(a), mb = l1_norm(b);
    if (!(ma > 0.0) || !(mb > 0.0)) throw ArgumentError("transport distance needs kernels with positive mass");
    return half_line([&](double x) { return std::abs(psi(a, x) / ma - psi(b, x) / mb); }, a, b);
}

MetricReport compare_models(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                            std::span<const double> theta, bool allow_zero_mass) {
    check_pair(truth, truth_theta, model, theta);
    const std::size_t d = truth.dimension();
    MetricReport r;
    r.kernel_l2_sq.resize(d * d);
    r.kernel_transport.resize(d * d);
    r.kernel_mass_gap.resize(d * d);
    double mu_sq = 0.0, phi_sq = 0.0, kernel_sq = 0.0, transport = 0.0, mass_gap = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const auto rt = truth.row(truth_theta, k), rm = model.row(theta, k);
        const double e = rt[0] - rm[0];
        r.background_sq += e * e;
        r.background_abs += std::abs(e);
        mu_sq += rt[0] * rt[0];
        for (std::size_t i = 0; i < d; ++i) {
            const auto a = truth.view(rt, k, i), b = model.view(rm, k, i);
            const std::size_t t = k * d + i;
            r.kernel_l2_sq[t] = kernel_distance_sq(a, b);
            kernel_sq += r.kernel_l2_sq[t];
            phi_sq += l2_norm_sq(a);
            const double ma = l1_norm(a), mb = l1_norm(b);
            r.kernel_mass_gap[t] = std::abs(ma - mb);
            mass_gap += r.kernel_mass_gap[t];
            if (ma > 0.0 && mb > 0.0)
                r.kernel_transport[t] = kernel_transport(a, b);
            else if (!allow_zero_mass)
                throw ArgumentError("kernel (" + std::to_string(k) + ", " + std::to_string(i) + ") has zero mass");
            transport += r.kernel_transport[t];
        }
    }
    r.l2_rel_err = mu_sq > 0.0 && phi_sq > 0.0 ? r.background_sq / mu_sq + kernel_sq / phi_sq
                                              : std::numeric_limits<double>::quiet_NaN();
    r.wass_err = r.background_abs + transport + mass_gap;
    return r;
}

double l2_rel_err(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                  std::span<const double> theta) {
    const double e = compare_models(truth, truth_theta, model, theta, true).l2_rel_err;
    if (std::isnan(e)) throw ArgumentError("relative error needs a reference with non-zero background and kernels");
    return e;
}

double wass_err(const ModelSpec& truth, std::span<const double> truth_theta, const ModelSpec& model,
                std::span<const double> theta, bool allow_zero_mass) {
    return compare_models(truth, truth_theta, model, theta, allow_zero_mass).wass_err;
}

}  // namespace hawkes
