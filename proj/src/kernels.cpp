#include "hawkes/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "hawkes/errors.hpp"
#include "hawkes/special.hpp"

namespace hawkes {

namespace {

using special::Dual;
using special::normal_cdf;
using special::normal_mass;
using special::normal_pdf;

constexpr std::array<Role, 2> exp_roles{Role::weight, Role::beta};
constexpr std::array<Role, 3> delayed_roles{Role::weight, Role::beta, Role::delta};
constexpr std::array<Role, 3> gauss_roles{Role::weight, Role::beta, Role::delta};
constexpr std::array<Role, 2> rayleigh_roles{Role::weight, Role::beta};
constexpr std::array<Role, 4> triangle_roles{Role::weight, Role::alpha, Role::beta, Role::delta};

void require_upsilon(Family a, Family b);

bool exp_like(Family f) { return f == Family::exponential || f == Family::delayed_exponential; }

// ---------------------------------------------------------------------------
// Unit-weight bases. `b` points at the shape parameters (after the weight).

double basis_phi(Family f, const double* b, double x) {
    if (x < 0.0) return 0.0;
    switch (f) {
        case Family::exponential: return b[0] * std::exp(-b[0] * x);
        case Family::delayed_exponential: {
            const double y = x - b[1];
            return y < 0.0 ? 0.0 : b[0] * std::exp(-b[0] * y);
        }
        case Family::gaussian: return normal_pdf((x - b[1]) / b[0]) / b[0];
        case Family::rayleigh: {
            const double r = x / b[0];
            return r / b[0] * std::exp(-0.5 * r * r);
        }
        case Family::triangular: {
            const double r = x - b[0];
            if (r < 0.0) return 0.0;
            if (r < b[1]) return r / b[1];
            const double y = r - b[1];
            return y < b[2] ? 1.0 - y / b[2] : 0.0;
        }
    }
    return 0.0;
}

double basis_psi(Family f, const double* b, double x) {
    if (x <= 0.0) return 0.0;
    switch (f) {
        case Family::exponential: return -std::expm1(-b[0] * x);
        case Family::delayed_exponential: {
            const double y = x - b[1];
            return y <= 0.0 ? 0.0 : -std::expm1(-b[0] * y);
        }
        case Family::gaussian: return normal_mass(-b[1] / b[0], (x - b[1]) / b[0]);
        case Family::rayleigh: {
            const double r = x / b[0];
            return -std::expm1(-0.5 * r * r);
        }
        case Family::triangular: {
            const double r = x - b[0];
            if (r <= 0.0) return 0.0;
            if (r < b[1]) return r * r / (2.0 * b[1]);
            const double y = r - b[1];
            if (y < b[2]) return 0.5 * b[1] + y - y * y / (2.0 * b[2]);
            return 0.5 * (b[1] + b[2]);
        }
    }
    return 0.0;
}

double basis_mass(Family f, const double* b) {
    switch (f) {
        case Family::gaussian: return normal_cdf(b[1] / b[0]);
        case Family::triangular: return 0.5 * (b[1] + b[2]);
        default: return 1.0;
    }
}

// Partials of the unit basis with respect to its shape parameters.
void basis_phi_shape_grad(Family f, const double* b, double x, double* g) {
    switch (f) {
        case Family::exponential: {
            if (x < 0.0) { g[0] = 0.0; return; }
            g[0] = std::exp(-b[0] * x) * (1.0 - b[0] * x);
            return;
        }
        case Family::delayed_exponential: {
            const double y = x - b[1];
            if (x < 0.0 || y < 0.0) { g[0] = g[1] = 0.0; return; }
            const double e = std::exp(-b[0] * y);
            g[0] = e * (1.0 - b[0] * y);
            g[1] = b[0] * b[0] * e;
            return;
        }
        case Family::gaussian: {
            if (x < 0.0) { g[0] = g[1] = 0.0; return; }
            const double z = (x - b[1]) / b[0];
            const double p = normal_pdf(z) / (b[0] * b[0]);
            g[0] = p * (z * z - 1.0);
            g[1] = p * z;
            return;
        }
        case Family::rayleigh: {
            if (x < 0.0) { g[0] = 0.0; return; }
            const double r = x / b[0];
            g[0] = r / (b[0] * b[0]) * std::exp(-0.5 * r * r) * (r * r - 2.0);
            return;
        }
        case Family::triangular: {
            g[0] = g[1] = g[2] = 0.0;
            const double r = x - b[0];
            if (x < 0.0 || r < 0.0) return;
            if (r < b[1]) {
                g[0] = -1.0 / b[1];
                g[1] = -r / (b[1] * b[1]);
                return;
            }
            const double y = r - b[1];
            if (y < b[2]) {
                g[0] = 1.0 / b[2];
                g[1] = 1.0 / b[2];
                g[2] = y / (b[2] * b[2]);
            }
            return;
        }
    }
}

void basis_psi_shape_grad(Family f, const double* b, double x, double* g) {
    switch (f) {
        case Family::exponential: {
            g[0] = x <= 0.0 ? 0.0 : x * std::exp(-b[0] * x);
            return;
        }
        case Family::delayed_exponential: {
            const double y = x - b[1];
            if (x <= 0.0 || y <= 0.0) { g[0] = g[1] = 0.0; return; }
            const double e = std::exp(-b[0] * y);
            g[0] = y * e;
            g[1] = -b[0] * e;
            return;
        }
        case Family::gaussian: {
            if (x <= 0.0) { g[0] = g[1] = 0.0; return; }
            const double z = (x - b[1]) / b[0];
            const double z0 = -b[1] / b[0];
            const double p1 = normal_pdf(z);
            const double p0 = normal_pdf(z0);
            g[0] = (-z * p1 + z0 * p0) / b[0];
            g[1] = -(p1 - p0) / b[0];
            return;
        }
        case Family::rayleigh: {
            if (x <= 0.0) { g[0] = 0.0; return; }
            const double r = x / b[0];
            g[0] = -r * r / b[0] * std::exp(-0.5 * r * r);
            return;
        }
        case Family::triangular: {
            g[0] = g[1] = g[2] = 0.0;
            const double r = x - b[0];
            if (x <= 0.0 || r <= 0.0) return;
            if (r < b[1]) {
                g[0] = -r / b[1];
                g[1] = -r * r / (2.0 * b[1] * b[1]);
                return;
            }
            const double y = r - b[1];
            if (y < b[2]) {
                g[0] = -1.0 + y / b[2];
                g[1] = -0.5 + y / b[2];
                g[2] = y * y / (2.0 * b[2] * b[2]);
                return;
            }
            g[1] = 0.5;
            g[2] = 0.5;
            return;
        }
    }
}

void basis_mass_shape_grad(Family f, const double* b, double* g) {
    switch (f) {
        case Family::exponential:
        case Family::rayleigh: g[0] = 0.0; return;
        case Family::delayed_exponential: g[0] = g[1] = 0.0; return;
        case Family::gaussian: {
            const double p = normal_pdf(b[1] / b[0]);
            g[0] = -p * b[1] / (b[0] * b[0]);
            g[1] = p / b[0];
            return;
        }
        case Family::triangular: g[0] = 0.0; g[1] = g[2] = 0.5; return;
    }
}

// ---------------------------------------------------------------------------
// Cross integrals of unit bases: U(t, s) = int_0^t a(u) b(u + s) du, with
// partials with respect to the shape parameters of each side. da / db may be
// null when only the value is needed.

struct PairOut {
    double* da;
    double* db;
};

// a(u) = ba exp(-ba (u - ea)) on u >= ea, b likewise with (bb, eb).
double shifted_exp_pair(double ba, double ea, double bb, double eb, double t, double s, double g[4]) {
    const double lower = std::max(ea, eb - s);
    if (!(t > lower)) {
        if (g) std::fill(g, g + 4, 0.0);
        return 0.0;
    }
    const double sum = ba + bb;
    const double c = ba * bb / sum;
    const auto expo = [&](double u) { return std::exp(-ba * (u - ea) - bb * (u + s - eb)); };
    const double el = expo(lower);
    const bool open = std::isinf(t);
    const double et = open ? 0.0 : expo(t);
    const double diff = el - et;
    if (g) {
        const double lead_a = -(lower - ea) * el + (open ? 0.0 : (t - ea) * et);
        const double lead_b = -(lower + s - eb) * el + (open ? 0.0 : (t + s - eb) * et);
        g[0] = bb * bb / (sum * sum) * diff + c * lead_a;
        g[1] = ba * ba / (sum * sum) * diff + c * lead_b;
        const bool a_binds = ea >= eb - s;
        g[2] = c * ((a_binds ? -bb : ba) * el - ba * et);
        g[3] = c * ((a_binds ? bb : -ba) * el - bb * et);
    }
    return c * diff;
}

double exp_like_pair(Family fa, const double* a, Family fb, const double* b, double t, double s, PairOut out) {
    const double ea = fa == Family::delayed_exponential ? a[1] : 0.0;
    const double eb = fb == Family::delayed_exponential ? b[1] : 0.0;
    if (!out.da && !out.db) return shifted_exp_pair(a[0], ea, b[0], eb, t, s, nullptr);
    double g[4];
    const double v = shifted_exp_pair(a[0], ea, b[0], eb, t, s, g);
    if (out.da) {
        out.da[0] = g[0];
        if (fa == Family::delayed_exponential) out.da[1] = g[2];
    }
    if (out.db) {
        out.db[0] = g[1];
        if (fb == Family::delayed_exponential) out.db[1] = g[3];
    }
    return v;
}

// Product of two normal densities is a scaled normal density in u.
double gauss_pair(const double* a, const double* b, double t, double s, PairOut out) {
    const double ba = a[0], da = a[1], bb = b[0], db = b[1];
    const double S = ba * ba + bb * bb;
    const double e = s - db + da;
    const double logA = -0.5 * std::log(2.0 * std::numbers::pi * S) - e * e / (2.0 * S);
    const double A = std::exp(logA);
    const double m = (bb * bb * da + ba * ba * (db - s)) / S;
    const double sd = ba * bb / std::sqrt(S);
    const bool open = std::isinf(t);
    const double h1 = open ? std::numeric_limits<double>::infinity() : (t - m) / sd;
    const double h0 = -m / sd;
    const double P = normal_mass(h0, h1);
    if (!out.da && !out.db) return A * P;

    const double f1 = open ? 0.0 : normal_pdf(h1);
    const double f0 = normal_pdf(h0);
    const double dlogA_dS = -0.5 / S + e * e / (2.0 * S * S);
    const double dlogA_de = -e / S;
    const double S32 = S * std::sqrt(S);

    // Partials for x in (ba, da, bb, db), built from the partials of S, e, m, sd.
    const double dS[4] = {2.0 * ba, 0.0, 2.0 * bb, 0.0};
    const double de[4] = {0.0, 1.0, 0.0, -1.0};
    const double dm[4] = {2.0 * ba * ((db - s) - m) / S, bb * bb / S, 2.0 * bb * (da - m) / S, ba * ba / S};
    const double dsd[4] = {bb * bb * bb / S32, 0.0, ba * ba * ba / S32, 0.0};
    double g[4];
    for (int x = 0; x < 4; ++x) {
        const double dh1 = open ? 0.0 : -dm[x] / sd - (t - m) / (sd * sd) * dsd[x];
        const double dh0 = -dm[x] / sd + m / (sd * sd) * dsd[x];
        const double dP = f1 * dh1 - f0 * dh0;
        g[x] = A * ((dlogA_dS * dS[x] + dlogA_de * de[x]) * P + dP);
    }
    if (out.da) { out.da[0] = g[0]; out.da[1] = g[1]; }
    if (out.db) { out.db[0] = g[2]; out.db[1] = g[3]; }
    return A * P;
}

// Gaussian a (beta, delta) against exponential b (beta').
template <class R>
R gauss_exp_pair_t(const R& beta, const R& delta, const R& rate, double t, double s) {
    using namespace special;
    const R shift = delta - rate * beta * beta;  // mean of the tilted normal
    const R h0 = -shift / beta;
    const R expo = -rate * (delta + s) + rate * rate * beta * beta * 0.5;
    if (value_of(h0) > 0.0) {
        // Upper tail: fold exp(expo) into erfcx to avoid overflow.
        const double r2 = std::numbers::sqrt2;
        const R lead = erfcx_(h0 / r2) * exp_(expo - h0 * h0 * 0.5);
        R tail(0.0);
        if (!std::isinf(t)) {
            const R h1 = (t - shift) / beta;
            tail = erfcx_(h1 / r2) * exp_(expo - h1 * h1 * 0.5);
        }
        return rate * 0.5 * (lead - tail);
    }
    const R h1 = std::isinf(t) ? R(std::numeric_limits<double>::infinity()) : (t - shift) / beta;
    return rate * exp_(expo) * normal_mass_(h0, h1);
}

double gauss_exp_pair(const double* a, const double* b, double t, double s, PairOut out) {
    if (!out.da && !out.db) return gauss_exp_pair_t<double>(a[0], a[1], b[0], t, s);
    using D = Dual<3>;
    const D r = gauss_exp_pair_t<D>(D::variable(a[0], 0), D::variable(a[1], 1), D::variable(b[0], 2), t, s);
    if (out.da) { out.da[0] = r.d[0]; out.da[1] = r.d[1]; }
    if (out.db) out.db[0] = r.d[2];
    return r.v;
}

// Completing the square turns the integrand into a polynomial times a normal density.
template <class R>
R rayleigh_pair_t(const R& a, const R& b, double t, double s) {
    using namespace special;
    const R a2 = a * a, b2 = b * b;
    const R S = a2 + b2;
    const R var = a2 * b2 / S;
    const R sd = sqrt_(var);
    const R centre = -(a2 * s) / S;  // u*
    const R c = b2 * s / S;          // u* + s
    const R w0 = -centre;
    const bool open = std::isinf(t);
    const R e0 = exp_(-(w0 * w0) / (var * 2.0));
    R w1e1(0.0), e1(0.0), mass(0.0);
    if (open) {
        mass = nsf_(w0 / sd);
    } else {
        const R w1 = t - centre;
        e1 = exp_(-(w1 * w1) / (var * 2.0));
        w1e1 = w1 * e1;
        mass = normal_mass_(w0 / sd, w1 / sd);
    }
    const R I0 = sd * (1.0 / inv_sqrt_2pi) * mass;
    const R I1 = var * (e0 - e1);
    const R I2 = var * (w0 * e0 - w1e1) + var * I0;
    return exp_(R(-s * s) / (S * 2.0)) / (a2 * b2) * (I2 + (centre + c) * I1 + centre * c * I0);
}

double rayleigh_pair(const double* a, const double* b, double t, double s, PairOut out) {
    if (!out.da && !out.db) return rayleigh_pair_t<double>(a[0], b[0], t, s);
    using D = Dual<2>;
    const D r = rayleigh_pair_t<D>(D::variable(a[0], 0), D::variable(b[0], 1), t, s);
    if (out.da) out.da[0] = r.d[0];
    if (out.db) out.db[0] = r.d[1];
    return r.v;
}

// Four products of linear pieces, each integrated exactly over its overlap.
template <class R>
R triangle_pair_t(const R* a, const R* b, double t, double s) {
    using namespace special;
    struct Piece {
        R lo, hi, slope, root;
    };
    const R a_peak = a[0] + a[1];
    const R a_end = a_peak + a[2];
    const R b_start = b[0] - s;
    const R b_peak = b_start + b[1];
    const R b_end = b_peak + b[2];
    const Piece pa[2] = {{a[0], a_peak, R(1.0) / a[1], a[0]}, {a_peak, a_end, R(-1.0) / a[2], a_end}};
    const Piece pb[2] = {{b_start, b_peak, R(1.0) / b[1], b_start}, {b_peak, b_end, R(-1.0) / b[2], b_end}};
    R total(0.0);
    for (const auto& p : pa) {
        for (const auto& q : pb) {
            const R x = max_(max_(p.lo, q.lo), R(0.0));
            const R y = std::isinf(t) ? min_(p.hi, q.hi) : min_(min_(p.hi, q.hi), R(t));
            if (!(x < y)) continue;
            const R gap = p.root - q.root;
            const auto G = [&](const R& u) {
                const R w = u - p.root;
                return w * w * w / 3.0 + gap * w * w * 0.5;
            };
            total += p.slope * q.slope * (G(y) - G(x));
        }
    }
    return total;
}

double triangle_pair(const double* a, const double* b, double t, double s, PairOut out) {
    if (!out.da && !out.db) return triangle_pair_t<double>(a, b, t, s);
    using D = Dual<6>;
    const D da[3] = {D::variable(a[0], 0), D::variable(a[1], 1), D::variable(a[2], 2)};
    const D db[3] = {D::variable(b[0], 3), D::variable(b[1], 4), D::variable(b[2], 5)};
    const D r = triangle_pair_t<D>(da, db, t, s);
    if (out.da) std::copy(r.d.begin(), r.d.begin() + 3, out.da);
    if (out.db) std::copy(r.d.begin() + 3, r.d.end(), out.db);
    return r.v;
}

double basis_pair(Family fa, const double* a, Family fb, const double* b, double t, double s, PairOut out) {
    if (t <= 0.0) {
        if (out.da) std::fill(out.da, out.da + basis_size(fa) - 1, 0.0);
        if (out.db) std::fill(out.db, out.db + basis_size(fb) - 1, 0.0);
        return 0.0;
    }
    if (exp_like(fa) && exp_like(fb)) return exp_like_pair(fa, a, fb, b, t, s, out);
    if (fa == Family::gaussian && fb == Family::gaussian) return gauss_pair(a, b, t, s, out);
    if (fa == Family::gaussian && fb == Family::exponential) return gauss_exp_pair(a, b, t, s, out);
    if (fa == Family::rayleigh && fb == Family::rayleigh) return rayleigh_pair(a, b, t, s, out);
    if (fa == Family::triangular && fb == Family::triangular) return triangle_pair(a, b, t, s, out);
    require_upsilon(fa, fb);
    return 0.0;
}

void require_upsilon(Family a, Family b) {
    if (!has_upsilon(a, b))
        throw CapabilityError(std::string("no closed-form cross integral for ") + std::string(to_string(a)) +
                              " x " + std::string(to_string(b)));
}

void check_gradient_size(KernelView k, std::span<double> out) {
    if (out.size() != k.params.size()) throw ArgumentError("gradient buffer has wrong size");
}

void check_view(KernelView k) {
    if (k.params.size() != k.spec.size()) throw ArgumentError("parameter count does not match kernel spec");
}

struct Mixture {
    Family family;
    std::size_t width;
    std::size_t bases;
    const double* p;

    explicit Mixture(KernelView k)
        : family(k.spec.family), width(basis_size(k.spec.family)), bases(k.spec.bases), p(k.params.data()) {
        check_view(k);
    }
    [[nodiscard]] double weight(std::size_t l) const { return p[l * width]; }
    [[nodiscard]] const double* shape(std::size_t l) const { return p + l * width + 1; }
};

}  // namespace

std::span<const Role> basis_roles(Family family) {
    switch (family) {
        case Family::exponential: return exp_roles;
        case Family::delayed_exponential: return delayed_roles;
        case Family::gaussian: return gauss_roles;
        case Family::rayleigh: return rayleigh_roles;
        case Family::triangular: return triangle_roles;
    }
    return exp_roles;
}

std::size_t basis_size(Family family) { return basis_roles(family).size(); }

std::string_view to_string(Family family) {
    switch (family) {
        case Family::exponential: return "exponential";
        case Family::delayed_exponential: return "delayed_exponential";
        case Family::gaussian: return "gaussian";
        case Family::rayleigh: return "rayleigh";
        case Family::triangular: return "triangular";
    }
    return "?";
}

std::string_view to_string(Role role) {
    switch (role) {
        case Role::weight: return "omega";
        case Role::alpha: return "alpha";
        case Role::beta: return "beta";
        case Role::delta: return "delta";
    }
    return "?";
}

Family family_from_string(std::string_view name) {
    for (auto f : {Family::exponential, Family::delayed_exponential, Family::gaussian, Family::rayleigh,
                   Family::triangular})
        if (to_string(f) == name) return f;
    throw ArgumentError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec KernelSpec::make(Family family, std::size_t bases, bool weights_only) {
    if (bases == 0) throw ArgumentError("kernel needs at least one basis");
    KernelSpec spec{family, bases, {}};
    spec.frozen.resize(spec.size(), false);
    const auto roles = basis_roles(family);
    for (std::size_t p = 0; p < spec.size(); ++p) {
        const Role r = roles[p % roles.size()];
        if (r == Role::weight) continue;
        if (weights_only || (family == Family::delayed_exponential && r == Role::delta)) spec.frozen[p] = true;
    }
    return spec;
}

Role KernelSpec::role(std::size_t p) const {
    if (p >= size()) throw ArgumentError("kernel parameter index out of range");
    const auto roles = basis_roles(family);
    return roles[p % roles.size()];
}

void validate(KernelView k) {
    check_view(k);
    if (!k.spec.frozen.empty() && k.spec.frozen.size() != k.spec.size())
        throw ArgumentError("frozen mask has wrong size");
    for (std::size_t p = 0; p < k.params.size(); ++p) {
        const double v = k.params[p];
        const Role r = k.spec.role(p);
        if (!std::isfinite(v)) throw ArgumentError("non-finite kernel parameter");
        const bool ok = [&] {
            switch (r) {
                case Role::weight: return v >= 0.0;
                case Role::beta: return v > 0.0;
                case Role::alpha: return v >= 0.0;
                case Role::delta: return k.spec.family == Family::gaussian ? true
                                         : k.spec.family == Family::triangular ? v > 0.0
                                                                                : v >= 0.0;
            }
            return false;
        }();
        if (!ok)
            throw ArgumentError("invalid " + std::string(to_string(r)) + " = " + std::to_string(v) + " for " +
                                std::string(to_string(k.spec.family)) + " kernel");
    }
}

double phi(KernelView k, double x) {
    const Mixture m(k);
    double total = 0.0;
    for (std::size_t l = 0; l < m.bases; ++l) total += m.weight(l) * basis_phi(m.family, m.shape(l), x);
    return total;
}

double psi(KernelView k, double x) {
    const Mixture m(k);
    double total = 0.0;
    for (std::size_t l = 0; l < m.bases; ++l) total += m.weight(l) * basis_psi(m.family, m.shape(l), x);
    return total;
}

double l1_norm(KernelView k) {
    const Mixture m(k);
    double total = 0.0;
    for (std::size_t l = 0; l < m.bases; ++l) total += m.weight(l) * basis_mass(m.family, m.shape(l));
    return total;
}

double l2_norm_sq(KernelView k) { return upsilon(k, k, std::numeric_limits<double>::infinity(), 0.0); }

void l1_gradient(KernelView k, std::span<double> out) {
    const Mixture m(k);
    check_gradient_size(k, out);
    for (std::size_t l = 0; l < m.bases; ++l) {
        double* g = out.data() + l * m.width;
        g[0] = basis_mass(m.family, m.shape(l));
        basis_mass_shape_grad(m.family, m.shape(l), g + 1);
        for (std::size_t c = 1; c < m.width; ++c) g[c] *= m.weight(l);
    }
}

void phi_gradient(KernelView k, double x, std::span<double> out) {
    const Mixture m(k);
    check_gradient_size(k, out);
    for (std::size_t l = 0; l < m.bases; ++l) {
        double* g = out.data() + l * m.width;
        g[0] = basis_phi(m.family, m.shape(l), x);
        basis_phi_shape_grad(m.family, m.shape(l), x, g + 1);
        for (std::size_t c = 1; c < m.width; ++c) g[c] *= m.weight(l);
    }
}

void psi_gradient(KernelView k, double x, std::span<double> out) {
    const Mixture m(k);
    check_gradient_size(k, out);
    for (std::size_t l = 0; l < m.bases; ++l) {
        double* g = out.data() + l * m.width;
        g[0] = basis_psi(m.family, m.shape(l), x);
        basis_psi_shape_grad(m.family, m.shape(l), x, g + 1);
        for (std::size_t c = 1; c < m.width; ++c) g[c] *= m.weight(l);
    }
}

bool has_upsilon(Family a, Family b) noexcept {
    if (exp_like(a) && exp_like(b)) return true;
    if (a == Family::gaussian) return b == Family::gaussian || b == Family::exponential;
    return a == b && (a == Family::rayleigh || a == Family::triangular);
}

double upsilon(KernelView a, KernelView b, double t, double s) {
    const Mixture ma(a), mb(b);
    require_upsilon(ma.family, mb.family);
    double total = 0.0;
    for (std::size_t l = 0; l < ma.bases; ++l) {
        double row = 0.0;
        for (std::size_t r = 0; r < mb.bases; ++r)
            row += mb.weight(r) * basis_pair(ma.family, ma.shape(l), mb.family, mb.shape(r), t, s, {});
        total += ma.weight(l) * row;
    }
    return total;
}

void upsilon_gradient(KernelView a, KernelView b, double t, double s, std::span<double> grad_a,
                      std::span<double> grad_b) {
    const Mixture ma(a), mb(b);
    require_upsilon(ma.family, mb.family);
    check_gradient_size(a, grad_a);
    check_gradient_size(b, grad_b);
    std::fill(grad_a.begin(), grad_a.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    std::array<double, 4> da{}, db{};
    for (std::size_t l = 0; l < ma.bases; ++l) {
        const double wl = ma.weight(l);
        double* ga = grad_a.data() + l * ma.width;
        for (std::size_t r = 0; r < mb.bases; ++r) {
            const double wr = mb.weight(r);
            double* gb = grad_b.data() + r * mb.width;
            const double u =
                basis_pair(ma.family, ma.shape(l), mb.family, mb.shape(r), t, s, {da.data(), db.data()});
            ga[0] += wr * u;
            gb[0] += wl * u;
            for (std::size_t c = 1; c < ma.width; ++c) ga[c] += wl * wr * da[c - 1];
            for (std::size_t c = 1; c < mb.width; ++c) gb[c] += wl * wr * db[c - 1];
        }
    }
}

void upsilon_gradient_same(KernelView a, double t, double s, std::span<double> grad) {
    check_gradient_size(a, grad);
    std::vector<double> other(grad.size());
    upsilon_gradient(a, a, t, s, grad, other);
    for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += other[p];
}

double phi_tail_sup(KernelView k, double x) {
    const Mixture m(k);
    x = std::max(x, 0.0);
    double total = 0.0;
    for (std::size_t l = 0; l < m.bases; ++l) {
        const double* b = m.shape(l);
        double peak = 0.0;  // location of the basis maximum
        switch (m.family) {
            case Family::exponential: peak = 0.0; break;
            case Family::delayed_exponential: peak = b[1]; break;
            case Family::gaussian: peak = b[1]; break;
            case Family::rayleigh: peak = b[0]; break;
            case Family::triangular: peak = b[0] + b[1]; break;
        }
        total += m.weight(l) * basis_phi(m.family, b, std::max(x, peak));
    }
    return total;
}

double effective_support(KernelView k) {
    const Mixture m(k);
    constexpr double log_tail = 23.1;  // -log(1e-10)
    double end = 0.0;
    for (std::size_t l = 0; l < m.bases; ++l) {
        const double* b = m.shape(l);
        double e = 0.0;
        switch (m.family) {
            case Family::exponential: e = log_tail / b[0]; break;
            case Family::delayed_exponential: e = b[1] + log_tail / b[0]; break;
            case Family::gaussian: e = b[1] + 6.5 * b[0]; break;
            case Family::rayleigh: e = b[0] * std::sqrt(2.0 * log_tail); break;
            case Family::triangular: e = b[0] + b[1] + b[2]; break;
        }
        end = std::max(end, e);
    }
    return end;
}

std::vector<double> kinks(KernelView k) {
    const Mixture m(k);
    std::vector<double> out;
    for (std::size_t l = 0; l < m.bases; ++l) {
        const double* b = m.shape(l);
        if (m.family == Family::delayed_exponential) out.push_back(b[1]);
        if (m.family == Family::triangular) {
            out.push_back(b[0]);
            out.push_back(b[0] + b[1]);
            out.push_back(b[0] + b[1] + b[2]);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double sample_delay(KernelView k, CounterRng& rng) {
    const Mixture m(k);
    const double mass = l1_norm(k);
    if (!(mass > 0.0)) throw ArgumentError("cannot sample from a zero-mass kernel");
    double pick = rng.uniform() * mass;
    std::size_t l = 0;
    for (; l + 1 < m.bases; ++l) {
        const double share = m.weight(l) * basis_mass(m.family, m.shape(l));
        if (pick < share) break;
        pick -= share;
    }
    const double* b = m.shape(l);
    const double u = rng.uniform_open();
    switch (m.family) {
        case Family::exponential: return -std::log(u) / b[0];
        case Family::delayed_exponential: return b[1] - std::log(u) / b[0];
        case Family::gaussian: {
            // Normal truncated to [0, inf), inverted through the upper tail.
            const double tail = special::normal_sf(-b[1] / b[0]);
            const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u * tail);
            return std::max(0.0, b[1] + b[0] * z);
        }
        case Family::rayleigh: return b[0] * std::sqrt(-2.0 * std::log(u));
        case Family::triangular: {
            const double width = b[1] + b[2];
            const double split = b[1] / width;
            if (u < split) return b[0] + std::sqrt(u * width * b[1]);
            return b[0] + width - std::sqrt((1.0 - u) * width * b[2]);
        }
    }
    return 0.0;
}

}  // namespace hawkes
