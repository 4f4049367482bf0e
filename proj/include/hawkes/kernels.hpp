#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hawkes/rng.hpp"

namespace hawkes {

/*
 * Every kernel is a mixture of r bases with non-negative weights. Parameters
 * are stored basis-major: [basis 0 params, basis 1 params, ...] with the
 * per-basis order given by basis_roles().
 *
 *   exponential          (weight, beta):          w b exp(-b x)
 *   delayed_exponential  (weight, beta, delta):   w b exp(-b (x - d)) for x >= d
 *   gaussian             (weight, beta, delta):   w N(x; d, b^2)
 *   rayleigh             (weight, beta):          w x / b^2 exp(-x^2 / (2 b^2))
 *   triangular           (weight, alpha, beta, delta): height-w triangle rising
 *                         on [a, a + b) and falling on [a + b, a + b + d)
 */
enum class Family { exponential, delayed_exponential, gaussian, rayleigh, triangular };
enum class Role { weight, alpha, beta, delta };

[[nodiscard]] std::span<const Role> basis_roles(Family family);
[[nodiscard]] std::size_t basis_size(Family family);
[[nodiscard]] std::string_view to_string(Family family);
[[nodiscard]] std::string_view to_string(Role role);
// Throws ArgumentError on unknown names.
[[nodiscard]] Family family_from_string(std::string_view name);

struct KernelSpec {
    Family family{Family::exponential};
    std::size_t bases{1};
    // One flag per parameter; frozen parameters keep their initial value during fitting.
    std::vector<bool> frozen;

    // Delays of delayed exponentials start frozen; weights_only freezes every shape parameter.
    [[nodiscard]] static KernelSpec make(Family family, std::size_t bases = 1, bool weights_only = false);

    [[nodiscard]] std::size_t size() const noexcept { return bases * basis_size(family); }
    [[nodiscard]] Role role(std::size_t p) const;
    [[nodiscard]] bool is_frozen(std::size_t p) const { return !frozen.empty() && frozen.at(p); }
};

struct KernelView {
    const KernelSpec& spec;
    std::span<const double> params;
};

// Rejects negative weights, non-positive scales and non-finite values.
void validate(KernelView k);

[[nodiscard]] double phi(KernelView k, double x);
[[nodiscard]] double psi(KernelView k, double x);  // integral of phi over [0, x]
[[nodiscard]] double l1_norm(KernelView k);
[[nodiscard]] double l2_norm_sq(KernelView k);

// out has k.params.size() entries; overwritten.
void l1_gradient(KernelView k, std::span<double> out);
void phi_gradient(KernelView k, double x, std::span<double> out);
void psi_gradient(KernelView k, double x, std::span<double> out);

// Whether the cross integral below has a closed form for (a, b).
[[nodiscard]] bool has_upsilon(Family a, Family b) noexcept;

// Integral over [0, t] of a(u) b(u + s). Throws CapabilityError when unsupported.
[[nodiscard]] double upsilon(KernelView a, KernelView b, double t, double s);

// Partials with respect to a's and b's parameters (overwritten), treating them as distinct.
void upsilon_gradient(KernelView a, KernelView b, double t, double s, std::span<double> grad_a,
                      std::span<double> grad_b);

// Same kernel in both slots: total derivative.
void upsilon_gradient_same(KernelView a, double t, double s, std::span<double> grad);

// sup of phi over [x, inf).
[[nodiscard]] double phi_tail_sup(KernelView k, double x);

// Point past which every basis has negligible mass (1e-10).
[[nodiscard]] double effective_support(KernelView k);

// Points where phi is not differentiable.
[[nodiscard]] std::vector<double> kinks(KernelView k);

// Draw from phi / l1_norm(phi). Requires positive mass.
[[nodiscard]] double sample_delay(KernelView k, CounterRng& rng);

}  // namespace hawkes
