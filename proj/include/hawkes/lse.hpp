#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hawkes/model.hpp"
#include "hawkes/paths.hpp"

namespace hawkes {

/*
 * Least-squares contrast
 *   R(theta) = (1/T) sum_k int_0^T lambda_k(t)^2 dt - (2/T) sum_k sum_m lambda_k(t^k_m),
 * which splits into independent per-dimension terms R^(k) depending only on row k.
 */

enum class Quadrature { gauss_kronrod, adaptive_simpson };

// Reference value by numerical integration of lambda^2 between events. Paths above
// 10^4 events are rejected.
[[nodiscard]] double lse_exact_row(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                   std::size_t k, Quadrature scheme = Quadrature::gauss_kronrod);
[[nodiscard]] double lse_exact(const EventPath& path, const ModelSpec& model, std::span<const double> theta,
                               Quadrature scheme = Quadrature::gauss_kronrod);

// Same quantity through the closed-form sums over events and event pairs.
[[nodiscard]] double lse_decomposed_row(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                        std::size_t k);
[[nodiscard]] double lse_decomposed(const EventPath& path, const ModelSpec& model, std::span<const double> theta);

// Exact gradient of R^(k) with respect to row k, frozen entries included.
[[nodiscard]] std::vector<double> lse_gradient_row(const EventPath& path, const ModelSpec& model,
                                                   std::span<const double> row, std::size_t k);

}  // namespace hawkes
