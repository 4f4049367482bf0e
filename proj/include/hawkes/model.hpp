#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hawkes/kernels.hpp"
#include "hawkes/paths.hpp"

namespace hawkes {

/*
 * Kernel layout of a d-dimensional model. The parameter vector is the
 * concatenation of d rows; row k is [mu_k, params(phi_k0), ..., params(phi_k,d-1)],
 * where phi_ki is the effect of type-i events on the type-k intensity.
 */
class ModelSpec {
public:
    ModelSpec() = default;
    // kernels[k * d + i] describes phi_ki.
    ModelSpec(std::size_t dimension, std::vector<KernelSpec> kernels);
    [[nodiscard]] static ModelSpec uniform(std::size_t dimension, const KernelSpec& kernel);

    [[nodiscard]] std::size_t dimension() const noexcept { return d_; }
    [[nodiscard]] const KernelSpec& kernel(std::size_t k, std::size_t i) const;
    [[nodiscard]] std::size_t row_size(std::size_t k) const;
    [[nodiscard]] std::size_t row_offset(std::size_t k) const;
    // Offset of phi_ki inside row k (the background rate sits at 0).
    [[nodiscard]] std::size_t kernel_offset(std::size_t k, std::size_t i) const;
    [[nodiscard]] std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

    [[nodiscard]] std::span<const double> row(std::span<const double> theta, std::size_t k) const;
    [[nodiscard]] std::span<double> mutable_row(std::span<double> theta, std::size_t k) const;
    [[nodiscard]] KernelView view(std::span<const double> row, std::size_t k, std::size_t i) const;

    [[nodiscard]] bool is_frozen(std::size_t k, std::size_t p) const;
    // Lower bound of each row entry used for projection.
    [[nodiscard]] std::vector<double> row_floor(std::size_t k, double epsilon) const;

    void validate_row(std::span<const double> row, std::size_t k) const;
    void validate(std::span<const double> theta) const;
    // Throws CapabilityError when a cross integral needed by row k has no closed form.
    void require_supported(std::size_t k) const;

private:
    std::size_t d_{0};
    std::vector<KernelSpec> kernels_;
    std::vector<std::size_t> offsets_;         // row starts, size d + 1
    std::vector<std::size_t> kernel_offsets_;  // k * d + i
};

// Left-continuous intensity of type k at t (events at exactly t excluded).
[[nodiscard]] double intensity(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                               std::size_t k, double t);

// Integrated intensity of type k over [0, t].
[[nodiscard]] double compensator(const EventPath& path, const ModelSpec& model, std::span<const double> row,
                                 std::size_t k, double t);

}  // namespace hawkes
