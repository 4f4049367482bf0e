#include "hawkes/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hawkes/errors.hpp"

namespace hawkes {

ModelSpec::ModelSpec(std::size_t dimension, std::vector<KernelSpec> kernels)
    : d_(dimension), kernels_(std::move(kernels)) {
    if (d_ == 0) throw ArgumentError("model dimension must be positive");
    if (kernels_.size() != d_ * d_) throw ArgumentError("model needs d * d kernel specs");
    offsets_.assign(d_ + 1, 0);
    kernel_offsets_.assign(d_ * d_, 0);
    for (std::size_t k = 0; k < d_; ++k) {
        std::size_t within = 1;
        for (std::size_t i = 0; i < d_; ++i) {
            auto& spec = kernels_[k * d_ + i];
            if (spec.bases == 0) throw ArgumentError("kernel needs at least one basis");
            if (spec.frozen.empty()) spec.frozen.assign(spec.size(), false);
            if (spec.frozen.size() != spec.size()) throw ArgumentError("frozen mask has wrong size");
            kernel_offsets_[k * d_ + i] = within;
            within += spec.size();
        }
        offsets_[k + 1] = offsets_[k] + within;
    }
}

ModelSpec ModelSpec::uniform(std::size_t dimension, const KernelSpec& kernel) {
    return ModelSpec(dimension, std::vector<KernelSpec>(dimension * dimension, kernel));
}

const KernelSpec& ModelSpec::kernel(std::size_t k, std::size_t i) const {
    if (k >= d_ || i >= d_) throw ArgumentError("kernel index out of range");
    return kernels_[k * d_ + i];
}

std::size_t ModelSpec::row_size(std::size_t k) const {
    if (k >= d_) throw ArgumentError("row index out of range");
    return offsets_[k + 1] - offsets_[k];
}

std::size_t ModelSpec::row_offset(std::size_t k) const {
    if (k >= d_) throw ArgumentError("row index out of range");
    return offsets_[k];
}

std::size_t ModelSpec::kernel_offset(std::size_t k, std::size_t i) const {
    if (k >= d_ || i >= d_) throw ArgumentError("kernel index out of range");
    return kernel_offsets_[k * d_ + i];
}

std::span<const double> ModelSpec::row(std::span<const double> theta, std::size_t k) const {
    if (theta.size() != size()) throw ArgumentError("parameter vector has wrong size");
    return theta.subspan(row_offset(k), row_size(k));
}

std::span<double> ModelSpec::mutable_row(std::span<double> theta, std::size_t k) const {
    if (theta.size() != size()) throw ArgumentError("parameter vector has wrong size");
    return theta.subspan(row_offset(k), row_size(k));
}

KernelView ModelSpec::view(std::span<const double> row, std::size_t k, std::size_t i) const {
    if (row.size() != row_size(k)) throw ArgumentError("row has wrong size");
    const auto& spec = kernel(k, i);
    return {spec, row.subspan(kernel_offset(k, i), spec.size())};
}

bool ModelSpec::is_frozen(std::size_t k, std::size_t p) const {
    if (p == 0) return false;
    for (std::size_t i = 0; i < d_; ++i) {
        const std::size_t start = kernel_offset(k, i);
        const auto& spec = kernel(k, i);
        if (p < start + spec.size()) return spec.is_frozen(p - start);
    }
    throw ArgumentError("row parameter index out of range");
}

std::vector<double> ModelSpec::row_floor(std::size_t k, double epsilon) const {
    std::vector<double> floor(row_size(k), epsilon);
    for (std::size_t i = 0; i < d_; ++i) {
        const auto& spec = kernel(k, i);
        for (std::size_t p = 0; p < spec.size(); ++p) {
            double& f = floor[kernel_offset(k, i) + p];
            switch (spec.role(p)) {
                case Role::weight:
                case Role::beta: f = epsilon; break;
                case Role::alpha: f = 0.0; break;
                case Role::delta:
                    f = spec.family == Family::gaussian ? -std::numeric_limits<double>::infinity()
                        : spec.family == Family::triangular ? epsilon
                                                            : 0.0;
                    break;
            }
        }
    }
    return floor;
}

void ModelSpec::validate_row(std::span<const double> row, std::size_t k) const {
    if (row.size() != row_size(k)) throw ArgumentError("row " + std::to_string(k) + " has wrong size");
    if (!std::isfinite(row[0]) || row[0] < 0.0)
        throw ArgumentError("background rate of dimension " + std::to_string(k) + " must be non-negative");
    for (std::size_t i = 0; i < d_; ++i) hawkes::validate(view(row, k, i));
}

void ModelSpec::validate(std::span<const double> theta) const {
    for (std::size_t k = 0; k < d_; ++k) validate_row(row(theta, k), k);
}

void ModelSpec::require_supported(std::size_t k) const {
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) {
            const Family a = kernel(k, i).family;
            const Family b = kernel(k, j).family;
            if (!has_upsilon(a, b))
                throw CapabilityError("row " + std::to_string(k) + " pairs a " + std::string(to_string(a)) +
                                      " kernel with a " + std::string(to_string(b)) +
                                      " kernel; their cross integral has no closed form");
        }
}

double intensity(const EventPath& path, const ModelSpec& model, std::span<const double> row, std::size_t k,
                 double t) {
    double lambda = row[0];
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const auto view = model.view(row, k, i);
        const auto ti = path.times(i);
        const auto end = std::lower_bound(ti.begin(), ti.end(), t);
        for (auto it = ti.begin(); it != end; ++it) lambda += phi(view, t - *it);
    }
    return lambda;
}

double compensator(const EventPath& path, const ModelSpec& model, std::span<const double> row, std::size_t k,
                   double t) {
    double total = row[0] * t;
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const auto view = model.view(row, k, i);
        const auto ti = path.times(i);
        const auto end = std::lower_bound(ti.begin(), ti.end(), t);
        for (auto it = ti.begin(); it != end; ++it) total += psi(view, t - *it);
    }
    return total;
}

}  // namespace hawkes
