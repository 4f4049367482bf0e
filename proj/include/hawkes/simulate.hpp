#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hawkes/model.hpp"
#include "hawkes/paths.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

// Matrix of kernel masses, entry (k, i) = l1 norm of phi_ki.
[[nodiscard]] Eigen::MatrixXd branching_matrix(const ModelSpec& model, std::span<const double> theta);
[[nodiscard]] double spectral_radius(const ModelSpec& model, std::span<const double> theta);
// Throws PreconditionError unless the spectral radius is below one.
void require_stable(const ModelSpec& model, std::span<const double> theta);

// Offspring bookkeeping of one cluster simulation.
struct ClusterStats {
    std::vector<std::uint64_t> parents;   // per type: events inside the window
    std::vector<std::uint64_t> children;  // k * d + j: type-k children of type-j parents, before truncation
};

/*
 * Exact simulation on (0, T] through the branching representation:
 * Poisson immigrants per type, then Poisson(||phi_kj||) children of type k
 * per type-j event, delayed by draws from the normalised kernel. Children
 * past T are dropped along with their descendants.
 */
[[nodiscard]] EventPath simulate_cluster(const ModelSpec& model, std::span<const double> theta, double horizon,
                                         CounterRng& rng, ClusterStats* stats = nullptr);

/*
 * Ogata thinning. The bound on the total intensity after the last event is
 * sum_k mu_k + sum of the kernel tail suprema, which holds until the next
 * accepted event. O(N^2).
 */
[[nodiscard]] EventPath simulate_thinning(const ModelSpec& model, std::span<const double> theta, double horizon,
                                          CounterRng& rng);

}  // namespace hawkes
