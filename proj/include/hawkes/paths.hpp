#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace hawkes {

// Event indices m, n are 1-based throughout (a count of events up to and
// including the indexed one); dimension indices i, j are 0-based.

struct LagPair {
    double time_to_horizon;  // T - t^i_m
    double time_difference;  // t^i_m - t^j_n
};

/*
 * Precomputed lag structure for an ordered pair (i, j): for every type-i event
 * the number of type-j events strictly before it, the first type-i index of
 * each lag set and cumulative lag-set sizes. Built once per path in O(N^i + N^j).
 */
class LagIndex {
public:
    LagIndex(std::span<const double> times_i, std::span<const double> times_j, double horizon);

    // Largest lag h with a non-empty lag set (0 when every set is empty).
    [[nodiscard]] std::size_t max_lag() const noexcept { return first_index_.size(); }

    // Number of type-j events strictly before t^i_m.
    [[nodiscard]] std::size_t preceding(std::size_t m) const { return preceding_[m - 1]; }

    // First type-i index whose lag set at h is non-empty; N^i + 1 if none.
    [[nodiscard]] std::size_t first_index(std::size_t h) const noexcept;
    [[nodiscard]] std::size_t set_size(std::size_t h) const noexcept;

    // Total size of lag sets first_lag..last_lag (inclusive, clamped to max_lag()).
    [[nodiscard]] std::uint64_t group_size(std::size_t first_lag, std::size_t last_lag) const noexcept;
    [[nodiscard]] std::uint64_t total_pairs() const noexcept { return cumulative_.back(); }

    // slot is 1-based within the lag set.
    [[nodiscard]] LagPair pair(std::size_t h, std::size_t slot) const;

    // Flat position (0-based) inside the group starting at first_lag.
    [[nodiscard]] LagPair pair_in_group(std::size_t first_lag, std::uint64_t position) const;

private:
    std::span<const double> times_i_;
    std::span<const double> times_j_;
    double horizon_;
    std::vector<std::uint32_t> preceding_;    // indexed by m - 1
    std::vector<std::uint32_t> first_index_;  // indexed by h - 1
    std::vector<std::uint64_t> cumulative_;   // cumulative_[h] = sum of sizes up to h
};

/*
 * Immutable multivariate event sequence on (0, T]. Copies share lazily built
 * lag indexes; building is thread-safe.
 */
class EventPath {
public:
    EventPath() = default;
    EventPath(std::vector<std::vector<double>> times, double horizon);

    [[nodiscard]] std::size_t dimension() const noexcept { return times_ ? times_->size() : 0; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::span<const double> times(std::size_t i) const;
    [[nodiscard]] std::size_t count(std::size_t i) const { return times(i).size(); }
    [[nodiscard]] std::size_t total_count() const noexcept;
    [[nodiscard]] double event_rate(std::size_t i) const { return static_cast<double>(count(i)) / horizon_; }

    // Number of type-i events strictly before t^j_n (0 when none).
    [[nodiscard]] std::size_t kappa(std::size_t i, std::size_t j, std::size_t n) const;
    // Smallest type-i index p with kappa(j, i, p) >= h; N^i + 1 when none.
    [[nodiscard]] std::size_t varpi(std::size_t i, std::size_t j, std::size_t h) const;
    [[nodiscard]] std::size_t lag_set_size(std::size_t i, std::size_t j, std::size_t h) const;
    [[nodiscard]] LagPair lag_pair(std::size_t i, std::size_t j, std::size_t h, std::size_t slot) const;

    // Every N^i > 1 and every ordered pair has a non-empty first lag set.
    [[nodiscard]] bool is_nontrivial() const;
    // Throws PreconditionError naming the failing pair.
    void require_nontrivial() const;

    [[nodiscard]] const LagIndex& lag_index(std::size_t i, std::size_t j) const;
    // Builds every lag index eagerly.
    void prepare() const;

    // Events with t <= horizon; horizon must not exceed the current one.
    [[nodiscard]] EventPath truncated(double horizon) const;

private:
    struct Cache;

    void check_dim(std::size_t i) const;

    std::shared_ptr<const std::vector<std::vector<double>>> times_;
    double horizon_{0.0};
    std::shared_ptr<Cache> cache_;
};

}  // namespace hawkes
