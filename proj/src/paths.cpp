#include "hawkes/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "hawkes/errors.hpp"

namespace hawkes {

LagIndex::LagIndex(std::span<const double> times_i, std::span<const double> times_j, double horizon)
    : times_i_(times_i), times_j_(times_j), horizon_(horizon) {
    if (times_i.size() >= std::numeric_limits<std::uint32_t>::max() ||
        times_j.size() >= std::numeric_limits<std::uint32_t>::max())
        throw ArgumentError("path too long for 32-bit event indices");

    preceding_.resize(times_i.size());
    std::size_t n = 0;
    for (std::size_t m = 0; m < times_i.size(); ++m) {
        while (n < times_j.size() && times_j[n] < times_i[m]) ++n;
        preceding_[m] = static_cast<std::uint32_t>(n);
    }

    const std::size_t top = preceding_.empty() ? 0 : preceding_.back();
    first_index_.resize(top);
    cumulative_.assign(top + 1, 0);
    std::size_t m = 0;
    for (std::size_t h = 1; h <= top; ++h) {
        while (preceding_[m] < h) ++m;
        first_index_[h - 1] = static_cast<std::uint32_t>(m + 1);
        cumulative_[h] = cumulative_[h - 1] + (times_i.size() - m);
    }
}

std::size_t LagIndex::first_index(std::size_t h) const noexcept {
    if (h == 0) return 1;
    if (h > max_lag()) return times_i_.size() + 1;
    return first_index_[h - 1];
}

std::size_t LagIndex::set_size(std::size_t h) const noexcept {
    if (h == 0 || h > max_lag()) return 0;
    return static_cast<std::size_t>(cumulative_[h] - cumulative_[h - 1]);
}

std::uint64_t LagIndex::group_size(std::size_t first_lag, std::size_t last_lag) const noexcept {
    first_lag = std::max<std::size_t>(first_lag, 1);
    last_lag = std::min(last_lag, max_lag());
    if (first_lag > last_lag) return 0;
    return cumulative_[last_lag] - cumulative_[first_lag - 1];
}

LagPair LagIndex::pair(std::size_t h, std::size_t slot) const {
    if (slot == 0 || slot > set_size(h))
        throw RangeError("lag slot " + std::to_string(slot) + " outside lag set " + std::to_string(h));
    const std::size_t m = first_index_[h - 1] + slot - 1;
    const std::size_t n = preceding_[m - 1] - h + 1;
    const double tm = times_i_[m - 1];
    return {horizon_ - tm, tm - times_j_[n - 1]};
}

LagPair LagIndex::pair_in_group(std::size_t first_lag, std::uint64_t position) const {
    const std::uint64_t flat = cumulative_[first_lag - 1] + position;
    const auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(first_lag),
                                     cumulative_.end(), flat);
    if (it == cumulative_.end()) throw RangeError("lag group position out of range");
    const auto h = static_cast<std::size_t>(it - cumulative_.begin());
    const std::size_t m = first_index_[h - 1] + static_cast<std::size_t>(flat - cumulative_[h - 1]);
    const std::size_t n = preceding_[m - 1] - h + 1;
    const double tm = times_i_[m - 1];
    return {horizon_ - tm, tm - times_j_[n - 1]};
}

struct EventPath::Cache {
    explicit Cache(std::size_t d) : flags(d * d), indexes(d * d) {}
    std::vector<std::once_flag> flags;
    std::vector<std::unique_ptr<LagIndex>> indexes;
};

EventPath::EventPath(std::vector<std::vector<double>> times, double horizon) : horizon_(horizon) {
    if (times.empty()) throw ArgumentError("event path needs at least one dimension");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("horizon must be positive and finite");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto& ti = times[i];
        for (std::size_t m = 0; m < ti.size(); ++m) {
            if (!std::isfinite(ti[m]) || ti[m] <= 0.0 || ti[m] > horizon)
                throw ArgumentError("event " + std::to_string(m + 1) + " of dimension " + std::to_string(i) +
                                    " outside (0, T]");
            if (m > 0 && !(ti[m - 1] < ti[m]))
                throw ArgumentError("event times of dimension " + std::to_string(i) +
                                    " are not strictly increasing at index " + std::to_string(m + 1));
        }
    }
    cache_ = std::make_shared<Cache>(times.size());
    times_ = std::make_shared<const std::vector<std::vector<double>>>(std::move(times));
}

void EventPath::check_dim(std::size_t i) const {
    if (i >= dimension())
        throw ArgumentError("dimension index " + std::to_string(i) + " out of range");
}

std::span<const double> EventPath::times(std::size_t i) const {
    check_dim(i);
    return (*times_)[i];
}

std::size_t EventPath::total_count() const noexcept {
    std::size_t total = 0;
    if (times_)
        for (const auto& t : *times_) total += t.size();
    return total;
}

std::size_t EventPath::kappa(std::size_t i, std::size_t j, std::size_t n) const {
    check_dim(i);
    const auto tj = times(j);
    if (n == 0 || n > tj.size()) throw ArgumentError("event index " + std::to_string(n) + " out of range");
    const auto ti = times(i);
    return static_cast<std::size_t>(std::lower_bound(ti.begin(), ti.end(), tj[n - 1]) - ti.begin());
}

std::size_t EventPath::varpi(std::size_t i, std::size_t j, std::size_t h) const {
    const auto ti = times(i);
    const auto tj = times(j);
    if (h == 0) throw ArgumentError("lag must be positive");
    if (h > tj.size()) return ti.size() + 1;
    // kappa(j, i, p) >= h  <=>  t^i_p > t^j_h
    return static_cast<std::size_t>(std::upper_bound(ti.begin(), ti.end(), tj[h - 1]) - ti.begin()) + 1;
}

std::size_t EventPath::lag_set_size(std::size_t i, std::size_t j, std::size_t h) const {
    return count(i) + 1 - varpi(i, j, h);
}

LagPair EventPath::lag_pair(std::size_t i, std::size_t j, std::size_t h, std::size_t slot) const {
    const std::size_t size = lag_set_size(i, j, h);
    if (size == 0) throw RangeError("empty lag set");
    if (slot == 0 || slot > size) throw RangeError("lag slot out of range");
    const auto ti = times(i);
    const auto tj = times(j);
    const std::size_t m = varpi(i, j, h) + slot - 1;
    const std::size_t n = kappa(j, i, m) - h + 1;
    return {horizon_ - ti[m - 1], ti[m - 1] - tj[n - 1]};
}

bool EventPath::is_nontrivial() const {
    try {
        require_nontrivial();
    } catch (const PreconditionError&) {
        return false;
    }
    return true;
}

void EventPath::require_nontrivial() const {
    const std::size_t d = dimension();
    if (d == 0) throw PreconditionError("empty path");
    for (std::size_t i = 0; i < d; ++i)
        if (count(i) < 2)
            throw PreconditionError("dimension " + std::to_string(i) + " has fewer than two events");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (varpi(i, j, 1) >= count(i))
                throw PreconditionError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") has fewer than two type-" + std::to_string(i) +
                                        " events after the first type-" + std::to_string(j) + " event");
}

const LagIndex& EventPath::lag_index(std::size_t i, std::size_t j) const {
    check_dim(i);
    check_dim(j);
    const std::size_t slot = i * dimension() + j;
    std::call_once(cache_->flags[slot], [&] {
        cache_->indexes[slot] = std::make_unique<LagIndex>(times(i), times(j), horizon_);
    });
    return *cache_->indexes[slot];
}

void EventPath::prepare() const {
    for (std::size_t i = 0; i < dimension(); ++i)
        for (std::size_t j = 0; j < dimension(); ++j) (void)lag_index(i, j);
}

EventPath EventPath::truncated(double horizon) const {
    if (!(horizon > 0.0) || horizon > horizon_) throw ArgumentError("truncation horizon outside (0, T]");
    std::vector<std::vector<double>> out(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
        const auto ti = times(i);
        out[i].assign(ti.begin(), std::upper_bound(ti.begin(), ti.end(), horizon));
    }
    return EventPath(std::move(out), horizon);
}

}  // namespace hawkes
