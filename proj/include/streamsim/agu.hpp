#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamsim/design.hpp"
#include "streamsim/error.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

/// Runtime N-D affine descriptor for one stream. Temporal dimension 0 is the
/// innermost (fastest-varying) loop. Spatial strides are indexed by the
/// design-time spatial dims, dimension 0 outermost.
struct AccessPattern {
    Addr base = 0;
    std::vector<std::uint64_t> temporal_bounds;   // B_t
    std::vector<std::int64_t> temporal_strides;   // S_t, byte offsets
    std::vector<std::int64_t> spatial_strides;    // S_s, byte offsets

    std::uint64_t total_steps() const {
        std::uint64_t n = 1;
        for (auto b : temporal_bounds) n *= b;
        return n;
    }
};

/// Live counters of the dual-counter temporal generator: a loop-index counter
/// and a stride accumulator per dimension. Invariant after every advance:
/// stride_accumulators[d] == bound_counters[d] * temporal_strides[d].
struct AguState {
    std::vector<std::uint64_t> bound_counters;
    std::vector<std::int64_t> stride_accumulators;
    bool exhausted = false;
};

namespace detail {

/// Spatial offsets enumerated in row-major order, dimension 0 outermost.
inline std::vector<std::int64_t> enumerate_spatial_offsets(
    const std::vector<std::uint64_t>& bounds, const std::vector<std::int64_t>& strides) {
    std::uint64_t count = 1;
    for (auto b : bounds) count *= b;
    std::vector<std::int64_t> offsets;
    offsets.reserve(count);
    std::vector<std::uint64_t> idx(bounds.size(), 0);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::int64_t off = 0;
        for (std::size_t d = 0; d < bounds.size(); ++d)
            off += static_cast<std::int64_t>(idx[d]) * strides[d];
        offsets.push_back(off);
        for (std::size_t d = bounds.size(); d-- > 0;) {
            if (++idx[d] < bounds[d]) break;
            idx[d] = 0;
        }
    }
    return offsets;
}

}  // namespace detail

/// Address generation unit for one stream: produces the temporal address
/// sequence incrementally and carries the per-step spatial offset set.
class Agu {
public:
    Agu() = default;

    /// Validates the pattern against the design limits and the memory fit
    /// invariant, then returns a generator positioned at the first step.
    Agu(const AccessPattern& pattern, const DseDesign& design, std::uint64_t memory_bytes) {
        if (pattern.temporal_bounds.size() != pattern.temporal_strides.size())
            raise(ErrKind::DimensionMismatch, "temporal bounds/strides length mismatch");
        if (pattern.temporal_bounds.size() > design.max_temporal_dims)
            raise(ErrKind::DimensionOverflow,
                  std::to_string(pattern.temporal_bounds.size()) + " temporal dims on a " +
                      std::to_string(design.max_temporal_dims) + "-dim design");
        if (pattern.spatial_strides.size() != design.spatial_bounds.size())
            raise(ErrKind::DimensionMismatch, "spatial stride count != design spatial dims");
        for (auto b : pattern.temporal_bounds)
            if (b < 1) raise(ErrKind::InvalidBound, "temporal bound < 1");

        // Memory-fit check in closed form: every dimension contributes its
        // extreme offset independently. Each spatial point reads
        // design.gather_bytes() bytes.
        std::int64_t lo = static_cast<std::int64_t>(pattern.base);
        std::int64_t hi = lo;
        for (std::size_t d = 0; d < pattern.temporal_bounds.size(); ++d) {
            const std::int64_t span =
                static_cast<std::int64_t>(pattern.temporal_bounds[d] - 1) *
                pattern.temporal_strides[d];
            if (span < 0) lo += span; else hi += span;
        }
        for (std::size_t s = 0; s < pattern.spatial_strides.size(); ++s) {
            const std::int64_t span =
                static_cast<std::int64_t>(design.spatial_bounds[s] - 1) *
                pattern.spatial_strides[s];
            if (span < 0) lo += span; else hi += span;
        }
        const std::int64_t tail = static_cast<std::int64_t>(design.gather_bytes());
        if (lo < 0 || static_cast<std::uint64_t>(hi) + tail > memory_bytes)
            raise(ErrKind::AddressOutOfRange,
                  "pattern reaches [" + std::to_string(lo) + ", " + std::to_string(hi + tail) +
                      ") outside memory of " + std::to_string(memory_bytes) + " bytes");

        pattern_ = pattern;
        state_.bound_counters.assign(pattern.temporal_bounds.size(), 0);
        state_.stride_accumulators.assign(pattern.temporal_bounds.size(), 0);
        state_.exhausted = false;
        spatial_offsets_ =
            detail::enumerate_spatial_offsets(design.spatial_bounds, pattern.spatial_strides);
        configured_ = true;
    }

    bool configured() const { return configured_; }
    bool exhausted() const { return !configured_ || state_.exhausted; }
    const AguState& state() const { return state_; }
    const AccessPattern& pattern() const { return pattern_; }
    const std::vector<std::int64_t>& spatial_offsets() const { return spatial_offsets_; }

    /// Yields the current temporal address and advances the counters;
    /// std::nullopt once the nest is exhausted.
    std::optional<Addr> next() {
        if (!configured_) raise(ErrKind::NotConfigured, "next() before configure");
        if (state_.exhausted) return std::nullopt;
        std::int64_t addr = static_cast<std::int64_t>(pattern_.base);
        for (auto acc : state_.stride_accumulators) addr += acc;
        advance();
        return static_cast<Addr>(addr);
    }

private:
    void advance() {
        // Dimension 0 is the innermost loop; carry ripples outward.
        for (std::size_t d = 0; d < state_.bound_counters.size(); ++d) {
            if (++state_.bound_counters[d] < pattern_.temporal_bounds[d]) {
                state_.stride_accumulators[d] += pattern_.temporal_strides[d];
                return;
            }
            state_.bound_counters[d] = 0;
            state_.stride_accumulators[d] = 0;
        }
        state_.exhausted = true;
    }

    AccessPattern pattern_;
    AguState state_;
    std::vector<std::int64_t> spatial_offsets_;
    bool configured_ = false;
};

inline Agu configure(const AccessPattern& pattern, const DseDesign& design,
                     std::uint64_t memory_bytes) {
    return Agu(pattern, design, memory_bytes);
}

/// Closed-form counterpart of repeated next(): decomposes the iteration index
/// by mixed-radix division (dimension 0 fastest) and evaluates the affine
/// sum directly. Oracle for the incremental path.
inline std::pair<Addr, std::vector<std::int64_t>> address_at(const AccessPattern& pattern,
                                                             const DseDesign& design,
                                                             std::uint64_t t) {
    const std::uint64_t total = pattern.total_steps();
    if (t >= total)
        raise(ErrKind::IndexOutOfRange,
              "iteration " + std::to_string(t) + " of " + std::to_string(total));
    std::int64_t addr = static_cast<std::int64_t>(pattern.base);
    std::uint64_t rem = t;
    for (std::size_t d = 0; d < pattern.temporal_bounds.size(); ++d) {
        const std::uint64_t idx = rem % pattern.temporal_bounds[d];
        rem /= pattern.temporal_bounds[d];
        addr += static_cast<std::int64_t>(idx) * pattern.temporal_strides[d];
    }
    return {static_cast<Addr>(addr),
            detail::enumerate_spatial_offsets(design.spatial_bounds, pattern.spatial_strides)};
}

}  // namespace streamsim
