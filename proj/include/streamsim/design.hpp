#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "streamsim/error.hpp"
#include "streamsim/ext.hpp"

namespace streamsim {

enum class DseMode : std::uint8_t { Read, Write };

/// Design-time shape of one data streaming engine: channel count, spatial
/// loop geometry, buffer depths and the datapath-extension chain. Runtime
/// parameters (base address, bounds, strides, addressing mode) live in
/// AccessPattern / StreamConfig.
struct DseDesign {
    DseMode mode = DseMode::Read;
    std::uint32_t num_channels = 8;               // N_C
    std::vector<std::uint64_t> spatial_bounds;    // B_s, one entry per spatial dim
    std::uint32_t max_temporal_dims = 6;          // D_t
    std::uint32_t address_buffer_depth = 4;       // D_ABf
    std::uint32_t data_buffer_depth = 8;          // D_DBf
    std::uint32_t bank_width_bits = 64;           // W_B
    std::vector<ExtKind> extensions;              // design-time chain, in order

    std::uint32_t num_spatial_dims() const {
        return static_cast<std::uint32_t>(spatial_bounds.size());
    }

    std::uint32_t lane_bytes() const { return bank_width_bits / 8; }

    std::uint64_t spatial_points() const {
        std::uint64_t p = 1;
        for (auto b : spatial_bounds) p *= b;
        return p;
    }

    /// Sub-fetches per lane: the spatial loop nest addresses spatial_points()
    /// byte groups per temporal step; each lane is assembled from
    /// gather_factor() of them, gather_bytes() bytes each. 1 for the common
    /// word-per-channel wiring.
    std::uint32_t gather_factor() const {
        return static_cast<std::uint32_t>(spatial_points() / num_channels);
    }

    std::uint32_t gather_bytes() const { return lane_bytes() / gather_factor(); }

    void validate() const {
        if (num_channels == 0) raise(ErrKind::InvalidBound, "num_channels == 0");
        if (bank_width_bits < 8 || (bank_width_bits & (bank_width_bits - 1)) != 0)
            raise(ErrKind::InvalidBound, "bank_width_bits must be a power of two >= 8");
        if (address_buffer_depth < 1) raise(ErrKind::InvalidBound, "address_buffer_depth < 1");
        if (data_buffer_depth < 1) raise(ErrKind::InvalidBound, "data_buffer_depth < 1");
        for (auto b : spatial_bounds)
            if (b < 1) raise(ErrKind::InvalidBound, "spatial bound < 1");
        const std::uint64_t points = spatial_points();
        if (points % num_channels != 0)
            raise(ErrKind::ShapeMismatch, "spatial points not a multiple of channel count");
        const std::uint64_t r = points / num_channels;
        if (r == 0 || lane_bytes() % r != 0)
            raise(ErrKind::ShapeMismatch, "spatial unroll does not tile the wide word");
        if (mode == DseMode::Write && r != 1)
            raise(ErrKind::ShapeMismatch, "write engines require one word per channel");
    }
};

}  // namespace streamsim
