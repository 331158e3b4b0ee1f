#pragma once

#include <cstdint>

#include "streamsim/accel.hpp"
#include "streamsim/design.hpp"
#include "streamsim/remap.hpp"

namespace streamsim {

/// Runtime-selectable engine features. The six ablation levels enable them
/// cumulatively, level 1 being the plain data-mover baseline.
struct FeatureFlags {
    bool prefetch = false;
    bool transposer = false;
    bool broadcaster = false;
    bool implicit_im2col = false;
    bool addr_mode_switching = false;

    /// Cumulative ladder: 1 = all off, 2 = +prefetch, 3 = +transposer,
    /// 4 = +broadcaster, 5 = +implicit im2col, 6 = +addressing-mode switching.
    static FeatureFlags level(int lvl) {
        FeatureFlags f;
        f.prefetch = lvl >= 2;
        f.transposer = lvl >= 3;
        f.broadcaster = lvl >= 4;
        f.implicit_im2col = lvl >= 5;
        f.addr_mode_switching = lvl >= 6;
        return f;
    }

    bool operator==(const FeatureFlags&) const = default;
};

inline constexpr int kNumFlagLevels = 6;

/// Whole-system shape: scratchpad geometry, the five stream engines feeding
/// the GeMM and quantization cores, and the core itself.
struct SystemConfig {
    BankMap memory;
    std::uint32_t latency = 1;   // bank pipeline latency L
    GemmCoreSpec core;
    DseDesign dse_a, dse_b, dse_c, dse_d, dse_e;
    std::uint64_t deadlock_factor = 10;

    const DseDesign& design(char stream) const {
        switch (stream) {
        case 'a': return dse_a;
        case 'b': return dse_b;
        case 'c': return dse_c;
        case 'd': return dse_d;
        case 'e': return dse_e;
        }
        raise(ErrKind::ConfigParse, "unknown stream id");
    }

    void validate() const {
        memory.validate();
        dse_a.validate();
        dse_b.validate();
        dse_c.validate();
        dse_d.validate();
        dse_e.validate();
        const std::uint32_t wb = memory.word_bytes();
        for (const auto* d : {&dse_a, &dse_b, &dse_c, &dse_d, &dse_e})
            if (d->lane_bytes() != wb)
                raise(ErrKind::ShapeMismatch, "stream lane width != bank word width");
        // Stream port widths must match the core tile shapes.
        const std::uint64_t a_bytes = std::uint64_t{core.ms} * core.ks;
        const std::uint64_t b_bytes = std::uint64_t{core.ks} * core.ns;
        const std::uint64_t acc_bytes = std::uint64_t{core.ms} * core.ns * 4;
        if (std::uint64_t{dse_a.num_channels} * dse_a.lane_bytes() != a_bytes ||
            std::uint64_t{dse_b.num_channels} * dse_b.lane_bytes() != b_bytes ||
            std::uint64_t{dse_c.num_channels} * dse_c.lane_bytes() != acc_bytes ||
            std::uint64_t{dse_d.num_channels} * dse_d.lane_bytes() != acc_bytes ||
            std::uint64_t{dse_e.num_channels} * dse_e.lane_bytes() != acc_bytes / 4)
            raise(ErrKind::ShapeMismatch, "stream port width does not match core tile shape");
        if (dse_a.mode != DseMode::Read || dse_b.mode != DseMode::Read ||
            dse_c.mode != DseMode::Read || dse_d.mode != DseMode::Write ||
            dse_e.mode != DseMode::Write)
            raise(ErrKind::ShapeMismatch, "stream engine read/write roles");
    }

    /// Evaluation system: an 8x8x8 int8 core fed by five engines over a
    /// 2048-bank scratchpad with fully- and grouped-interleaved addressing.
    static SystemConfig default_system() {
        SystemConfig s;
        s.memory.bank_width_bits = 64;
        s.memory.num_banks = 2048;
        s.memory.bank_depth_words = 64;
        s.memory.group_options = {2048, 512};
        s.latency = 1;
        s.core = {8, 8, 8};

        s.dse_a.mode = DseMode::Read;
        s.dse_a.num_channels = 8;
        s.dse_a.spatial_bounds = {8, 8};   // lane x byte; supports byte-granular gathers
        s.dse_a.max_temporal_dims = 6;
        s.dse_a.data_buffer_depth = 8;
        s.dse_a.address_buffer_depth = 4;
        s.dse_a.extensions = {ExtKind::Transposer};

        s.dse_b.mode = DseMode::Read;
        s.dse_b.num_channels = 8;
        s.dse_b.spatial_bounds = {8};
        s.dse_b.max_temporal_dims = 3;
        s.dse_b.data_buffer_depth = 8;
        s.dse_b.address_buffer_depth = 4;
        s.dse_b.extensions = {ExtKind::Transposer};

        s.dse_c.mode = DseMode::Read;
        s.dse_c.num_channels = 32;
        s.dse_c.spatial_bounds = {8, 4};
        s.dse_c.max_temporal_dims = 3;
        s.dse_c.data_buffer_depth = 1;
        s.dse_c.address_buffer_depth = 4;
        s.dse_c.extensions = {ExtKind::Broadcaster};

        s.dse_d.mode = DseMode::Write;
        s.dse_d.num_channels = 32;
        s.dse_d.spatial_bounds = {8, 4};
        s.dse_d.max_temporal_dims = 3;
        s.dse_d.data_buffer_depth = 1;
        s.dse_d.address_buffer_depth = 4;

        s.dse_e.mode = DseMode::Write;
        s.dse_e.num_channels = 8;
        s.dse_e.spatial_bounds = {8};
        s.dse_e.max_temporal_dims = 3;
        s.dse_e.data_buffer_depth = 1;
        s.dse_e.address_buffer_depth = 4;
        return s;
    }
};

}  // namespace streamsim
