#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "streamsim/system.hpp"

namespace testutil {

/// Scaled-down system: a 2x2x2 int8 core over an 8-bank byte-wide
/// scratchpad. Small enough to hand-step, same wiring as the full system.
inline streamsim::SystemConfig tiny_system() {
    using namespace streamsim;
    SystemConfig s;
    s.memory.bank_width_bits = 8;
    s.memory.num_banks = 8;
    s.memory.bank_depth_words = 1024;
    s.memory.group_options = {8, 2, 1};
    s.latency = 1;
    s.core = {2, 2, 2};

    s.dse_a.mode = DseMode::Read;
    s.dse_a.num_channels = 4;
    s.dse_a.spatial_bounds = {2, 2};
    s.dse_a.max_temporal_dims = 6;
    s.dse_a.bank_width_bits = 8;
    s.dse_a.extensions = {ExtKind::Transposer};

    s.dse_b = s.dse_a;
    s.dse_b.max_temporal_dims = 3;

    s.dse_c.mode = DseMode::Read;
    s.dse_c.num_channels = 16;
    s.dse_c.spatial_bounds = {16};
    s.dse_c.max_temporal_dims = 3;
    s.dse_c.data_buffer_depth = 1;
    s.dse_c.bank_width_bits = 8;
    s.dse_c.extensions = {ExtKind::Broadcaster};

    s.dse_d.mode = DseMode::Write;
    s.dse_d.num_channels = 16;
    s.dse_d.spatial_bounds = {16};
    s.dse_d.max_temporal_dims = 3;
    s.dse_d.data_buffer_depth = 1;
    s.dse_d.bank_width_bits = 8;

    s.dse_e.mode = DseMode::Write;
    s.dse_e.num_channels = 4;
    s.dse_e.spatial_bounds = {4};
    s.dse_e.max_temporal_dims = 3;
    s.dse_e.data_buffer_depth = 1;
    s.dse_e.bank_width_bits = 8;
    return s;
}

inline std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

}  // namespace testutil
