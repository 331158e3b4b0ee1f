#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamsim/error.hpp"

namespace streamsim {

using Addr = std::uint64_t;
using Cycle = std::uint64_t;

/// Multi-lane data word exchanged between a stream engine and the
/// accelerator datapath: num_lanes lanes of lane_bytes each, stored
/// contiguously (lane 0 first).
struct WideWord {
    std::uint32_t num_lanes = 0;
    std::uint32_t lane_bytes = 0;
    std::vector<std::uint8_t> bytes;
    bool valid = false;

    WideWord() = default;
    WideWord(std::uint32_t lanes, std::uint32_t lane_sz)
        : num_lanes(lanes), lane_bytes(lane_sz),
          bytes(static_cast<std::size_t>(lanes) * lane_sz, 0), valid(false) {}

    static WideWord zeros(std::uint32_t lanes, std::uint32_t lane_sz) {
        WideWord w(lanes, lane_sz);
        w.valid = true;
        return w;
    }

    std::size_t size_bytes() const { return bytes.size(); }

    std::span<std::uint8_t> lane(std::uint32_t i) {
        if (i >= num_lanes) raise(ErrKind::LaneOutOfRange, "lane " + std::to_string(i));
        return {bytes.data() + static_cast<std::size_t>(i) * lane_bytes, lane_bytes};
    }

    std::span<const std::uint8_t> lane(std::uint32_t i) const {
        if (i >= num_lanes) raise(ErrKind::LaneOutOfRange, "lane " + std::to_string(i));
        return {bytes.data() + static_cast<std::size_t>(i) * lane_bytes, lane_bytes};
    }

    bool operator==(const WideWord& o) const {
        return num_lanes == o.num_lanes && lane_bytes == o.lane_bytes && bytes == o.bytes;
    }
};

}  // namespace streamsim
