#pragma once

#include <cstdint>
#include <vector>

#include "streamsim/error.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

enum class ExtKind : std::uint8_t {
    Transposer,
    Broadcaster,
};

/// Runtime view of the datapath-extension chain sitting between a stream
/// engine and the accelerator. The kinds (and their order) are fixed at
/// design time; each stage can be bypassed at runtime via its enable flag.
struct ExtensionChain {
    std::vector<ExtKind> kinds;
    std::vector<bool> enabled;
    std::uint32_t broadcast_source_lane = 0;

    bool stage_enabled(std::size_t i) const {
        return i < enabled.size() && enabled[i];
    }

    bool kind_enabled(ExtKind k) const {
        for (std::size_t i = 0; i < kinds.size(); ++i)
            if (kinds[i] == k && stage_enabled(i)) return true;
        return false;
    }
};

/// Byte-level tile transposition. The word must form a square byte matrix:
/// num_lanes rows of lane_bytes columns with num_lanes == lane_bytes.
inline WideWord transpose_word(const WideWord& in) {
    if (in.num_lanes != in.lane_bytes)
        raise(ErrKind::ShapeMismatch,
              "transpose needs a square byte tile, got " + std::to_string(in.num_lanes) +
                  "x" + std::to_string(in.lane_bytes));
    WideWord out(in.num_lanes, in.lane_bytes);
    out.valid = in.valid;
    const std::uint32_t n = in.num_lanes;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            out.bytes[static_cast<std::size_t>(i) * n + j] =
                in.bytes[static_cast<std::size_t>(j) * n + i];
    return out;
}

/// Duplicates one lane across all lanes.
inline WideWord broadcast_word(const WideWord& in, std::uint32_t source_lane) {
    if (source_lane >= in.num_lanes)
        raise(ErrKind::LaneOutOfRange, "broadcast source lane " + std::to_string(source_lane));
    WideWord out(in.num_lanes, in.lane_bytes);
    out.valid = in.valid;
    auto src = in.lane(source_lane);
    for (std::uint32_t l = 0; l < out.num_lanes; ++l) {
        auto dst = out.lane(l);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

/// Applies the enabled stages in chain order; disabled stages pass through.
/// The chain is combinational: no cycle cost in the timing model.
inline WideWord apply_chain(const ExtensionChain& chain, WideWord word) {
    for (std::size_t i = 0; i < chain.kinds.size(); ++i) {
        if (!chain.stage_enabled(i)) continue;
        switch (chain.kinds[i]) {
        case ExtKind::Transposer:
            word = transpose_word(word);
            break;
        case ExtKind::Broadcaster:
            word = broadcast_word(word, chain.broadcast_source_lane);
            break;
        }
    }
    return word;
}

}  // namespace streamsim
