#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "streamsim/error.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

/// Memory geometry plus the runtime-selectable addressing mode. A group size
/// equal to the full bank count is fully-interleaved addressing (FIMA), a
/// group size of one is non-interleaved (NIMA), anything in between is
/// grouped-interleaved (GIMA).
struct BankMap {
    std::uint32_t bank_width_bits = 64;            // W_B
    std::uint32_t num_banks = 2048;                // N_BF
    std::uint32_t bank_depth_words = 64;
    std::vector<std::uint32_t> group_options{2048};  // allowed N_BG values; index 0 default
    std::uint32_t selected_mode = 0;               // R_S

    std::uint32_t word_bytes() const { return bank_width_bits / 8; }

    std::uint64_t size_bytes() const {
        return static_cast<std::uint64_t>(num_banks) * bank_depth_words * word_bytes();
    }

    std::uint32_t group_size() const { return group_options.at(selected_mode); }

    void validate() const {
        auto pow2 = [](std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; };
        if (bank_width_bits < 8 || !pow2(bank_width_bits))
            raise(ErrKind::InvalidBound, "bank width must be a power of two >= 8 bits");
        if (!pow2(num_banks)) raise(ErrKind::InvalidBound, "bank count must be a power of two");
        if (!pow2(bank_depth_words))
            raise(ErrKind::InvalidBound, "bank depth must be a power of two");
        if (group_options.empty()) raise(ErrKind::InvalidBound, "no group options");
        for (auto g : group_options)
            if (!pow2(g) || g > num_banks)
                raise(ErrKind::InvalidBound, "group size must be a power of two dividing N_BF");
        if (selected_mode >= group_options.size())
            raise(ErrKind::InvalidModeIndex, "selected mode out of range");
    }
};

struct BankLocation {
    std::uint32_t bank = 0;
    std::uint32_t wordline = 0;
    std::uint32_t byte_offset = 0;

    bool operator==(const BankLocation&) const = default;
};

/// Routes a byte address to (bank, wordline, byte offset) under the selected
/// mode. The word index bits, LSB up, are read as
/// [intra-group bank | wordline | group id]; FIMA and NIMA fall out as the
/// G == N_BF and G == 1 special cases.
inline BankLocation map_address(const BankMap& map, Addr address) {
    if (address >= map.size_bytes())
        raise(ErrKind::AddressOutOfRange,
              "address " + std::to_string(address) + " >= " + std::to_string(map.size_bytes()));
    const std::uint32_t wb = map.word_bytes();
    const std::uint64_t word = address / wb;
    const std::uint32_t group = map.group_size();
    const std::uint64_t intra = word % group;
    const std::uint64_t wordline = (word / group) % map.bank_depth_words;
    const std::uint64_t group_id = word / (static_cast<std::uint64_t>(group) * map.bank_depth_words);
    return {static_cast<std::uint32_t>(group_id * group + intra),
            static_cast<std::uint32_t>(wordline),
            static_cast<std::uint32_t>(address % wb)};
}

inline BankMap select_mode(BankMap map, std::uint32_t r_s) {
    if (r_s >= map.group_options.size())
        raise(ErrKind::InvalidModeIndex,
              "mode " + std::to_string(r_s) + " of " + std::to_string(map.group_options.size()));
    map.selected_mode = r_s;
    return map;
}

}  // namespace streamsim
