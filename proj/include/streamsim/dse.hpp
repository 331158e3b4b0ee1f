#pragma once

#include <cassert>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "streamsim/agu.hpp"
#include "streamsim/design.hpp"
#include "streamsim/error.hpp"
#include "streamsim/ext.hpp"
#include "streamsim/memory.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

/// Runtime configuration record for one stream: the affine pattern, the
/// addressing-mode selection and the extension enables.
struct StreamConfig {
    AccessPattern pattern;
    std::uint32_t addressing_mode = 0;            // R_S
    std::vector<bool> extension_enables;          // aligned with DseDesign::extensions
    std::uint32_t broadcast_source_lane = 0;
};

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// One coalesced sub-fetch of a lane: a word-aligned request plus the byte
/// span it contributes to the lane.
struct Fetch {
    std::int64_t word_rel = 0;     // word-aligned offset relative to the temporal address
    std::uint32_t word_off = 0;    // first byte used inside the fetched word
    std::uint32_t lane_off = 0;    // destination byte inside the lane
    std::uint32_t len = 0;
};

/// Per-channel fetch plan derived from the spatial offsets. Spatial point
/// i belongs to channel i / R (R = gather factor) and covers gather_bytes()
/// bytes of that lane; adjacent points that fall into the same memory word
/// coalesce into a single request.
inline std::vector<std::vector<Fetch>> build_fetch_plan(const DseDesign& design,
                                                        const std::vector<std::int64_t>& offsets) {
    const std::uint32_t wb = design.lane_bytes();
    const std::uint32_t r_factor = design.gather_factor();
    const std::uint32_t g = design.gather_bytes();
    std::vector<std::vector<Fetch>> plan(design.num_channels);
    for (std::uint32_t c = 0; c < design.num_channels; ++c) {
        auto& fetches = plan[c];
        for (std::uint32_t r = 0; r < r_factor; ++r) {
            const std::int64_t o = offsets[static_cast<std::size_t>(c) * r_factor + r];
            const std::int64_t word_rel = floor_div(o, wb) * wb;
            const std::uint32_t word_off = static_cast<std::uint32_t>(o - word_rel);
            if (word_off + g > wb)
                raise(ErrKind::ShapeMismatch, "spatial point straddles a bank word");
            const std::uint32_t lane_off = r * g;
            if (!fetches.empty()) {
                Fetch& prev = fetches.back();
                if (prev.word_rel == word_rel && prev.word_off + prev.len == word_off &&
                    prev.lane_off + prev.len == lane_off) {
                    prev.len += g;
                    continue;
                }
            }
            fetches.push_back(Fetch{word_rel, word_off, lane_off, g});
        }
    }
    return plan;
}

}  // namespace detail

/// Read-mode streaming engine. Per cycle: refills its address queue from the
/// AGU, issues at most one memory request per channel (slot-reserved against
/// the data FIFO depth), collects responses in address order, and exposes a
/// gathered wide word once every active channel's FIFO head is filled.
class ReadDse {
public:
    ReadDse(std::uint32_t requester_id, DseDesign design)
        : id_(requester_id), design_(std::move(design)) {
        design_.validate();
        if (design_.mode != DseMode::Read)
            raise(ErrKind::ShapeMismatch, "read engine constructed with write design");
    }

    const DseDesign& design() const { return design_; }
    std::uint32_t requester_id() const { return id_; }

    void set_synchronous(bool on) { sync_mode_ = on; }

    void configure(const StreamConfig& config, Scratchpad& mem) {
        const std::uint32_t wb = design_.lane_bytes();
        if (config.pattern.base % wb != 0)
            raise(ErrKind::ShapeMismatch, "stream base not bank-word aligned");
        for (auto s : config.pattern.temporal_strides)
            if (s % static_cast<std::int64_t>(wb) != 0)
                raise(ErrKind::ShapeMismatch, "temporal stride not bank-word aligned");
        agu_ = Agu(config.pattern, design_, mem.size_bytes());
        chain_.kinds = design_.extensions;
        chain_.enabled = config.extension_enables;
        chain_.enabled.resize(design_.extensions.size(), false);
        chain_.broadcast_source_lane = config.broadcast_source_lane;
        if (chain_.kind_enabled(ExtKind::Broadcaster) &&
            config.broadcast_source_lane >= design_.num_channels)
            raise(ErrKind::LaneOutOfRange, "broadcast source lane");
        plan_ = detail::build_fetch_plan(design_, agu_.spatial_offsets());
        mem.set_requester_mode(id_, config.addressing_mode);

        total_steps_ = config.pattern.total_steps();
        channels_.assign(design_.num_channels, Channel{});
        // With the broadcaster enabled only the source lane touches memory;
        // the other channels idle and their lanes are filled by the chain.
        if (chain_.kind_enabled(ExtKind::Broadcaster)) {
            for (std::uint32_t c = 0; c < design_.num_channels; ++c)
                channels_[c].active = (c == config.broadcast_source_lane);
        }
        addr_queue_.clear();
        head_step_ = 0;
        delivered_words_ = 0;
        configured_ = true;
    }

    void tick(Scratchpad& mem, Cycle cycle) {
        if (!configured_) raise(ErrKind::NotConfigured, "tick before configure");
        refill_queue();
        issue(mem, cycle);
        retire_queue();
        drain(mem, cycle);
    }

    bool word_ready() const {
        if (!configured_ || delivered_words_ >= total_steps_) return false;
        for (const auto& ch : channels_)
            if (ch.active && ch.fifo.empty()) return false;
        return true;
    }

    /// Pops one lane per active channel, assembles the wide word and applies
    /// the extension chain. Only call when word_ready().
    WideWord pop_word() {
        assert(word_ready());
        WideWord word(design_.num_channels, design_.lane_bytes());
        word.valid = true;
        for (std::uint32_t c = 0; c < design_.num_channels; ++c) {
            Channel& ch = channels_[c];
            if (!ch.active) continue;
            auto dst = word.lane(c);
            std::copy(ch.fifo.front().begin(), ch.fifo.front().end(), dst.begin());
            ch.fifo.pop_front();
        }
        ++delivered_words_;
        return apply_chain(chain_, std::move(word));
    }

    bool is_complete() const {
        if (!configured_) return false;
        if (delivered_words_ < total_steps_) return false;
        for (const auto& ch : channels_)
            if (ch.active && (!ch.assembly.empty() || !ch.fifo.empty())) return false;
        return true;
    }

    std::uint64_t issued_requests() const { return issued_requests_; }
    std::uint64_t delivered_words() const { return delivered_words_; }
    std::uint64_t total_steps() const { return configured_ ? total_steps_ : 0; }
    std::optional<Cycle> first_issue_cycle() const { return first_issue_cycle_; }

    /// Slot-reservation invariant, checkable from tests: per channel the
    /// reserved slots (in-flight or buffered) never exceed the FIFO depth.
    bool slots_within_depth() const {
        for (const auto& ch : channels_)
            if (ch.assembly.size() + ch.fifo.size() > design_.data_buffer_depth) return false;
        return true;
    }

private:
    struct Slot {
        std::uint32_t remaining = 0;
        std::vector<std::uint8_t> lane;
    };

    struct Channel {
        bool active = true;
        std::uint64_t next_step = 0;      // next temporal step to issue for
        std::uint32_t next_fetch = 0;     // position inside the fetch plan
        std::uint64_t slot_base = 0;      // step index of assembly.front()
        std::deque<Slot> assembly;        // issued, awaiting responses (step order)
        std::deque<std::vector<std::uint8_t>> fifo;  // completed lanes
    };

    void refill_queue() {
        while (addr_queue_.size() < design_.address_buffer_depth && !agu_.exhausted()) {
            auto a = agu_.next();
            if (!a) break;
            addr_queue_.push_back(*a);
        }
    }

    void issue(Scratchpad& mem, Cycle cycle) {
        for (std::uint32_t c = 0; c < design_.num_channels; ++c) {
            Channel& ch = channels_[c];
            if (!ch.active || ch.next_step >= total_steps_) continue;
            if (sync_mode_ && ch.next_step != delivered_words_) continue;
            const bool new_step = (ch.next_fetch == 0);
            if (new_step && ch.assembly.size() + ch.fifo.size() >= design_.data_buffer_depth)
                continue;  // no FIFO slot to reserve
            if (ch.next_step >= head_step_ + addr_queue_.size()) continue;  // address not buffered
            const Addr temporal = addr_queue_[ch.next_step - head_step_];
            const detail::Fetch& f = plan_[c][ch.next_fetch];
            MemRequest req;
            req.requester = id_;
            req.channel = c;
            req.is_write = false;
            req.address = static_cast<Addr>(static_cast<std::int64_t>(temporal) + f.word_rel);
            req.seq = ch.next_step * plan_[c].size() + ch.next_fetch;
            req.issue_cycle = cycle;
            mem.submit(std::span<const MemRequest>(&req, 1), cycle);
            ++issued_requests_;
            if (!first_issue_cycle_) first_issue_cycle_ = cycle;
            if (new_step) {
                if (ch.assembly.empty()) ch.slot_base = ch.next_step;
                ch.assembly.push_back(
                    Slot{static_cast<std::uint32_t>(plan_[c].size()),
                         std::vector<std::uint8_t>(design_.lane_bytes(), 0)});
            }
            if (++ch.next_fetch == plan_[c].size()) {
                ch.next_fetch = 0;
                ++ch.next_step;
            }
        }
    }

    void retire_queue() {
        while (!addr_queue_.empty()) {
            bool everyone_past = true;
            for (const auto& ch : channels_)
                if (ch.active && ch.next_step <= head_step_) { everyone_past = false; break; }
            if (!everyone_past) break;
            addr_queue_.pop_front();
            ++head_step_;
        }
    }

    void drain(Scratchpad& mem, Cycle cycle) {
        for (auto& resp : mem.take_responses(id_, cycle)) {
            Channel& ch = channels_[resp.channel];
            const std::uint64_t step = resp.seq / plan_[resp.channel].size();
            const std::uint32_t fetch = static_cast<std::uint32_t>(resp.seq % plan_[resp.channel].size());
            assert(step >= ch.slot_base && step - ch.slot_base < ch.assembly.size());
            Slot& slot = ch.assembly[step - ch.slot_base];
            const detail::Fetch& f = plan_[resp.channel][fetch];
            std::copy(resp.data.begin() + f.word_off, resp.data.begin() + f.word_off + f.len,
                      slot.lane.begin() + f.lane_off);
            assert(slot.remaining > 0);
            --slot.remaining;
            while (!ch.assembly.empty() && ch.assembly.front().remaining == 0) {
                ch.fifo.push_back(std::move(ch.assembly.front().lane));
                ch.assembly.pop_front();
                ++ch.slot_base;
            }
            assert(ch.assembly.size() + ch.fifo.size() <= design_.data_buffer_depth);
        }
    }

    std::uint32_t id_;
    DseDesign design_;
    ExtensionChain chain_;
    Agu agu_;
    std::vector<std::vector<detail::Fetch>> plan_;
    std::vector<Channel> channels_;
    std::deque<Addr> addr_queue_;
    std::uint64_t head_step_ = 0;
    std::uint64_t total_steps_ = 0;
    std::uint64_t delivered_words_ = 0;
    std::uint64_t issued_requests_ = 0;
    std::optional<Cycle> first_issue_cycle_;
    bool sync_mode_ = false;
    bool configured_ = false;
};

/// Write-mode streaming engine: accepts wide words from the accelerator,
/// pairs lanes with the next spatial addresses from the AGU, and drains them
/// to memory one request per channel per cycle. Acceptance is the
/// backpressure signal toward the datapath.
class WriteDse {
public:
    WriteDse(std::uint32_t requester_id, DseDesign design)
        : id_(requester_id), design_(std::move(design)) {
        design_.validate();
        if (design_.mode != DseMode::Write)
            raise(ErrKind::ShapeMismatch, "write engine constructed with read design");
    }

    const DseDesign& design() const { return design_; }
    std::uint32_t requester_id() const { return id_; }

    void set_synchronous(bool on) { sync_mode_ = on; }

    void configure(const StreamConfig& config, Scratchpad& mem) {
        const std::uint32_t wb = design_.lane_bytes();
        if (config.pattern.base % wb != 0)
            raise(ErrKind::ShapeMismatch, "stream base not bank-word aligned");
        for (auto s : config.pattern.temporal_strides)
            if (s % static_cast<std::int64_t>(wb) != 0)
                raise(ErrKind::ShapeMismatch, "temporal stride not bank-word aligned");
        agu_ = Agu(config.pattern, design_, mem.size_bytes());
        plan_ = detail::build_fetch_plan(design_, agu_.spatial_offsets());
        for (const auto& fetches : plan_) {
            if (fetches.size() != 1 || fetches[0].word_off != 0 || fetches[0].len != wb)
                raise(ErrKind::ShapeMismatch, "write lanes must map to whole bank words");
        }
        mem.set_requester_mode(id_, config.addressing_mode);
        total_steps_ = config.pattern.total_steps();
        channels_.assign(design_.num_channels, Channel{});
        accepted_steps_ = 0;
        configured_ = true;
    }

    bool can_accept() const {
        if (!configured_ || accepted_steps_ >= total_steps_) return false;
        if (sync_mode_) {
            for (const auto& ch : channels_)
                if (!ch.fifo.empty() || ch.in_flight != 0) return false;
            return true;
        }
        for (const auto& ch : channels_)
            if (ch.fifo.size() + ch.in_flight >= design_.data_buffer_depth) return false;
        return true;
    }

    /// Accepts the offered word iff every channel has a free FIFO slot.
    /// Offering past the configured stream length is a contract violation.
    bool offer(const WideWord& word, Cycle) {
        if (!configured_) raise(ErrKind::NotConfigured, "offer before configure");
        if (accepted_steps_ >= total_steps_)
            raise(ErrKind::StreamOverrun,
                  "stream configured for " + std::to_string(total_steps_) + " words");
        if (word.num_lanes != design_.num_channels || word.lane_bytes != design_.lane_bytes())
            raise(ErrKind::ShapeMismatch, "offered word shape mismatch");
        if (!can_accept()) return false;
        auto temporal = agu_.next();
        assert(temporal.has_value());
        for (std::uint32_t c = 0; c < design_.num_channels; ++c) {
            auto lane = word.lane(c);
            Entry e;
            e.address = static_cast<Addr>(static_cast<std::int64_t>(*temporal) + plan_[c][0].word_rel);
            e.bytes.assign(lane.begin(), lane.end());
            channels_[c].fifo.push_back(std::move(e));
        }
        ++accepted_steps_;
        return true;
    }

    void tick(Scratchpad& mem, Cycle cycle) {
        if (!configured_) raise(ErrKind::NotConfigured, "tick before configure");
        for (std::uint32_t c = 0; c < design_.num_channels; ++c) {
            Channel& ch = channels_[c];
            if (ch.fifo.empty()) continue;
            MemRequest req;
            req.requester = id_;
            req.channel = c;
            req.is_write = true;
            req.address = ch.fifo.front().address;
            req.seq = ch.issued;
            req.issue_cycle = cycle;
            req.payload = std::move(ch.fifo.front().bytes);
            ch.fifo.pop_front();
            mem.submit(std::span<const MemRequest>(&req, 1), cycle);
            ++ch.issued;
            ++ch.in_flight;
            ++issued_requests_;
            if (!first_issue_cycle_) first_issue_cycle_ = cycle;
        }
        for (auto& resp : mem.take_responses(id_, cycle)) {
            Channel& ch = channels_[resp.channel];
            assert(ch.in_flight > 0);
            --ch.in_flight;
        }
    }

    bool is_complete() const {
        if (!configured_ || accepted_steps_ < total_steps_) return false;
        for (const auto& ch : channels_)
            if (!ch.fifo.empty() || ch.in_flight != 0) return false;
        return true;
    }

    std::uint64_t issued_requests() const { return issued_requests_; }
    std::uint64_t accepted_words() const { return accepted_steps_; }
    std::uint64_t total_steps() const { return configured_ ? total_steps_ : 0; }
    std::optional<Cycle> first_issue_cycle() const { return first_issue_cycle_; }

private:
    struct Entry {
        Addr address = 0;
        std::vector<std::uint8_t> bytes;
    };

    struct Channel {
        std::deque<Entry> fifo;
        std::uint64_t in_flight = 0;
        std::uint64_t issued = 0;
    };

    std::uint32_t id_;
    DseDesign design_;
    Agu agu_;
    std::vector<std::vector<detail::Fetch>> plan_;
    std::vector<Channel> channels_;
    std::uint64_t total_steps_ = 0;
    std::uint64_t accepted_steps_ = 0;
    std::uint64_t issued_requests_ = 0;
    std::optional<Cycle> first_issue_cycle_;
    bool sync_mode_ = false;
    bool configured_ = false;
};

/// Convenience single-call form of one read-engine cycle for an always-ready
/// consumer: tick, then pop the gathered word if one is available.
inline std::optional<WideWord> dse_tick_read(ReadDse& dse, Scratchpad& mem, Cycle cycle) {
    dse.tick(mem, cycle);
    if (dse.word_ready()) return dse.pop_word();
    return std::nullopt;
}

/// Single-call form of one write-engine cycle: offer an optional word, then
/// let the engine drain. Returns whether the word was accepted.
inline bool dse_tick_write(WriteDse& dse, Scratchpad& mem, const std::optional<WideWord>& word,
                           Cycle cycle) {
    bool accepted = false;
    if (word) accepted = dse.offer(*word, cycle);
    dse.tick(mem, cycle);
    return accepted;
}

}  // namespace streamsim
