#pragma once

#include <cassert>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "streamsim/error.hpp"
#include "streamsim/remap.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

struct MemRequest {
    std::uint32_t requester = 0;
    std::uint32_t channel = 0;
    bool is_write = false;
    Addr address = 0;                       // word-aligned
    std::uint64_t seq = 0;                  // requester/channel-local sequence tag
    Cycle issue_cycle = 0;
    std::vector<std::uint8_t> payload;      // writes only, one bank word
};

struct MemResponse {
    std::uint32_t requester = 0;
    std::uint32_t channel = 0;
    bool is_write = false;
    std::uint64_t seq = 0;
    Cycle completion_cycle = 0;
    std::vector<std::uint8_t> data;         // reads only
};

/// Cycle-accurate multi-banked scratchpad: single-ported banks behind a
/// full-bisection crossbar. Bank queues are unbounded (backpressure is the
/// stream engines' outstanding-request limit); each bank commits at most one
/// request per cycle, round-robin across requesters. Contents live in a flat
/// byte array, so the addressing mode of a requester only routes its
/// requests, never changes stored data.
class Scratchpad {
public:
    explicit Scratchpad(BankMap geometry, std::uint32_t latency = 1)
        : geometry_(std::move(geometry)), latency_(latency) {
        geometry_.validate();
        content_.assign(geometry_.size_bytes(), 0);
        banks_.resize(geometry_.num_banks);
        bank_access_histogram_.assign(geometry_.num_banks, 0);
    }

    const BankMap& geometry() const { return geometry_; }
    std::uint32_t latency() const { return latency_; }
    std::uint64_t size_bytes() const { return content_.size(); }

    /// Each requester maps addresses under its own addressing-mode selection.
    void set_requester_mode(std::uint32_t requester, std::uint32_t r_s) {
        if (r_s >= geometry_.group_options.size())
            raise(ErrKind::InvalidModeIndex, "mode " + std::to_string(r_s));
        requester_modes_[requester] = r_s;
    }

    std::size_t submit(std::span<const MemRequest> requests, [[maybe_unused]] Cycle cycle) {
        for (const auto& r : requests) {
            const std::uint32_t wb = geometry_.word_bytes();
            if (r.address % wb != 0)
                raise(ErrKind::AddressOutOfRange, "unaligned request address");
            BankMap view = geometry_;
            auto it = requester_modes_.find(r.requester);
            if (it != requester_modes_.end()) view.selected_mode = it->second;
            const BankLocation loc = map_address(view, r.address);
            if (r.is_write && r.payload.size() != wb)
                raise(ErrKind::ShapeMismatch, "write payload must be one bank word");
            banks_[loc.bank].queues[r.requester].push_back(Pending{r, loc});
            busy_banks_.insert(loc.bank);
            ++total_accesses_;
        }
        return requests.size();
    }

    /// Commits at most one request per busy bank, applies it to the content
    /// array, and schedules its response at commit + latency. Every request
    /// left waiting behind a busy bank this cycle counts one conflict stall.
    void tick(Cycle cycle) {
        std::vector<std::uint32_t> drained;
        for (std::uint32_t bank : busy_banks_) {
            Bank& b = banks_[bank];
            Pending* chosen = nullptr;
            // Round-robin across requester ids, starting after the last served.
            auto it = b.queues.upper_bound(b.last_served);
            for (std::size_t scanned = 0; scanned < b.queues.size(); ++scanned) {
                if (it == b.queues.end()) it = b.queues.begin();
                if (!it->second.empty()) {
                    chosen = &it->second.front();
                    b.last_served = it->first;
                    break;
                }
                ++it;
            }
            assert(chosen != nullptr);
            commit(*chosen, cycle);
            auto served = b.queues.find(b.last_served);
            served->second.pop_front();
            std::size_t waiting = 0;
            for (auto& [id, q] : b.queues) waiting += q.size();
            conflict_stall_cycles_ += waiting;
            if (waiting == 0) drained.push_back(bank);
        }
        for (auto bank : drained) busy_banks_.erase(bank);
    }

    /// Responses whose completion cycle has been reached, in commit order.
    std::vector<MemResponse> take_responses(std::uint32_t requester, Cycle now) {
        std::vector<MemResponse> out;
        auto it = outbox_.find(requester);
        if (it == outbox_.end()) return out;
        auto& q = it->second;
        while (!q.empty() && q.front().completion_cycle <= now) {
            out.push_back(std::move(q.front()));
            q.pop_front();
        }
        return out;
    }

    void load_image(Addr base, std::span<const std::uint8_t> bytes) {
        if (base + bytes.size() > content_.size())
            raise(ErrKind::AddressOutOfRange, "image exceeds memory");
        std::copy(bytes.begin(), bytes.end(), content_.begin() + static_cast<std::ptrdiff_t>(base));
    }

    std::vector<std::uint8_t> dump_image(Addr base, std::size_t len) const {
        if (base + len > content_.size())
            raise(ErrKind::AddressOutOfRange, "image exceeds memory");
        return {content_.begin() + static_cast<std::ptrdiff_t>(base),
                content_.begin() + static_cast<std::ptrdiff_t>(base + len)};
    }

    bool idle() const {
        if (!busy_banks_.empty()) return false;
        for (const auto& [id, q] : outbox_)
            if (!q.empty()) return false;
        return true;
    }

    std::uint64_t total_accesses() const { return total_accesses_; }
    std::uint64_t total_commits() const { return total_commits_; }
    std::uint64_t conflict_stall_cycles() const { return conflict_stall_cycles_; }
    const std::vector<std::uint64_t>& bank_access_histogram() const {
        return bank_access_histogram_;
    }

private:
    struct Pending {
        MemRequest req;
        BankLocation loc;
    };

    struct Bank {
        std::map<std::uint32_t, std::deque<Pending>> queues;  // per requester
        std::uint32_t last_served = 0xffffffffu;
    };

    void commit(Pending& p, Cycle cycle) {
        const std::uint32_t wb = geometry_.word_bytes();
        MemResponse resp;
        resp.requester = p.req.requester;
        resp.channel = p.req.channel;
        resp.is_write = p.req.is_write;
        resp.seq = p.req.seq;
        resp.completion_cycle = cycle + latency_;
        if (p.req.is_write) {
            std::copy(p.req.payload.begin(), p.req.payload.end(),
                      content_.begin() + static_cast<std::ptrdiff_t>(p.req.address));
        } else {
            resp.data.assign(content_.begin() + static_cast<std::ptrdiff_t>(p.req.address),
                             content_.begin() + static_cast<std::ptrdiff_t>(p.req.address + wb));
        }
        ++bank_access_histogram_[p.loc.bank];
        ++total_commits_;
        outbox_[p.req.requester].push_back(std::move(resp));
    }

    BankMap geometry_;
    std::uint32_t latency_;
    std::vector<std::uint8_t> content_;
    std::vector<Bank> banks_;
    std::set<std::uint32_t> busy_banks_;
    std::map<std::uint32_t, std::uint32_t> requester_modes_;
    std::map<std::uint32_t, std::deque<MemResponse>> outbox_;
    std::uint64_t total_accesses_ = 0;
    std::uint64_t total_commits_ = 0;
    std::uint64_t conflict_stall_cycles_ = 0;
    std::vector<std::uint64_t> bank_access_histogram_;
};

}  // namespace streamsim
