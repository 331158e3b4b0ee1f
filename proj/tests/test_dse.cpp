#include <catch2/catch.hpp>

#include <random>

#include "streamsim/agu.hpp"
#include "streamsim/dse.hpp"
#include "streamsim/memory.hpp"

#include "helpers.hpp"

using namespace streamsim;

namespace {

BankMap geom(std::uint32_t banks = 16, std::uint32_t depth = 64, std::uint32_t wb = 64) {
    BankMap m;
    m.bank_width_bits = wb;
    m.num_banks = banks;
    m.bank_depth_words = depth;
    m.group_options = {banks, 1};
    return m;
}

DseDesign read8(std::uint32_t dbf, std::uint32_t abf = 4) {
    DseDesign d;
    d.mode = DseMode::Read;
    d.num_channels = 8;
    d.spatial_bounds = {8};
    d.max_temporal_dims = 4;
    d.data_buffer_depth = dbf;
    d.address_buffer_depth = abf;
    return d;
}

DseDesign write8(std::uint32_t dbf = 2) {
    DseDesign d = read8(dbf);
    d.mode = DseMode::Write;
    return d;
}

StreamConfig contiguous_stream(Addr base, std::uint64_t steps, std::int64_t stride) {
    StreamConfig cfg;
    cfg.pattern.base = base;
    cfg.pattern.temporal_bounds = {steps};
    cfg.pattern.temporal_strides = {stride};
    cfg.pattern.spatial_strides = {8};
    return cfg;
}

}  // namespace

TEST_CASE("prefetch reaches one word per cycle after an L-cycle warm-up", "[dse]") {
    const std::uint32_t latency = 2;
    Scratchpad mem(geom(), latency);
    ReadDse dse(0, read8(/*dbf=*/4));
    dse.configure(contiguous_stream(0, 10, 64), mem);
    std::vector<Cycle> deliveries;
    for (Cycle c = 0; c < 40 && !dse.is_complete(); ++c) {
        if (auto w = dse_tick_read(dse, mem, c)) deliveries.push_back(c);
        mem.tick(c);
    }
    REQUIRE(deliveries.size() == 10);
    CHECK(deliveries.front() == latency);
    for (std::size_t i = 1; i < deliveries.size(); ++i)
        CHECK(deliveries[i] == deliveries[i - 1] + 1);  // steady-state throughput 1
}

TEST_CASE("a single-slot FIFO paces the stream to one word per 1+L cycles", "[dse]") {
    const std::uint32_t latency = 2;
    Scratchpad mem(geom(), latency);
    ReadDse dse(0, read8(/*dbf=*/1));
    dse.configure(contiguous_stream(0, 6, 64), mem);
    std::vector<Cycle> deliveries;
    for (Cycle c = 0; c < 60 && !dse.is_complete(); ++c) {
        if (auto w = dse_tick_read(dse, mem, c)) deliveries.push_back(c);
        mem.tick(c);
    }
    REQUIRE(deliveries.size() == 6);
    for (std::size_t i = 1; i < deliveries.size(); ++i)
        CHECK(deliveries[i] - deliveries[i - 1] == 1 + latency);
}

TEST_CASE("exhausted stream reports complete and yields nothing", "[dse]") {
    Scratchpad mem(geom(), 1);
    ReadDse dse(0, read8(4));
    dse.configure(contiguous_stream(0, 2, 64), mem);
    CHECK_FALSE(dse.is_complete());  // freshly configured
    int words = 0;
    for (Cycle c = 0; c < 20; ++c) {
        if (dse_tick_read(dse, mem, c)) ++words;
        mem.tick(c);
        if (words == 1) CHECK_FALSE(dse.is_complete());  // mid-stream
    }
    CHECK(words == 2);
    CHECK(dse.is_complete());
    CHECK_FALSE(dse.word_ready());
    CHECK(dse.delivered_words() == 2);
}

TEST_CASE("tick before configure is an error", "[dse]") {
    Scratchpad mem(geom(), 1);
    ReadDse dse(0, read8(4));
    try {
        dse.tick(mem, 0);
        FAIL("expected NotConfigured");
    } catch (const SimError& e) {
        CHECK(e.kind() == ErrKind::NotConfigured);
    }
}

TEST_CASE("write engine issues one request per channel on accept", "[dse]") {
    Scratchpad mem(geom(), 1);
    WriteDse dse(0, write8());
    dse.configure(contiguous_stream(0, 3, 64), mem);
    WideWord w = WideWord::zeros(8, 8);
    for (std::uint32_t i = 0; i < w.bytes.size(); ++i) w.bytes[i] = static_cast<std::uint8_t>(i);
    REQUIRE(dse.can_accept());
    REQUIRE(dse.offer(w, 0));
    dse.tick(mem, 0);
    CHECK(dse.issued_requests() == 8);
    mem.tick(0);
    Cycle c = 1;
    while (!dse.is_complete() && c < 20) {
        if (dse.can_accept() && dse.accepted_words() < 3) dse.offer(w, c);
        dse.tick(mem, c);
        mem.tick(c);
        ++c;
    }
    CHECK(dse.is_complete());
    CHECK(dse.issued_requests() == 3 * 8);  // steps x channels
    CHECK(mem.dump_image(0, 8) == std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("bank conflicts back-pressure the write engine", "[dse]") {
    // Non-interleaved mode plus a single-bank footprint: every channel's word
    // lands in bank 0, so one write commits per cycle and the FIFOs stay full.
    Scratchpad mem(geom(16, 64), 1);
    WriteDse dse(0, write8(/*dbf=*/1));
    StreamConfig cfg = contiguous_stream(0, 4, 64);
    cfg.addressing_mode = 1;
    dse.configure(cfg, mem);
    const WideWord w = WideWord::zeros(8, 8);
    REQUIRE(dse.offer(w, 0));
    dse.tick(mem, 0);
    mem.tick(0);
    bool rejected = false;
    Cycle c = 1;
    while (!dse.is_complete() && c < 200) {
        if (dse.accepted_words() < 4) {
            if (dse.can_accept()) {
                dse.offer(w, c);
            } else {
                rejected = true;
            }
        }
        dse.tick(mem, c);
        mem.tick(c);
        ++c;
    }
    CHECK(rejected);
    CHECK(dse.is_complete());
    CHECK(mem.conflict_stall_cycles() > 0);
}

TEST_CASE("offering past the configured stream length is an overrun", "[dse]") {
    Scratchpad mem(geom(), 1);
    WriteDse dse(0, write8());
    dse.configure(contiguous_stream(0, 1, 64), mem);
    const WideWord w = WideWord::zeros(8, 8);
    REQUIRE(dse.offer(w, 0));
    try {
        dse.offer(w, 1);
        FAIL("expected StreamOverrun");
    } catch (const SimError& e) {
        CHECK(e.kind() == ErrKind::StreamOverrun);
    }
}

TEST_CASE("read engine delivers exactly one word per temporal step", "[dse]") {
    Scratchpad mem(geom(), 1);
    ReadDse dse(0, read8(4));
    StreamConfig cfg;
    cfg.pattern.base = 0;
    cfg.pattern.temporal_bounds = {3, 4};
    cfg.pattern.temporal_strides = {64, 0};
    cfg.pattern.spatial_strides = {8};
    dse.configure(cfg, mem);
    int words = 0;
    for (Cycle c = 0; c < 100 && !dse.is_complete(); ++c) {
        if (dse_tick_read(dse, mem, c)) ++words;
        mem.tick(c);
    }
    CHECK(words == 12);
    CHECK(dse.issued_requests() == 12 * 8);
}

TEST_CASE("per-channel data arrives in address order despite bank skew", "[dse]") {
    // A rival requester hammers channel 0's first bank so its early response
    // lags; later responses for the same channel must still be delivered in
    // issue order.
    Scratchpad mem(geom(16, 64), 1);
    auto img = testutil::random_bytes(16 * 64 * 8, 3);
    mem.load_image(0, img);

    ReadDse dse(0, read8(4));
    dse.configure(contiguous_stream(0, 8, 128), mem);

    for (Cycle c = 0; c < 4; ++c) {
        MemRequest rival;
        rival.requester = 9;
        rival.address = 0;  // bank 0, same as channel 0's first word
        rival.seq = c;
        mem.submit(std::span<const MemRequest>(&rival, 1), c);
    }

    std::vector<WideWord> words;
    for (Cycle c = 0; c < 100 && !dse.is_complete(); ++c) {
        dse.tick(mem, c);
        if (dse.word_ready()) words.push_back(dse.pop_word());
        mem.tick(c);
    }
    REQUIRE(words.size() == 8);
    for (std::uint64_t t = 0; t < 8; ++t)
        for (std::uint32_t lane = 0; lane < 8; ++lane)
            for (std::uint32_t b = 0; b < 8; ++b)
                CHECK(words[t].lane(lane)[b] == img[t * 128 + lane * 8 + b]);
}

TEST_CASE("delivered lane data equals a closed-form gather", "[dse][property]") {
    std::mt19937_64 rng(17);
    const DseDesign design = [] {
        DseDesign d;
        d.mode = DseMode::Read;
        d.num_channels = 4;
        d.spatial_bounds = {4};
        d.max_temporal_dims = 3;
        d.data_buffer_depth = 3;
        d.bank_width_bits = 8;
        return d;
    }();
    BankMap g;
    g.bank_width_bits = 8;
    g.num_banks = 8;
    g.bank_depth_words = 512;  // 4 KiB
    g.group_options = {8, 1};

    for (int trial = 0; trial < 25; ++trial) {
        Scratchpad mem(g, 1 + rng() % 3);
        const auto img = testutil::random_bytes(g.size_bytes(), 1000 + trial);
        mem.load_image(0, img);

        AccessPattern p;
        p.base = 1024 + (rng() % 128);
        const std::size_t dims = 1 + rng() % 3;
        for (std::size_t d = 0; d < dims; ++d) {
            p.temporal_bounds.push_back(1 + rng() % 4);
            p.temporal_strides.push_back(static_cast<std::int64_t>(rng() % 65) - 32);
        }
        p.spatial_strides = {static_cast<std::int64_t>(rng() % 17) - 8};

        ReadDse dse(0, design);
        StreamConfig cfg;
        cfg.pattern = p;
        try {
            dse.configure(cfg, mem);
        } catch (const SimError&) {
            continue;
        }
        std::vector<WideWord> words;
        for (Cycle c = 0; c < 2000 && !dse.is_complete(); ++c) {
            dse.tick(mem, c);
            CHECK(dse.slots_within_depth());
            if (dse.word_ready()) words.push_back(dse.pop_word());
            mem.tick(c);
        }
        REQUIRE(words.size() == p.total_steps());
        for (std::uint64_t t = 0; t < p.total_steps(); ++t) {
            auto [addr, offs] = address_at(p, design, t);
            for (std::uint32_t lane = 0; lane < 4; ++lane) {
                const Addr byte = static_cast<Addr>(static_cast<std::int64_t>(addr) + offs[lane]);
                CHECK(words[t].lane(lane)[0] == img[byte]);
            }
        }
    }
}

TEST_CASE("deeper data FIFOs never slow a stream down", "[dse][property]") {
    // Strided pattern under non-interleaved mode: plenty of bank conflicts.
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const std::uint64_t steps = 8 + rng() % 8;
        std::uint64_t prev_cycles = ~0ull;
        for (std::uint32_t dbf = 1; dbf <= 8; ++dbf) {
            Scratchpad mem(geom(16, 64), 2);
            ReadDse dse(0, read8(dbf));
            StreamConfig cfg = contiguous_stream(0, steps, 64);
            cfg.addressing_mode = 1;  // non-interleaved: heavy conflicts
            dse.configure(cfg, mem);
            Cycle c = 0;
            while (!dse.is_complete() && c < 5000) {
                dse_tick_read(dse, mem, c);
                mem.tick(c);
                ++c;
            }
            REQUIRE(dse.is_complete());
            CHECK(c <= prev_cycles);
            prev_cycles = c;
        }
    }
}

TEST_CASE("a single-entry address buffer still delivers the full stream", "[dse]") {
    Scratchpad mem(geom(), 1);
    auto img = testutil::random_bytes(512, 71);
    mem.load_image(0, img);
    ReadDse dse(0, read8(/*dbf=*/4, /*abf=*/1));
    dse.configure(contiguous_stream(0, 8, 64), mem);
    std::vector<WideWord> words;
    for (Cycle c = 0; c < 100 && !dse.is_complete(); ++c) {
        dse.tick(mem, c);
        if (dse.word_ready()) words.push_back(dse.pop_word());
        mem.tick(c);
    }
    REQUIRE(words.size() == 8);
    for (std::uint64_t t = 0; t < 8; ++t)
        for (std::uint32_t b = 0; b < 64; ++b) CHECK(words[t].bytes[b] == img[t * 64 + b]);
}

TEST_CASE("data written under one addressing mode reads back under another", "[dse]") {
    // Contents live in a flat byte array; the mode only routes requests.
    Scratchpad mem(geom(16, 64), 1);
    WriteDse writer(0, write8(2));
    StreamConfig wcfg = contiguous_stream(0, 4, 64);
    wcfg.addressing_mode = 1;  // non-interleaved writes
    writer.configure(wcfg, mem);
    std::mt19937_64 rng(61);
    std::vector<WideWord> sent;
    for (Cycle c = 0; c < 40 && !writer.is_complete(); ++c) {
        if (writer.accepted_words() < 4 && writer.can_accept()) {
            WideWord w = WideWord::zeros(8, 8);
            for (auto& b : w.bytes) b = static_cast<std::uint8_t>(rng());
            writer.offer(w, c);
            sent.push_back(w);
        }
        writer.tick(mem, c);
        mem.tick(c);
    }
    REQUIRE(writer.is_complete());

    ReadDse reader(1, read8(4));
    StreamConfig rcfg = contiguous_stream(0, 4, 64);
    rcfg.addressing_mode = 0;  // fully interleaved reads
    reader.configure(rcfg, mem);
    std::vector<WideWord> got;
    for (Cycle c = 100; c < 160 && !reader.is_complete(); ++c) {
        reader.tick(mem, c);
        if (reader.word_ready()) got.push_back(reader.pop_word());
        mem.tick(c);
    }
    REQUIRE(got.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == sent[i]);
}

TEST_CASE("synchronous mode waits for consumption before the next step", "[dse]") {
    const std::uint32_t latency = 1;
    Scratchpad mem(geom(), latency);
    ReadDse dse(0, read8(4));
    dse.set_synchronous(true);
    dse.configure(contiguous_stream(0, 5, 64), mem);
    std::vector<Cycle> deliveries;
    for (Cycle c = 0; c < 40 && !dse.is_complete(); ++c) {
        if (dse_tick_read(dse, mem, c)) deliveries.push_back(c);
        mem.tick(c);
    }
    REQUIRE(deliveries.size() == 5);
    // One issue/consume round trip per word: period 1 + L + 0 with the
    // next issue gated on the pop.
    for (std::size_t i = 1; i < deliveries.size(); ++i)
        CHECK(deliveries[i] - deliveries[i - 1] == 1 + latency);
    CHECK(dse.issued_requests() == 5 * 8);
}
