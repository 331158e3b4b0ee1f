#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "streamsim/accel.hpp"
#include "streamsim/compiler.hpp"
#include "streamsim/dse.hpp"
#include "streamsim/memory.hpp"
#include "streamsim/system.hpp"

namespace streamsim {

struct Metrics {
    std::uint64_t ideal_cycles = 0;
    std::uint64_t active_cycles = 0;
    std::uint64_t total_memory_accesses = 0;
    std::uint64_t conflict_stall_cycles = 0;
    std::uint64_t core_stall_cycles = 0;
    std::map<char, std::uint64_t> stream_requests;
    bool ran = false;

    std::uint64_t requests(char stream) const {
        auto it = stream_requests.find(stream);
        return it == stream_requests.end() ? 0 : it->second;
    }
};

/// Theoretical stall-free compute cycles over the cycles the system was
/// actually busy.
inline double utilization(const Metrics& m) {
    if (!m.ran || m.active_cycles == 0) raise(ErrKind::NotRun, "no completed run");
    return static_cast<double>(m.ideal_cycles) / static_cast<double>(m.active_cycles);
}

/// Dense row-major workload operands, independent of any memory layout.
struct WorkloadData {
    std::vector<std::int8_t> a;        // GeMM A (MxK) / conv input (HxWxC_in)
    std::vector<std::int8_t> b;        // GeMM B (KxN) / conv weights (C_out x kh x kw x C_in)
    std::vector<std::int32_t> c;       // optional int32 initializer (MxN)
    QuantSpec qspec;
};

/// FNV-1a, so seeded data does not depend on the platform's std::hash.
inline std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline WorkloadData make_workload_data(const WorkloadSpec& wl, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto next_i8 = [&rng]() {
        return static_cast<std::int8_t>(static_cast<std::int32_t>(rng() % 256) - 128);
    };
    WorkloadData data;
    if (wl.kind == WorkloadKind::Conv) {
        const ConvParams& p = wl.conv;
        data.a.resize(p.h * p.w * p.c_in);
        data.b.resize(p.c_out * p.kernel_h * p.kernel_w * p.c_in);
    } else {
        data.a.resize(wl.m * wl.k);
        data.b.resize(wl.k * wl.n);
        if (!wl.quantize_output) {
            data.c.resize(wl.m * wl.n);
            for (auto& v : data.c)
                v = static_cast<std::int32_t>(rng() % (1u << 20)) - (1 << 19);
        }
    }
    for (auto& v : data.a) v = next_i8();
    for (auto& v : data.b) v = next_i8();
    if (wl.quantize_output) {
        data.qspec.multiplier = static_cast<std::int32_t>(rng() % 32767) + 1;
        data.qspec.shift = static_cast<std::uint8_t>(16 + rng() % 8);
        data.qspec.zero_point = static_cast<std::int8_t>(static_cast<int>(rng() % 129) - 64);
    }
    return data;
}

struct ReferenceResult {
    std::vector<std::int32_t> d;
    std::vector<std::int8_t> e;
};

inline ReferenceResult reference_output(const WorkloadSpec& wl, const WorkloadData& data) {
    ReferenceResult ref;
    if (wl.kind == WorkloadKind::Conv) {
        ref.d = reference_conv(data.a, data.b, wl.conv);
    } else {
        ref.d = reference_gemm(data.a, data.b,
                               (!wl.quantize_output && !data.c.empty()) ? &data.c : nullptr,
                               wl.m, wl.n, wl.k);
    }
    if (wl.quantize_output) {
        ref.e = reference_rescale(ref.d, data.qspec);
        ref.d.clear();
    }
    return ref;
}

struct RunOptions {
    FeatureFlags flags = FeatureFlags::level(kNumFlagLevels);
    std::optional<std::uint32_t> mode_override;
    std::uint64_t deadlock_budget = 0;   // no-progress window; 0 picks 10x ideal
    bool inject_fault = false;           // test hook: corrupts the golden comparison
};

struct RunResult {
    Metrics metrics;
    std::vector<std::int32_t> d;   // simulated output, int32 path
    std::vector<std::int8_t> e;    // simulated output, rescaled path
};

namespace detail {

inline CompileOptions to_compile_options(const RunOptions& opts) {
    CompileOptions c;
    c.use_transposer = opts.flags.transposer;
    c.use_broadcaster = opts.flags.broadcaster;
    c.implicit_im2col = opts.flags.implicit_im2col;
    c.policy = opts.flags.addr_mode_switching ? ModePolicy::Heuristic : ModePolicy::FixedFima;
    c.mode_override = opts.mode_override;
    return c;
}

/// Packs the dense operands into the layout images and loads them into the
/// scratchpad. Preloading models the already-resident tensors of a run and
/// is not part of the measured traffic.
inline void populate_memory(Scratchpad& mem, const WorkloadSpec& wl, const WorkloadData& data,
                            const Layout& layout, const SystemConfig& sys) {
    const auto& core = sys.core;
    auto load = [&mem](const TensorLayout& tl, const std::vector<std::uint8_t>& img) {
        mem.load_image(tl.base, img);
    };
    if (wl.kind == WorkloadKind::Conv) {
        const ConvParams& p = wl.conv;
        load(layout.at('a'), pack_blocked_channel(data.a.data(), p.h, p.w, p.c_in, core.ks));
        const auto wmat = conv_weight_matrix(data.b, p, core.ks);
        load(layout.at('b'),
             pack_block_row_major(reinterpret_cast<const std::uint8_t*>(wmat.data()), 1,
                                  p.kernel_h * p.kernel_w * p.c_in, p.c_out, core.ks, core.ns));
    } else {
        const std::uint64_t m = wl.m, n = wl.n, k = wl.k;
        if (wl.kind == WorkloadKind::TransposedGemm) {
            std::vector<std::int8_t> at(k * m);
            for (std::uint64_t i = 0; i < m; ++i)
                for (std::uint64_t kk = 0; kk < k; ++kk) at[kk * m + i] = data.a[i * k + kk];
            load(layout.at('a'),
                 pack_block_row_major(reinterpret_cast<const std::uint8_t*>(at.data()), 1, k, m,
                                      core.ks, core.ms));
        } else {
            load(layout.at('a'),
                 pack_block_row_major(reinterpret_cast<const std::uint8_t*>(data.a.data()), 1, m,
                                      k, core.ms, core.ks));
        }
        load(layout.at('b'),
             pack_block_row_major(reinterpret_cast<const std::uint8_t*>(data.b.data()), 1, k, n,
                                  core.ks, core.ns));
        if (!wl.quantize_output && layout.has('c'))
            load(layout.at('c'),
                 pack_block_row_major(reinterpret_cast<const std::uint8_t*>(data.c.data()), 4, m,
                                      n, core.ms, core.ns));
    }
    if (wl.quantize_output) {
        const auto& cl = layout.at('c');
        std::vector<std::uint8_t> img(cl.size_bytes, 0);
        for (std::size_t off = 0; off + kQuantSpecBytes <= img.size(); off += kQuantSpecBytes)
            pack_quant_spec(data.qspec, img.data() + off);
        load(cl, img);
    }
}

struct Engines {
    ReadDse a, b, c;
    WriteDse d, e;

    explicit Engines(const SystemConfig& sys)
        : a(0, sys.dse_a), b(1, sys.dse_b), c(2, sys.dse_c), d(3, sys.dse_d), e(4, sys.dse_e) {}

    ReadDse& read(char id) {
        switch (id) {
        case 'a': return a;
        case 'b': return b;
        case 'c': return c;
        }
        raise(ErrKind::ConfigParse, "not a read stream");
    }

    WriteDse& write(char id) {
        switch (id) {
        case 'd': return d;
        case 'e': return e;
        }
        raise(ErrKind::ConfigParse, "not a write stream");
    }
};

}  // namespace detail

/// Populates memory, steps the whole system cycle by cycle through every
/// schedule phase, validates the drained output tensors bit-exactly against
/// the reference kernels, and reports metrics. Feature flags change lowering
/// and engine policies, never results.
inline RunResult run(const SystemConfig& sys, const WorkloadSpec& wl, const WorkloadData& data,
                     const RunOptions& opts = {}) {
    sys.validate();
    const CompileOptions copts = detail::to_compile_options(opts);
    Schedule schedule = compile(wl, sys, copts);

    Scratchpad mem(sys.memory, sys.latency);
    detail::populate_memory(mem, wl, data, schedule.layout, sys);
    detail::Engines eng(sys);

    const std::uint64_t budget = opts.deadlock_budget != 0
                                     ? opts.deadlock_budget
                                     : std::max<std::uint64_t>(256, sys.deadlock_factor *
                                                                        schedule.ideal_cycles);
    GemmCore core(sys.core);
    Cycle cycle = 0;
    std::optional<Cycle> first_issue;
    Cycle end_cycle = 0;
    std::uint64_t core_stalls = 0;

    for (const Phase& phase : schedule.phases) {
        std::vector<ReadDse*> readers;
        std::vector<WriteDse*> writers;
        for (const auto& s : phase.reads) {
            ReadDse& r = eng.read(s.stream);
            r.set_synchronous(!opts.flags.prefetch);
            r.configure(s.config, mem);
            readers.push_back(&r);
        }
        for (const auto& s : phase.writes) {
            WriteDse& w = eng.write(s.stream);
            w.set_synchronous(!opts.flags.prefetch);
            w.configure(s.config, mem);
            writers.push_back(&w);
        }
        if (phase.kind == PhaseKind::Compute) core.configure(phase.core);

        WideWord scale;
        std::uint64_t last_progress_marker = 0;
        std::uint64_t idle_cycles = 0;
        while (true) {
            for (ReadDse* r : readers) r->tick(mem, cycle);

            if (phase.kind == PhaseKind::Copy) {
                ReadDse& src = *readers.at(0);
                WriteDse& dst = *writers.at(0);
                if (src.word_ready() && dst.can_accept()) dst.offer(src.pop_word(), cycle);
            } else if (!core.done()) {
                ReadDse& ra = eng.read('a');
                ReadDse& rb = eng.read('b');
                const bool need_c = (phase.core.consume_c || phase.quantize) &&
                                    core.at_pass_start();
                WriteDse& sink = phase.quantize ? eng.write('e') : eng.write('d');
                const bool sink_ok = !core.emits_now() || sink.can_accept();
                const bool c_ok = !need_c || eng.read('c').word_ready();
                if (ra.word_ready() && rb.word_ready() && c_ok && sink_ok) {
                    const WideWord aw = ra.pop_word();
                    const WideWord bw = rb.pop_word();
                    std::optional<WideWord> cw;
                    if (need_c) {
                        cw = eng.read('c').pop_word();
                        if (phase.quantize) scale = *cw;
                    }
                    auto d_tile =
                        core.fire(aw, bw, (phase.core.consume_c && cw) ? &*cw : nullptr);
                    if (d_tile) {
                        WideWord out = phase.quantize
                                           ? reshape_word(quant_word(*d_tile, scale),
                                                          sink.design().num_channels,
                                                          sink.design().lane_bytes())
                                           : reshape_word(std::move(*d_tile),
                                                          sink.design().num_channels,
                                                          sink.design().lane_bytes());
                        const bool accepted = sink.offer(out, cycle);
                        if (!accepted)
                            raise(ErrKind::Deadlock, "sink rejected a word it promised to take");
                    }
                } else {
                    core.note_stall();
                    ++core_stalls;
                }
            }

            for (WriteDse* w : writers) w->tick(mem, cycle);
            mem.tick(cycle);

            for (ReadDse* r : readers)
                if (!first_issue && r->first_issue_cycle()) first_issue = r->first_issue_cycle();
            for (WriteDse* w : writers)
                if (!first_issue && w->first_issue_cycle()) first_issue = w->first_issue_cycle();

            bool done = mem.idle() && (phase.kind == PhaseKind::Copy || core.done());
            for (ReadDse* r : readers) done = done && r->is_complete();
            for (WriteDse* w : writers) done = done && w->is_complete();
            if (done) {
                end_cycle = cycle;
                ++cycle;
                break;
            }

            std::uint64_t marker = mem.total_accesses() + mem.total_commits();
            for (ReadDse* r : readers) marker += r->delivered_words();
            for (WriteDse* w : writers) marker += w->accepted_words();
            if (marker != last_progress_marker) {
                last_progress_marker = marker;
                idle_cycles = 0;
            } else if (++idle_cycles > budget) {
                raise(ErrKind::Deadlock,
                      "no progress for " + std::to_string(idle_cycles) + " cycles in " +
                          wl.id);
            }
            ++cycle;
        }
    }

    RunResult result;
    result.metrics.ideal_cycles = schedule.ideal_cycles;
    result.metrics.active_cycles = end_cycle - first_issue.value_or(0);
    result.metrics.total_memory_accesses = mem.total_accesses();
    result.metrics.conflict_stall_cycles = mem.conflict_stall_cycles();
    result.metrics.core_stall_cycles = core_stalls;
    result.metrics.stream_requests['a'] = eng.a.issued_requests();
    result.metrics.stream_requests['b'] = eng.b.issued_requests();
    result.metrics.stream_requests['c'] = eng.c.issued_requests();
    result.metrics.stream_requests['d'] = eng.d.issued_requests();
    result.metrics.stream_requests['e'] = eng.e.issued_requests();
    result.metrics.ran = true;

    // Drain the outputs and check them against the golden kernels. Timing
    // features must never change values.
    ReferenceResult ref = reference_output(wl, data);
    if (opts.inject_fault) {
        if (!ref.d.empty()) ref.d[0] ^= 1;
        if (!ref.e.empty()) ref.e[0] = static_cast<std::int8_t>(ref.e[0] ^ 1);
    }
    const auto& core_spec = sys.core;
    const std::uint64_t out_m =
        wl.kind == WorkloadKind::Conv ? wl.conv.out_h() * wl.conv.out_w() : wl.m;
    const std::uint64_t out_n = wl.kind == WorkloadKind::Conv ? wl.conv.c_out : wl.n;
    if (wl.quantize_output) {
        const auto& el = schedule.layout.at('e');
        const auto img = mem.dump_image(el.base, el.size_bytes);
        const auto raw =
            unpack_block_row_major(img.data(), 1, out_m, out_n, core_spec.ms, core_spec.ns);
        result.e.assign(reinterpret_cast<const std::int8_t*>(raw.data()),
                        reinterpret_cast<const std::int8_t*>(raw.data()) + raw.size());
        if (result.e != ref.e)
            raise(ErrKind::CorrectnessMismatch, wl.id + ": rescaled output != reference");
    } else {
        const auto& dl = schedule.layout.at('d');
        const auto img = mem.dump_image(dl.base, dl.size_bytes);
        const auto raw =
            unpack_block_row_major(img.data(), 4, out_m, out_n, core_spec.ms, core_spec.ns);
        result.d.resize(out_m * out_n);
        for (std::size_t v = 0; v < result.d.size(); ++v)
            result.d[v] = load_i32(raw.data() + 4 * v);
        if (result.d != ref.d)
            raise(ErrKind::CorrectnessMismatch, wl.id + ": output != reference");
    }
    return result;
}

/// One ablation row: a workload run under one feature level.
struct AblateRow {
    std::string workload_id;
    std::string group;
    std::string dims;
    int level = 1;
    Metrics metrics;
    std::string error;   // empty on success; failed runs keep the sweep going
};

inline std::vector<AblateRow> ablate(const SystemConfig& sys,
                                     const std::vector<WorkloadSpec>& workloads,
                                     const std::vector<int>& levels, std::uint64_t seed) {
    std::vector<AblateRow> rows;
    for (const auto& wl : workloads) {
        const WorkloadData data = make_workload_data(wl, seed ^ stable_hash(wl.id));
        for (int lvl : levels) {
            AblateRow row;
            row.workload_id = wl.id;
            row.group = to_string(wl.kind);
            row.dims = wl.dims();
            row.level = lvl;
            try {
                RunOptions opts;
                opts.flags = FeatureFlags::level(lvl);
                row.metrics = run(sys, wl, data, opts).metrics;
            } catch (const SimError& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace streamsim
