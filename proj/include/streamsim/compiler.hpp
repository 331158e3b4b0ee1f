#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamsim/accel.hpp"
#include "streamsim/agu.hpp"
#include "streamsim/dse.hpp"
#include "streamsim/error.hpp"
#include "streamsim/remap.hpp"
#include "streamsim/system.hpp"

namespace streamsim {

enum class WorkloadKind : std::uint8_t { Gemm, TransposedGemm, Conv };

inline const char* to_string(WorkloadKind k) {
    switch (k) {
    case WorkloadKind::Gemm: return "gemm";
    case WorkloadKind::TransposedGemm: return "transposed_gemm";
    case WorkloadKind::Conv: return "conv";
    }
    return "?";
}

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::Gemm;
    std::string id;
    std::uint64_t m = 0, n = 0, k = 0;   // gemm / transposed gemm
    ConvParams conv;                     // conv
    bool quantize_output = false;

    std::string dims() const {
        if (kind == WorkloadKind::Conv) {
            return std::to_string(conv.h) + "x" + std::to_string(conv.w) + "x" +
                   std::to_string(conv.c_in) + "->" + std::to_string(conv.c_out) + " k" +
                   std::to_string(conv.kernel_h) + "x" + std::to_string(conv.kernel_w) + " s" +
                   std::to_string(conv.stride_h) + "x" + std::to_string(conv.stride_w);
        }
        return std::to_string(m) + "x" + std::to_string(n) + "x" + std::to_string(k);
    }
};

enum class LayoutScheme : std::uint8_t { BlockRowMajor, BlockedChannel };

struct TensorLayout {
    Addr base = 0;
    std::uint64_t size_bytes = 0;
    LayoutScheme scheme = LayoutScheme::BlockRowMajor;
    std::uint32_t addressing_mode = 0;   // R_S used by the stream serving this tensor
};

struct Layout {
    std::map<char, TensorLayout> tensors;   // keyed by stream id 'a'..'e' plus 's' (scratch)
    std::uint64_t memory_bytes = 0;

    const TensorLayout& at(char id) const {
        auto it = tensors.find(id);
        if (it == tensors.end()) raise(ErrKind::ConfigParse, std::string("no tensor ") + id);
        return it->second;
    }
    bool has(char id) const { return tensors.count(id) != 0; }
};

enum class ModePolicy : std::uint8_t { FixedFima, Heuristic };

struct CompileOptions {
    bool use_transposer = true;
    bool use_broadcaster = true;
    bool implicit_im2col = true;
    ModePolicy policy = ModePolicy::Heuristic;
    std::optional<std::uint32_t> mode_override;   // force one R_S for every stream
};

struct StreamSchedule {
    char stream = 'a';              // which engine runs it
    StreamConfig config;
    std::uint64_t expected_words = 0;
};

enum class PhaseKind : std::uint8_t { Copy, Compute };

/// One self-contained stage of a run: either a read->write copy pipe or a
/// compute stage driving the GeMM core (and the rescale unit when the
/// workload quantizes its output).
struct Phase {
    PhaseKind kind = PhaseKind::Compute;
    std::vector<StreamSchedule> reads;
    std::vector<StreamSchedule> writes;
    CoreSchedule core;
    bool quantize = false;
};

struct Schedule {
    std::vector<Phase> phases;
    std::uint64_t ideal_cycles = 0;
    Layout layout;
};

namespace detail {

inline void require_divisible(std::uint64_t value, std::uint64_t divisor, const char* what) {
    if (divisor == 0 || value % divisor != 0)
        raise(ErrKind::IndivisibleWorkload,
              std::string(what) + " = " + std::to_string(value) + " not divisible by " +
                  std::to_string(divisor));
}

/// Spatial strides that sweep a contiguous byte region in enumeration order
/// (suffix-product rule over the design-time spatial bounds).
inline std::vector<std::int64_t> contiguous_spatial(const DseDesign& d) {
    std::vector<std::int64_t> s(d.spatial_bounds.size());
    std::int64_t run = d.gather_bytes();
    for (std::size_t i = s.size(); i-- > 0;) {
        s[i] = run;
        run *= static_cast<std::int64_t>(d.spatial_bounds[i]);
    }
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Layout packing helpers (host-side data marshalling, not simulated traffic).
// ---------------------------------------------------------------------------

/// Packs a row-major rows x cols matrix into the block-row-major image the
/// streams expect: br x bc element blocks stored contiguously, blocks in
/// row-major block order, elements row-major inside each block.
inline std::vector<std::uint8_t> pack_block_row_major(const std::uint8_t* data,
                                                      std::uint32_t elem_bytes,
                                                      std::uint64_t rows, std::uint64_t cols,
                                                      std::uint64_t br, std::uint64_t bc) {
    detail::require_divisible(rows, br, "rows");
    detail::require_divisible(cols, bc, "cols");
    std::vector<std::uint8_t> out(rows * cols * elem_bytes);
    const std::uint64_t col_blocks = cols / bc;
    const std::uint64_t block_bytes = br * bc * elem_bytes;
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c) {
            const std::uint64_t block = (r / br) * col_blocks + (c / bc);
            const std::uint64_t within = (r % br) * bc + (c % bc);
            std::copy_n(data + (r * cols + c) * elem_bytes, elem_bytes,
                        out.data() + block * block_bytes + within * elem_bytes);
        }
    return out;
}

inline std::vector<std::uint8_t> unpack_block_row_major(const std::uint8_t* image,
                                                        std::uint32_t elem_bytes,
                                                        std::uint64_t rows, std::uint64_t cols,
                                                        std::uint64_t br, std::uint64_t bc) {
    detail::require_divisible(rows, br, "rows");
    detail::require_divisible(cols, bc, "cols");
    std::vector<std::uint8_t> out(rows * cols * elem_bytes);
    const std::uint64_t col_blocks = cols / bc;
    const std::uint64_t block_bytes = br * bc * elem_bytes;
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c) {
            const std::uint64_t block = (r / br) * col_blocks + (c / bc);
            const std::uint64_t within = (r % br) * bc + (c % bc);
            std::copy_n(image + block * block_bytes + within * elem_bytes, elem_bytes,
                        out.data() + (r * cols + c) * elem_bytes);
        }
    return out;
}

/// Blocked-channel image of an H x W x C feature map: channel blocks of cb
/// become the innermost (word-contiguous) dimension, i.e. (C/cb) x H x W x cb.
inline std::vector<std::uint8_t> pack_blocked_channel(const std::int8_t* input, std::uint64_t h,
                                                      std::uint64_t w, std::uint64_t c,
                                                      std::uint64_t cb) {
    detail::require_divisible(c, cb, "channels");
    std::vector<std::uint8_t> out(h * w * c);
    for (std::uint64_t y = 0; y < h; ++y)
        for (std::uint64_t x = 0; x < w; ++x)
            for (std::uint64_t ch = 0; ch < c; ++ch) {
                const std::uint64_t blk = ch / cb;
                out[((blk * h + y) * w + x) * cb + (ch % cb)] =
                    static_cast<std::uint8_t>(input[(y * w + x) * c + ch]);
            }
    return out;
}

/// Weight image for convolution: the kernel and channel-block loops fold into
/// one linear reduction axis so a 3-D temporal pattern suffices for the
/// weight stream. Row order matches the input stream's reduction order:
/// channel block innermost, then kernel x, then kernel y.
inline std::vector<std::int8_t> conv_weight_matrix(const std::vector<std::int8_t>& weights,
                                                   const ConvParams& p, std::uint32_t ks) {
    const std::uint64_t cb_count = p.c_in / ks;
    const std::uint64_t k_rows = p.kernel_h * p.kernel_w * p.c_in;
    std::vector<std::int8_t> mat(k_rows * p.c_out);
    for (std::uint64_t oc = 0; oc < p.c_out; ++oc)
        for (std::uint64_t i = 0; i < p.kernel_h; ++i)
            for (std::uint64_t j = 0; j < p.kernel_w; ++j)
                for (std::uint64_t ci = 0; ci < p.c_in; ++ci) {
                    const std::uint64_t cb = ci / ks;
                    const std::uint64_t rblock = cb + cb_count * (j + p.kernel_w * i);
                    const std::uint64_t row = rblock * ks + (ci % ks);
                    mat[row * p.c_out + oc] =
                        weights[((oc * p.kernel_h + i) * p.kernel_w + j) * p.c_in + ci];
                }
    return mat;
}

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

namespace detail {

struct TileCounts {
    std::uint64_t mt = 0, nt = 0, kt = 0;
};

inline TileCounts gemm_tiles(const WorkloadSpec& wl, const GemmCoreSpec& core) {
    require_divisible(wl.m, core.ms, "M");
    require_divisible(wl.n, core.ns, "N");
    require_divisible(wl.k, core.ks, "K");
    return {wl.m / core.ms, wl.n / core.ns, wl.k / core.ks};
}

inline TileCounts conv_tiles(const ConvParams& p, const GemmCoreSpec& core) {
    if (p.h < p.kernel_h || p.w < p.kernel_w)
        raise(ErrKind::IndivisibleWorkload, "kernel larger than input");
    require_divisible(p.c_in, core.ks, "C_in");
    require_divisible(p.c_out, core.ns, "C_out");
    require_divisible(p.out_w(), core.ms, "output width");
    return {p.out_h() * p.out_w() / core.ms, p.c_out / core.ns,
            p.kernel_h * p.kernel_w * p.c_in / core.ks};
}

inline StreamSchedule make_stream(char id, const DseDesign& design, AccessPattern pattern,
                                  std::uint32_t mode,
                                  std::vector<bool> ext_enables = {}) {
    StreamSchedule s;
    s.stream = id;
    s.config.pattern = std::move(pattern);
    s.config.addressing_mode = mode;
    s.config.extension_enables = std::move(ext_enables);
    s.config.extension_enables.resize(design.extensions.size(), false);
    s.expected_words = s.config.pattern.total_steps();
    return s;
}

inline std::vector<bool> enable_kind(const DseDesign& design, ExtKind kind) {
    std::vector<bool> en(design.extensions.size(), false);
    for (std::size_t i = 0; i < design.extensions.size(); ++i)
        if (design.extensions[i] == kind) en[i] = true;
    return en;
}

/// Output-side stream schedules shared by every compute lowering: the D or E
/// write stream and, when scheduled, the C stream (int32 initializer tiles or
/// broadcast rescale constants).
inline void add_output_streams(Phase& phase, const SystemConfig& sys, const Layout& layout,
                               const WorkloadSpec& wl, const TileCounts& t,
                               const CompileOptions& opts) {
    const auto& core = sys.core;
    const std::int64_t blk_acc = std::int64_t{core.ms} * core.ns * 4;
    const std::int64_t blk_e = std::int64_t{core.ms} * core.ns;
    const bool quant = wl.quantize_output;
    phase.quantize = quant;
    phase.core.mt = t.mt;
    phase.core.nt = t.nt;
    phase.core.kt = t.kt;
    phase.core.consume_c = !quant && layout.has('c');

    if (quant) {
        // Rescale constants ride stream C; with the broadcaster the engine
        // fetches only the source lane, otherwise every lane reads its own
        // copy of the constants.
        const auto& cl = layout.at('c');
        AccessPattern pc;
        pc.base = cl.base;
        pc.temporal_bounds = {t.nt, t.mt};
        pc.temporal_strides = {0, 0};
        pc.spatial_strides = detail::contiguous_spatial(sys.dse_c);
        const bool bcast =
            opts.use_broadcaster && sys.dse_c.lane_bytes() >= kQuantSpecBytes;
        auto sched = detail::make_stream(
            'c', sys.dse_c, std::move(pc), cl.addressing_mode,
            bcast ? detail::enable_kind(sys.dse_c, ExtKind::Broadcaster) : std::vector<bool>{});
        sched.config.broadcast_source_lane = 0;
        phase.reads.push_back(std::move(sched));

        const auto& el = layout.at('e');
        AccessPattern pe;
        pe.base = el.base;
        pe.temporal_bounds = {t.nt, t.mt};
        pe.temporal_strides = {blk_e, static_cast<std::int64_t>(t.nt) * blk_e};
        pe.spatial_strides = detail::contiguous_spatial(sys.dse_e);
        phase.writes.push_back(
            detail::make_stream('e', sys.dse_e, std::move(pe), el.addressing_mode));
    } else {
        if (phase.core.consume_c) {
            const auto& cl = layout.at('c');
            AccessPattern pc;
            pc.base = cl.base;
            pc.temporal_bounds = {t.nt, t.mt};
            pc.temporal_strides = {blk_acc, static_cast<std::int64_t>(t.nt) * blk_acc};
            pc.spatial_strides = detail::contiguous_spatial(sys.dse_c);
            phase.reads.push_back(
                detail::make_stream('c', sys.dse_c, std::move(pc), cl.addressing_mode));
        }
        const auto& dl = layout.at('d');
        AccessPattern pd;
        pd.base = dl.base;
        pd.temporal_bounds = {t.nt, t.mt};
        pd.temporal_strides = {blk_acc, static_cast<std::int64_t>(t.nt) * blk_acc};
        pd.spatial_strides = detail::contiguous_spatial(sys.dse_d);
        phase.writes.push_back(
            detail::make_stream('d', sys.dse_d, std::move(pd), dl.addressing_mode));
    }
}

}  // namespace detail

/// Tensor regions must be pairwise disjoint and inside the scratchpad.
inline void validate_layout(const Layout& layout) {
    std::vector<std::pair<Addr, Addr>> spans;
    for (const auto& [id, tl] : layout.tensors) {
        if (layout.memory_bytes != 0 && tl.base + tl.size_bytes > layout.memory_bytes)
            raise(ErrKind::OutOfMemory, std::string("tensor ") + id + " exceeds memory");
        spans.emplace_back(tl.base, tl.base + tl.size_bytes);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second)
            raise(ErrKind::LayoutOverlap, "tensor regions overlap");
}

/// GeMM lowering: the A stream loops (k, n, m) innermost-first with a zero
/// n-stride (operand reuse), the B stream mirrors it with a zero m-stride,
/// and the output streams walk tiles in pass order.
inline Schedule lower_gemm(const WorkloadSpec& wl, const Layout& layout, const SystemConfig& sys,
                           const CompileOptions& opts) {
    validate_layout(layout);
    const auto t = detail::gemm_tiles(wl, sys.core);
    const std::int64_t blk_a = std::int64_t{sys.core.ms} * sys.core.ks;
    const std::int64_t blk_b = std::int64_t{sys.core.ks} * sys.core.ns;

    Phase phase;
    phase.kind = PhaseKind::Compute;

    AccessPattern pa;
    pa.base = layout.at('a').base;
    pa.temporal_bounds = {t.kt, t.nt, t.mt};
    pa.temporal_strides = {blk_a, 0, static_cast<std::int64_t>(t.kt) * blk_a};
    pa.spatial_strides = detail::contiguous_spatial(sys.dse_a);
    phase.reads.push_back(
        detail::make_stream('a', sys.dse_a, std::move(pa), layout.at('a').addressing_mode));

    AccessPattern pb;
    pb.base = layout.at('b').base;
    pb.temporal_bounds = {t.kt, t.nt, t.mt};
    pb.temporal_strides = {static_cast<std::int64_t>(t.nt) * blk_b, blk_b, 0};
    pb.spatial_strides = detail::contiguous_spatial(sys.dse_b);
    phase.reads.push_back(
        detail::make_stream('b', sys.dse_b, std::move(pb), layout.at('b').addressing_mode));

    detail::add_output_streams(phase, sys, layout, wl, t, opts);

    Schedule sched;
    sched.layout = layout;
    sched.ideal_cycles = t.mt * t.nt * t.kt;
    sched.phases.push_back(std::move(phase));
    return sched;
}

/// Transposed-GeMM lowering: the A operand lives in memory K-major. With the
/// transposer the stream fetches whole K-major tiles (one word per channel)
/// and flips them on the fly; without it the spatial strides gather the
/// transposed tile directly, one byte-granular request per tile element
/// column, which costs more, scattered requests.
inline Schedule lower_transposed_gemm(const WorkloadSpec& wl, const Layout& layout,
                                      const SystemConfig& sys, const CompileOptions& opts) {
    validate_layout(layout);
    const auto t = detail::gemm_tiles(wl, sys.core);
    const std::int64_t blk_a = std::int64_t{sys.core.ms} * sys.core.ks;
    if (sys.dse_a.spatial_bounds.size() != 2 ||
        sys.dse_a.spatial_bounds[0] != sys.core.ms || sys.dse_a.spatial_bounds[1] != sys.core.ks)
        raise(ErrKind::ShapeMismatch, "stream A spatial geometry must be [Ms, Ks]");

    Phase phase;
    phase.kind = PhaseKind::Compute;

    AccessPattern pa;
    pa.base = layout.at('a').base;
    pa.temporal_bounds = {t.kt, t.nt, t.mt};
    pa.temporal_strides = {static_cast<std::int64_t>(t.mt) * blk_a, 0, blk_a};
    std::vector<bool> ext;
    if (opts.use_transposer) {
        if (sys.core.ms != sys.core.ks ||
            sys.dse_a.num_channels != sys.dse_a.lane_bytes())
            raise(ErrKind::ShapeMismatch, "tile transposition needs a square channel geometry");
        pa.spatial_strides = detail::contiguous_spatial(sys.dse_a);
        ext = detail::enable_kind(sys.dse_a, ExtKind::Transposer);
    } else {
        // Gather the transposed tile: lane m collects column m of the K-major
        // block, one element per request.
        pa.spatial_strides = {1, static_cast<std::int64_t>(sys.core.ms)};
    }
    phase.reads.push_back(detail::make_stream('a', sys.dse_a, std::move(pa),
                                              layout.at('a').addressing_mode, std::move(ext)));

    const std::int64_t blk_b = std::int64_t{sys.core.ks} * sys.core.ns;
    AccessPattern pb;
    pb.base = layout.at('b').base;
    pb.temporal_bounds = {t.kt, t.nt, t.mt};
    pb.temporal_strides = {static_cast<std::int64_t>(t.nt) * blk_b, blk_b, 0};
    pb.spatial_strides = detail::contiguous_spatial(sys.dse_b);
    phase.reads.push_back(
        detail::make_stream('b', sys.dse_b, std::move(pb), layout.at('b').addressing_mode));

    detail::add_output_streams(phase, sys, layout, wl, t, opts);

    Schedule sched;
    sched.layout = layout;
    sched.ideal_cycles = t.mt * t.nt * t.kt;
    sched.phases.push_back(std::move(phase));
    return sched;
}

/// Convolution lowering. Implicit mode drives the input stream with a 6-D
/// temporal nest over the blocked-channel layout so the delivered word
/// sequence equals the im2col matrix streamed row-block by row-block.
/// Explicit mode first materializes that matrix into a scratch region
/// through a read/write engine pair, then runs the GeMM schedule on it.
inline Schedule lower_conv(const WorkloadSpec& wl, const Layout& layout, const SystemConfig& sys,
                           const CompileOptions& opts) {
    validate_layout(layout);
    const ConvParams& p = wl.conv;
    const auto t = detail::conv_tiles(p, sys.core);
    const std::uint32_t ks = sys.core.ks;
    const std::uint32_t ms = sys.core.ms;
    if (sys.dse_a.spatial_bounds.size() != 2 || sys.dse_a.spatial_bounds[0] != ms ||
        sys.dse_a.spatial_bounds[1] != ks)
        raise(ErrKind::ShapeMismatch, "stream A spatial geometry must be [Ms, Ks]");

    const std::int64_t row_bytes = static_cast<std::int64_t>(p.w) * ks;
    const std::int64_t plane_bytes = static_cast<std::int64_t>(p.h) * p.w * ks;
    const std::int64_t blk_a = std::int64_t{ms} * ks;
    const std::int64_t blk_b = std::int64_t{ks} * sys.core.ns;

    // Input gather nest, innermost first: channel block, kernel x, kernel y
    // (the reduction), then output-channel reuse, then the output tiling.
    AccessPattern gather;
    gather.base = layout.at('a').base;
    gather.temporal_bounds = {p.c_in / ks, p.kernel_w, p.kernel_h};
    gather.temporal_strides = {plane_bytes, ks,
                               static_cast<std::int64_t>(p.w) * ks};
    gather.spatial_strides = {static_cast<std::int64_t>(p.stride_w) * ks, 1};

    AccessPattern pb;
    pb.base = layout.at('b').base;
    pb.temporal_bounds = {t.kt, t.nt, t.mt};
    pb.temporal_strides = {static_cast<std::int64_t>(t.nt) * blk_b, blk_b, 0};
    pb.spatial_strides = detail::contiguous_spatial(sys.dse_b);

    Schedule sched;
    sched.layout = layout;
    sched.ideal_cycles = t.mt * t.nt * t.kt;

    if (opts.implicit_im2col) {
        if (sys.dse_a.max_temporal_dims < 6)
            raise(ErrKind::DimensionOverflow, "implicit im2col needs 6 temporal dims");
        AccessPattern pa = gather;
        pa.temporal_bounds.insert(pa.temporal_bounds.end(),
                                  {t.nt, p.out_w() / ms, p.out_h()});
        pa.temporal_strides.insert(
            pa.temporal_strides.end(),
            {0, static_cast<std::int64_t>(std::uint64_t{ms} * p.stride_w * ks),
             static_cast<std::int64_t>(p.stride_h) * row_bytes});
        Phase phase;
        phase.kind = PhaseKind::Compute;
        phase.reads.push_back(
            detail::make_stream('a', sys.dse_a, std::move(pa), layout.at('a').addressing_mode));
        phase.reads.push_back(
            detail::make_stream('b', sys.dse_b, std::move(pb), layout.at('b').addressing_mode));
        detail::add_output_streams(phase, sys, layout, wl, t, opts);
        sched.phases.push_back(std::move(phase));
        return sched;
    }

    // Explicit mode, phase 1: copy the gathered patches out to the scratch
    // im2col image (read on engine A, write on engine E).
    if (!layout.has('s')) raise(ErrKind::InsufficientScratch, "no scratch region allocated");
    const auto& sl = layout.at('s');
    AccessPattern copy_rd = gather;
    copy_rd.temporal_bounds.insert(copy_rd.temporal_bounds.end(),
                                   {p.out_w() / ms, p.out_h()});
    copy_rd.temporal_strides.insert(
        copy_rd.temporal_strides.end(),
        {static_cast<std::int64_t>(std::uint64_t{ms} * p.stride_w * ks),
         static_cast<std::int64_t>(p.stride_h) * row_bytes});

    AccessPattern copy_wr;
    copy_wr.base = sl.base;
    copy_wr.temporal_bounds = {t.kt, t.mt};
    copy_wr.temporal_strides = {blk_a, static_cast<std::int64_t>(t.kt) * blk_a};
    copy_wr.spatial_strides = detail::contiguous_spatial(sys.dse_e);

    Phase copy;
    copy.kind = PhaseKind::Copy;
    copy.reads.push_back(
        detail::make_stream('a', sys.dse_a, std::move(copy_rd), layout.at('a').addressing_mode));
    copy.writes.push_back(detail::make_stream('e', sys.dse_e, std::move(copy_wr),
                                              sl.addressing_mode));
    sched.phases.push_back(std::move(copy));

    // Phase 2: plain GeMM over the materialized matrix.
    AccessPattern pa;
    pa.base = sl.base;
    pa.temporal_bounds = {t.kt, t.nt, t.mt};
    pa.temporal_strides = {blk_a, 0, static_cast<std::int64_t>(t.kt) * blk_a};
    pa.spatial_strides = detail::contiguous_spatial(sys.dse_a);
    Phase phase;
    phase.kind = PhaseKind::Compute;
    phase.reads.push_back(detail::make_stream('a', sys.dse_a, std::move(pa), sl.addressing_mode));
    phase.reads.push_back(
        detail::make_stream('b', sys.dse_b, std::move(pb), layout.at('b').addressing_mode));
    detail::add_output_streams(phase, sys, layout, wl, t, opts);
    sched.phases.push_back(std::move(phase));
    return sched;
}

inline Schedule lower(const WorkloadSpec& wl, const Layout& layout, const SystemConfig& sys,
                      const CompileOptions& opts) {
    switch (wl.kind) {
    case WorkloadKind::Gemm: return lower_gemm(wl, layout, sys, opts);
    case WorkloadKind::TransposedGemm: return lower_transposed_gemm(wl, layout, sys, opts);
    case WorkloadKind::Conv: return lower_conv(wl, layout, sys, opts);
    }
    raise(ErrKind::ConfigParse, "unknown workload kind");
}

// ---------------------------------------------------------------------------
// Allocation and addressing-mode policy
// ---------------------------------------------------------------------------

namespace detail {

struct TensorReq {
    char id;
    std::uint64_t size;
    LayoutScheme scheme;
};

inline std::vector<TensorReq> tensor_requirements(const WorkloadSpec& wl,
                                                  const SystemConfig& sys,
                                                  const CompileOptions& opts) {
    std::vector<TensorReq> req;
    const std::uint64_t acc_word =
        std::uint64_t{sys.dse_c.num_channels} * sys.dse_c.lane_bytes();
    if (wl.kind == WorkloadKind::Conv) {
        const ConvParams& p = wl.conv;
        const std::uint64_t m = p.out_h() * p.out_w();
        const std::uint64_t k = p.kernel_h * p.kernel_w * p.c_in;
        req.push_back({'a', p.h * p.w * p.c_in, LayoutScheme::BlockedChannel});
        req.push_back({'b', k * p.c_out, LayoutScheme::BlockRowMajor});
        if (wl.quantize_output) {
            req.push_back({'c', acc_word, LayoutScheme::BlockRowMajor});
            req.push_back({'e', m * p.c_out, LayoutScheme::BlockRowMajor});
        } else {
            req.push_back({'d', m * p.c_out * 4, LayoutScheme::BlockRowMajor});
        }
        if (!opts.implicit_im2col)
            req.push_back({'s', m * k, LayoutScheme::BlockRowMajor});
    } else {
        req.push_back({'a', wl.m * wl.k, LayoutScheme::BlockRowMajor});
        req.push_back({'b', wl.k * wl.n, LayoutScheme::BlockRowMajor});
        if (wl.quantize_output) {
            req.push_back({'c', acc_word, LayoutScheme::BlockRowMajor});
            req.push_back({'e', wl.m * wl.n, LayoutScheme::BlockRowMajor});
        } else {
            req.push_back({'c', wl.m * wl.n * 4, LayoutScheme::BlockRowMajor});
            req.push_back({'d', wl.m * wl.n * 4, LayoutScheme::BlockRowMajor});
        }
    }
    return req;
}

inline std::uint32_t fima_mode_index(const BankMap& geom) {
    for (std::uint32_t i = 0; i < geom.group_options.size(); ++i)
        if (geom.group_options[i] == geom.num_banks) return i;
    return 0;
}

/// First-step request addresses of a stream: the probe batch the mode
/// heuristic scores (one batch is what the banks see in a single cycle).
inline std::vector<Addr> probe_addresses(const StreamSchedule& s, const DseDesign& design) {
    std::vector<Addr> addrs;
    const auto offsets =
        detail::enumerate_spatial_offsets(design.spatial_bounds, s.config.pattern.spatial_strides);
    const auto plan = build_fetch_plan(design, offsets);
    for (const auto& fetches : plan)
        for (const auto& f : fetches)
            addrs.push_back(static_cast<Addr>(
                static_cast<std::int64_t>(s.config.pattern.base) + f.word_rel));
    return addrs;
}

inline std::size_t distinct_banks(const BankMap& geom, std::uint32_t mode,
                                  const std::vector<Addr>& addrs) {
    BankMap view = geom;
    view.selected_mode = mode;
    std::set<std::uint32_t> banks;
    for (auto a : addrs)
        if (a < geom.size_bytes()) banks.insert(map_address(view, a).bank);
    return banks.size();
}

}  // namespace detail

/// Assigns base addresses (bank-word aligned) and per-tensor addressing
/// modes. The fixed policy pins every stream to fully-interleaved mode; the
/// heuristic probes each stream's first-cycle request batch under every mode
/// option, keeps the one hitting the most distinct banks, and additionally
/// partitions tensors into separate bank groups when a grouped option can
/// isolate the streams from one another without losing intra-stream spread.
inline Layout allocate(const WorkloadSpec& wl, const SystemConfig& sys,
                       const CompileOptions& opts) {
    const BankMap& geom = sys.memory;
    const std::uint64_t align = std::uint64_t{geom.word_bytes()} * 8;
    const std::uint32_t fima = detail::fima_mode_index(geom);
    const std::uint32_t forced = opts.mode_override.value_or(fima);
    auto reqs = detail::tensor_requirements(wl, sys, opts);

    Layout layout;
    layout.memory_bytes = geom.size_bytes();
    Addr cursor = 0;
    for (const auto& r : reqs) {
        cursor = (cursor + align - 1) / align * align;
        if (cursor + r.size > geom.size_bytes())
            raise(ErrKind::OutOfMemory, "tensors exceed scratchpad capacity");
        layout.tensors[r.id] = TensorLayout{cursor, r.size, r.scheme, forced};
        cursor += r.size;
    }
    if (opts.policy == ModePolicy::FixedFima || opts.mode_override) return layout;

    // Heuristic: score each stream's probe batch under every mode option.
    Schedule trial = lower(wl, layout, sys, opts);
    struct ProbeInfo {
        char id;
        std::vector<Addr> addrs;
        std::size_t base_score = 0;
    };
    std::vector<ProbeInfo> probes;
    for (const auto& phase : trial.phases) {
        auto add = [&](const StreamSchedule& s) {
            const char tensor = (phase.kind == PhaseKind::Copy && s.stream == 'e') ? 's'
                                : (s.stream == 'a' && !layout.has('a'))            ? 's'
                                                                                   : s.stream;
            if (!layout.has(tensor)) return;
            for (auto& p : probes)
                if (p.id == tensor) return;   // keep the first phase's pattern
            probes.push_back({tensor, detail::probe_addresses(s, sys.design(s.stream)), 0});
        };
        for (const auto& s : phase.reads) add(s);
        for (const auto& s : phase.writes) add(s);
    }

    for (auto& p : probes) {
        std::uint32_t best = fima;
        std::size_t best_score = detail::distinct_banks(geom, fima, p.addrs);
        for (std::uint32_t m = 0; m < geom.group_options.size(); ++m) {
            const std::size_t score = detail::distinct_banks(geom, m, p.addrs);
            if (score > best_score) {
                best = m;
                best_score = score;
            }
        }
        layout.tensors[p.id].addressing_mode = best;
        p.base_score = best_score;
    }

    // Isolation pass: spread tensors across bank groups under the largest
    // grouped option when every stream keeps its intra-batch spread there.
    std::uint32_t gima_mode = geom.group_options.size();
    std::uint32_t gima_size = 0;
    for (std::uint32_t m = 0; m < geom.group_options.size(); ++m) {
        const std::uint32_t g = geom.group_options[m];
        if (g > 1 && g < geom.num_banks && g > gima_size) {
            gima_size = g;
            gima_mode = m;
        }
    }
    if (gima_mode < geom.group_options.size() && probes.size() >= 2) {
        const std::uint64_t group_bytes =
            std::uint64_t{gima_size} * geom.bank_depth_words * geom.word_bytes();
        const std::uint32_t num_groups = geom.num_banks / gima_size;
        std::vector<std::uint64_t> group_cursor(num_groups, 0);
        std::map<char, Addr> new_base;
        bool ok = true;
        std::uint32_t next_group = 0;
        for (const auto& r : reqs) {
            if (r.size > group_bytes) { ok = false; break; }
            std::uint32_t g = next_group;
            std::uint32_t scanned = 0;
            while (scanned < num_groups &&
                   ((group_cursor[g] + align - 1) / align * align) + r.size > group_bytes) {
                g = (g + 1) % num_groups;
                ++scanned;
            }
            if (scanned == num_groups) { ok = false; break; }
            const std::uint64_t off = (group_cursor[g] + align - 1) / align * align;
            new_base[r.id] = static_cast<Addr>(g) * group_bytes + off;
            group_cursor[g] = off + r.size;
            next_group = (g + 1) % num_groups;
        }
        if (ok) {
            Layout candidate = layout;
            for (auto& [id, tl] : candidate.tensors) {
                tl.base = new_base.at(id);
                tl.addressing_mode = gima_mode;
            }
            Schedule retrial = lower(wl, candidate, sys, opts);
            bool no_regression = true;
            for (const auto& phase : retrial.phases) {
                auto check = [&](const StreamSchedule& s) {
                    auto addrs = detail::probe_addresses(s, sys.design(s.stream));
                    std::size_t score = detail::distinct_banks(geom, gima_mode, addrs);
                    for (const auto& p : probes)
                        if (!addrs.empty() && addrs[0] >= candidate.at(p.id).base &&
                            addrs[0] < candidate.at(p.id).base + candidate.at(p.id).size_bytes &&
                            score < p.base_score)
                            no_regression = false;
                };
                for (const auto& s : phase.reads) check(s);
                for (const auto& s : phase.writes) check(s);
            }
            if (no_regression) layout = candidate;
        }
    }
    return layout;
}

/// Full front end: placement plus lowering under the given feature options.
inline Schedule compile(const WorkloadSpec& wl, const SystemConfig& sys,
                        const CompileOptions& opts) {
    return lower(wl, allocate(wl, sys, opts), sys, opts);
}

}  // namespace streamsim
