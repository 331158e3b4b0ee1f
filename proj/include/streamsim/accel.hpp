#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

#include "streamsim/error.hpp"
#include "streamsim/word.hpp"

namespace streamsim {

/// PE-array spatial unrolling: one Ms x Ks int8 tile of A and one Ks x Ns
/// int8 tile of B consumed per cycle, Ms x Ns int32 accumulator tile.
struct GemmCoreSpec {
    std::uint32_t ms = 8;
    std::uint32_t ns = 8;
    std::uint32_t ks = 8;
};

struct CoreSchedule {
    std::uint64_t mt = 1;
    std::uint64_t nt = 1;
    std::uint64_t kt = 1;
    bool consume_c = false;   // int32 initializer tile at each pass start
};

inline std::int32_t load_i32(const std::uint8_t* p) {
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    std::int32_t out;
    std::memcpy(&out, &v, 4);
    return out;
}

inline void store_i32(std::uint8_t* p, std::int32_t value) {
    std::uint32_t v;
    std::memcpy(&v, &value, 4);
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
}

/// Output-stationary GeMM tile core. The accumulator holds one output tile
/// across the kt reduction steps of a pass; C (when scheduled) is folded in
/// at the first k-iteration and the int32 D tile is emitted at the last.
class GemmCore {
public:
    explicit GemmCore(GemmCoreSpec spec) : spec_(spec) {}

    const GemmCoreSpec& spec() const { return spec_; }

    void configure(const CoreSchedule& sched) {
        sched_ = sched;
        acc_.assign(static_cast<std::size_t>(spec_.ms) * spec_.ns, 0);
        k_ = 0;
        passes_done_ = 0;
        fired_cycles_ = 0;
        stall_cycles_ = 0;
        configured_ = true;
    }

    bool done() const { return configured_ && passes_done_ == sched_.mt * sched_.nt; }
    bool at_pass_start() const { return configured_ && !done() && k_ == 0; }
    bool needs_c_now() const { return at_pass_start() && sched_.consume_c; }
    bool emits_now() const { return configured_ && !done() && k_ + 1 == sched_.kt; }

    std::uint64_t fired_cycles() const { return fired_cycles_; }
    std::uint64_t stall_cycles() const { return stall_cycles_; }
    std::uint64_t passes_done() const { return passes_done_; }

    void note_stall() { ++stall_cycles_; }

    /// One consume cycle: acc += A*B (plus C at the pass start when
    /// scheduled); returns the D tile as (ms lanes x 4*ns bytes) at the last
    /// k-iteration of the pass.
    std::optional<WideWord> fire(const WideWord& a, const WideWord& b, const WideWord* c) {
        if (!configured_) raise(ErrKind::NotConfigured, "fire before configure");
        const std::size_t a_bytes = static_cast<std::size_t>(spec_.ms) * spec_.ks;
        const std::size_t b_bytes = static_cast<std::size_t>(spec_.ks) * spec_.ns;
        const std::size_t d_bytes = static_cast<std::size_t>(spec_.ms) * spec_.ns * 4;
        if (a.size_bytes() != a_bytes || b.size_bytes() != b_bytes)
            raise(ErrKind::ShapeMismatch, "operand tile shape mismatch");
        if (sched_.consume_c && k_ == 0) {
            if (c == nullptr || c->size_bytes() != d_bytes)
                raise(ErrKind::ShapeMismatch, "initializer tile shape mismatch");
            for (std::size_t v = 0; v < acc_.size(); ++v)
                acc_[v] = load_i32(c->bytes.data() + 4 * v);
        }
        for (std::uint32_t m = 0; m < spec_.ms; ++m)
            for (std::uint32_t n = 0; n < spec_.ns; ++n) {
                std::int32_t sum = acc_[static_cast<std::size_t>(m) * spec_.ns + n];
                for (std::uint32_t k = 0; k < spec_.ks; ++k) {
                    const auto av = static_cast<std::int8_t>(
                        a.bytes[static_cast<std::size_t>(m) * spec_.ks + k]);
                    const auto bv = static_cast<std::int8_t>(
                        b.bytes[static_cast<std::size_t>(k) * spec_.ns + n]);
                    sum += static_cast<std::int32_t>(av) * static_cast<std::int32_t>(bv);
                }
                acc_[static_cast<std::size_t>(m) * spec_.ns + n] = sum;
            }
        ++fired_cycles_;
        if (++k_ < sched_.kt) return std::nullopt;
        k_ = 0;
        ++passes_done_;
        WideWord d(spec_.ms, spec_.ns * 4);
        d.valid = true;
        for (std::size_t v = 0; v < acc_.size(); ++v) store_i32(d.bytes.data() + 4 * v, acc_[v]);
        if (!sched_.consume_c) acc_.assign(acc_.size(), 0);
        return d;
    }

private:
    GemmCoreSpec spec_;
    CoreSchedule sched_;
    std::vector<std::int32_t> acc_;
    std::uint64_t k_ = 0;
    std::uint64_t passes_done_ = 0;
    std::uint64_t fired_cycles_ = 0;
    std::uint64_t stall_cycles_ = 0;
    bool configured_ = false;
};

/// Integer requantization constants. One spec packs into 8 bytes:
/// multiplier (int32 LE), shift (u8), zero point (i8), two pad bytes.
struct QuantSpec {
    std::int32_t multiplier = 1;
    std::uint8_t shift = 0;
    std::int8_t zero_point = 0;

    bool operator==(const QuantSpec&) const = default;
};

inline constexpr std::size_t kQuantSpecBytes = 8;

inline void pack_quant_spec(const QuantSpec& q, std::uint8_t* dst) {
    store_i32(dst, q.multiplier);
    dst[4] = q.shift;
    dst[5] = static_cast<std::uint8_t>(q.zero_point);
    dst[6] = 0;
    dst[7] = 0;
}

inline QuantSpec unpack_quant_spec(const std::uint8_t* src) {
    QuantSpec q;
    q.multiplier = load_i32(src);
    q.shift = src[4];
    q.zero_point = static_cast<std::int8_t>(src[5]);
    return q;
}

/// clamp(round_half_away_from_zero((d * multiplier) / 2^shift) + zero_point)
inline std::int8_t rescale_value(std::int32_t d, const QuantSpec& q) {
    std::int64_t prod = static_cast<std::int64_t>(d) * q.multiplier;
    if (q.shift > 0) {
        const std::int64_t half = std::int64_t{1} << (q.shift - 1);
        prod = (prod >= 0 ? prod + half : prod - half) / (std::int64_t{1} << q.shift);
    }
    prod += q.zero_point;
    if (prod < -128) prod = -128;
    if (prod > 127) prod = 127;
    return static_cast<std::int8_t>(prod);
}

/// Lane-wise rescale of an int32 word into an int8 word. The scale word
/// carries one packed QuantSpec per 8 bytes of the input word; value v uses
/// spec v / 2 (each spec covers the two int32 values packed in its lane).
inline WideWord quant_word(const WideWord& d, const WideWord& scale) {
    if (d.size_bytes() % 8 != 0 || scale.size_bytes() != d.size_bytes())
        raise(ErrKind::ShapeMismatch, "rescale operand shapes");
    const std::size_t values = d.size_bytes() / 4;
    WideWord e(d.num_lanes, d.lane_bytes / 4);
    e.valid = true;
    for (std::size_t v = 0; v < values; ++v) {
        const QuantSpec q = unpack_quant_spec(scale.bytes.data() + kQuantSpecBytes * (v / 2));
        e.bytes[v] = static_cast<std::uint8_t>(rescale_value(load_i32(d.bytes.data() + 4 * v), q));
    }
    return e;
}

/// Reinterprets a word's bytes under a different lane split.
inline WideWord reshape_word(WideWord word, std::uint32_t lanes, std::uint32_t lane_bytes) {
    if (word.size_bytes() != static_cast<std::size_t>(lanes) * lane_bytes)
        raise(ErrKind::ShapeMismatch, "reshape byte count mismatch");
    word.num_lanes = lanes;
    word.lane_bytes = lane_bytes;
    return word;
}

// ---------------------------------------------------------------------------
// Golden reference kernels (naive loop nests, independent of the timed path).
// ---------------------------------------------------------------------------

/// D[M x N] = A[M x K] * B[K x N] (+ C), int8 operands, int32 accumulation.
inline std::vector<std::int32_t> reference_gemm(const std::vector<std::int8_t>& a,
                                                const std::vector<std::int8_t>& b,
                                                const std::vector<std::int32_t>* c,
                                                std::uint64_t m, std::uint64_t n,
                                                std::uint64_t k) {
    if (a.size() != m * k || b.size() != k * n || (c && c->size() != m * n))
        raise(ErrKind::DimensionMismatch, "reference_gemm operand sizes");
    std::vector<std::int32_t> d(m * n, 0);
    for (std::uint64_t i = 0; i < m; ++i)
        for (std::uint64_t j = 0; j < n; ++j) {
            std::int32_t sum = c ? (*c)[i * n + j] : 0;
            for (std::uint64_t kk = 0; kk < k; ++kk)
                sum += static_cast<std::int32_t>(a[i * k + kk]) *
                       static_cast<std::int32_t>(b[kk * n + j]);
            d[i * n + j] = sum;
        }
    return d;
}

struct ConvParams {
    std::uint64_t h = 0, w = 0;
    std::uint64_t c_in = 0, c_out = 0;
    std::uint64_t kernel_h = 1, kernel_w = 1;
    std::uint64_t stride_h = 1, stride_w = 1;

    std::uint64_t out_h() const { return (h - kernel_h) / stride_h + 1; }
    std::uint64_t out_w() const { return (w - kernel_w) / stride_w + 1; }
};

/// Sliding-window convolution, no padding. Input is H x W x C_in (channel
/// innermost), weights are C_out x kh x kw x C_in. Output is row-major
/// (OH*OW) x C_out, matching the GeMM view of the same computation.
inline std::vector<std::int32_t> reference_conv(const std::vector<std::int8_t>& input,
                                                const std::vector<std::int8_t>& weights,
                                                const ConvParams& p) {
    if (input.size() != p.h * p.w * p.c_in ||
        weights.size() != p.c_out * p.kernel_h * p.kernel_w * p.c_in)
        raise(ErrKind::DimensionMismatch, "reference_conv operand sizes");
    const std::uint64_t oh = p.out_h(), ow = p.out_w();
    std::vector<std::int32_t> out(oh * ow * p.c_out, 0);
    for (std::uint64_t y = 0; y < oh; ++y)
        for (std::uint64_t x = 0; x < ow; ++x)
            for (std::uint64_t oc = 0; oc < p.c_out; ++oc) {
                std::int32_t sum = 0;
                for (std::uint64_t i = 0; i < p.kernel_h; ++i)
                    for (std::uint64_t j = 0; j < p.kernel_w; ++j)
                        for (std::uint64_t ci = 0; ci < p.c_in; ++ci) {
                            const std::uint64_t iy = y * p.stride_h + i;
                            const std::uint64_t ix = x * p.stride_w + j;
                            sum += static_cast<std::int32_t>(
                                       input[(iy * p.w + ix) * p.c_in + ci]) *
                                   static_cast<std::int32_t>(
                                       weights[((oc * p.kernel_h + i) * p.kernel_w + j) * p.c_in +
                                               ci]);
                        }
                out[(y * ow + x) * p.c_out + oc] = sum;
            }
    return out;
}

inline std::vector<std::int8_t> reference_rescale(const std::vector<std::int32_t>& d,
                                                  const QuantSpec& q) {
    std::vector<std::int8_t> e(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) e[i] = rescale_value(d[i], q);
    return e;
}

}  // namespace streamsim
