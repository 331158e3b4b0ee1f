#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "streamsim/compiler.hpp"

namespace streamsim {

/// Deterministic synthetic benchmark suite, three groups mirroring common
/// DNN layer shapes:
///   - gemm: 24 workloads, square-ish M/N/K in [64, 192] (multiples of 8);
///     every third one rescales its output through the quantization unit
///     (those keep K <= 128 so the constant stream stays a visible share
///     of the traffic).
///   - transposed_gemm: 12 workloads, M/N/K in [64, 128].
///   - conv: 10 stride-1 layers paired with their stride-2 downsampling
///     counterparts (same kernel and channels, halved output width).
/// All sizes come from the seed, so the same seed always produces the same
/// suite.
inline std::vector<WorkloadSpec> make_suite(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dull + 0x123456789abcdefull);
    auto pick = [&rng](std::uint64_t lo, std::uint64_t hi) {  // multiples of 8 in [lo, hi]
        const std::uint64_t span = (hi - lo) / 8 + 1;
        return lo + 8 * (rng() % span);
    };
    std::vector<WorkloadSpec> suite;

    for (int i = 0; i < 24; ++i) {
        WorkloadSpec wl;
        wl.kind = WorkloadKind::Gemm;
        wl.quantize_output = (i % 3 == 0);
        wl.m = pick(64, 192);
        wl.n = pick(64, 192);
        wl.k = wl.quantize_output ? pick(64, 128) : pick(64, 192);
        wl.id = "gemm_" + std::to_string(i) + "_" + std::to_string(wl.m) + "x" +
                std::to_string(wl.n) + "x" + std::to_string(wl.k) +
                (wl.quantize_output ? "_q" : "");
        suite.push_back(wl);
    }

    for (int i = 0; i < 12; ++i) {
        WorkloadSpec wl;
        wl.kind = WorkloadKind::TransposedGemm;
        wl.m = pick(64, 128);
        wl.n = pick(64, 128);
        wl.k = pick(64, 128);
        wl.id = "tgemm_" + std::to_string(i) + "_" + std::to_string(wl.m) + "x" +
                std::to_string(wl.n) + "x" + std::to_string(wl.k);
        suite.push_back(wl);
    }

    const std::uint64_t kernels[] = {1, 3, 5};
    for (int i = 0; i < 10; ++i) {
        const std::uint64_t k = kernels[rng() % 3];
        std::uint64_t c_in = (rng() % 2) ? 64 : 32;
        std::uint64_t c_out = 16u << (rng() % 3);
        std::uint64_t ow = (rng() % 2) ? 32 : 16;
        // Keep the heaviest shapes off the grid so a full ladder sweep stays
        // quick; clamping is deterministic.
        auto ideal = [&](std::uint64_t out_w) {
            const std::uint64_t oh = out_w;  // square outputs below
            return (oh * out_w / 8) * (c_out / 8) * (k * k * c_in / 8);
        };
        if (ideal(ow) > 25000) c_out = 16;
        if (ideal(ow) > 25000) c_in = 32;
        if (ideal(ow) > 25000) ow = 16;

        WorkloadSpec s1;
        s1.kind = WorkloadKind::Conv;
        s1.conv.kernel_h = s1.conv.kernel_w = k;
        s1.conv.c_in = c_in;
        s1.conv.c_out = c_out;
        s1.conv.stride_h = s1.conv.stride_w = 1;
        s1.conv.w = ow + k - 1;
        s1.conv.h = s1.conv.w;
        s1.id = "conv_" + std::to_string(i) + "_s1";
        suite.push_back(s1);

        WorkloadSpec s2 = s1;
        s2.conv.stride_h = s2.conv.stride_w = 2;
        s2.conv.w = 2 * (ow / 2 - 1) + k;
        s2.conv.h = s2.conv.w;
        s2.id = "conv_" + std::to_string(i) + "_s2";
        suite.push_back(s2);
    }
    return suite;
}

}  // namespace streamsim
