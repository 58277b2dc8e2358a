#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "rgo/workload.hpp"

// Per-limiter demand vectors and limiter-bounded runtime estimates.
// A kernel's modeled runtime is the maximum over limiters of
// (work on that limiter) / (limiter throughput); the limiter attaining
// the maximum is the bottleneck.

namespace rgo {

enum class Limiter : int {
    Mma = 0,
    L2,
    Hbm,
    Rf,
    Issue,
    Alu,
    Mufu,
    Fma,
};

inline constexpr int kLimiterCount = 8;

inline const char* limiter_name(Limiter l) {
    switch (l) {
        case Limiter::Mma: return "MMA";
        case Limiter::L2: return "L2";
        case Limiter::Hbm: return "HBM";
        case Limiter::Rf: return "RF";
        case Limiter::Issue: return "Issue";
        case Limiter::Alu: return "ALU";
        case Limiter::Mufu: return "MUFU";
        case Limiter::Fma: return "FMA";
    }
    return "?";
}

/// Chip-wide limiter throughputs. The shipped gh100 preset is
/// datasheet-derived where published figures exist (MMA, HBM) and
/// calibrated otherwise; see config.hpp.
struct HardwareConfig {
    std::string name = "custom";
    double mma_flops = 1.0;   // flop/s at the modeled precision
    double l2_bw = 1.0;       // byte/s
    double hbm_bw = 1.0;      // byte/s
    double rf_bw = 1.0;       // byte/s
    double issue_rate = 1.0;  // issue slots/s, chip-wide
    double alu_rate = 1.0;    // ops/s
    double mufu_rate = 1.0;   // ops/s
    double fma_rate = 1.0;    // ops/s

    double throughput(Limiter l) const {
        switch (l) {
            case Limiter::Mma: return mma_flops;
            case Limiter::L2: return l2_bw;
            case Limiter::Hbm: return hbm_bw;
            case Limiter::Rf: return rf_bw;
            case Limiter::Issue: return issue_rate;
            case Limiter::Alu: return alu_rate;
            case Limiter::Mufu: return mufu_rate;
            case Limiter::Fma: return fma_rate;
        }
        return 1.0;
    }

    void validate() const {
        for (int i = 0; i < kLimiterCount; ++i)
            if (!(throughput(static_cast<Limiter>(i)) > 0.0))
                throw std::invalid_argument("hardware throughputs must be > 0");
    }
};

inline HardwareConfig gh100() {
    HardwareConfig hw;
    hw.name = "gh100";
    hw.mma_flops = 1979e12;   // FP8 dense
    hw.l2_bw = 16.5e12;
    hw.hbm_bw = 3.35e12;
    hw.rf_bw = 100e12;
    hw.issue_rate = 33.454e12;
    hw.alu_rate = 16.727e12;
    hw.mufu_rate = 4.182e12;
    hw.fma_rate = 33.454e12;
    return hw;
}

/// Work totals one kernel places on each limiter. Addition is
/// componentwise.
struct DemandVector {
    std::array<double, kLimiterCount> work{};

    double& operator[](Limiter l) { return work[static_cast<int>(l)]; }
    double operator[](Limiter l) const { return work[static_cast<int>(l)]; }
    friend bool operator==(const DemandVector&, const DemandVector&) = default;
};

inline DemandVector fuse(const DemandVector& a, const DemandVector& b) {
    DemandVector out;
    for (int i = 0; i < kLimiterCount; ++i) out.work[i] = a.work[i] + b.work[i];
    return out;
}

/// Calibration coefficients behind the demand formulas. The per-element
/// and per-block counts are effective values fitted to the runtime ratios
/// and named-workload speedups, not literal instruction counts.
struct CostTable {
    // per GEMM flop
    double gemm_issue_per_flop = 1.0 / 2048.0;
    double gemm_rf_per_flop = 0.01;  // bytes
    // per attention intermediate element
    double attn_issue_per_elem = 71.5;
    double attn_rf_per_elem = 240.0;  // bytes
    double attn_alu_per_elem = 24.0;
    // per Philox block (4 output words)
    double philox_fma_per_round = 2.0;  // two wide multiplies
    double philox_alu_per_round = 6.75;
    double philox_alu_fixed = 30.375;
    double philox_issue_per_round = 13.5;
    double philox_issue_fixed = 60.75;
    // per mask store
    double mask_store_overhead = 0.0;  // bytes

    void validate() const {
        const double v[] = {gemm_issue_per_flop, gemm_rf_per_flop, attn_issue_per_elem,
                            attn_rf_per_elem,    attn_alu_per_elem, philox_fma_per_round,
                            philox_alu_per_round, philox_alu_fixed, philox_issue_per_round,
                            philox_issue_fixed,  mask_store_overhead};
        for (double x : v)
            if (!(x >= 0.0)) throw std::invalid_argument("cost coefficients must be >= 0");
    }
};

inline constexpr uint64_t kGemmTile = 128;  // (tm, tn, tk)

/// GEMM demand: MMA flops are exact; L2 traffic counts one pass of each
/// operand per tile wave plus a read+write of C; HBM traffic is one pass
/// of each operand.
inline DemandVector gemm_demand(const GemmShape& s, uint32_t precision_bytes,
                                const CostTable& ct) {
    if (s.m < 1 || s.n < 1 || s.k < 1)
        throw std::invalid_argument("gemm shape dims must be >= 1");
    const auto tiles = [](uint64_t x) { return (x + kGemmTile - 1) / kGemmTile; };
    const double flops = 2.0 * static_cast<double>(s.m) * static_cast<double>(s.n) *
                         static_cast<double>(s.k);
    DemandVector d;
    d[Limiter::Mma] = flops;
    d[Limiter::L2] = static_cast<double>(precision_bytes) *
                     (static_cast<double>(s.m * s.k) * static_cast<double>(tiles(s.n)) +
                      static_cast<double>(s.k * s.n) * static_cast<double>(tiles(s.m)) +
                      2.0 * static_cast<double>(s.m * s.n));
    d[Limiter::Hbm] = static_cast<double>(precision_bytes) *
                      static_cast<double>(s.m * s.k + s.k * s.n + s.m * s.n);
    d[Limiter::Issue] = ct.gemm_issue_per_flop * flops;
    d[Limiter::Rf] = ct.gemm_rf_per_flop * flops;
    return d;
}

/// Attention demand: matmul flops plus per-element softmax work
/// (one MUFU exp per element, per-element issue/RF/ALU counts).
inline DemandVector attention_demand(const WorkloadConfig& cfg, const CostTable& ct) {
    const AttentionWork w = attention_work(cfg);
    const double flops = static_cast<double>(w.mma_flops);
    const double elems = static_cast<double>(w.softmax_elems);
    DemandVector d;
    d[Limiter::Mma] = flops;
    d[Limiter::Mufu] = elems;
    d[Limiter::Issue] = ct.attn_issue_per_elem * elems + ct.gemm_issue_per_flop * flops;
    d[Limiter::Rf] = ct.attn_rf_per_elem * elems + ct.gemm_rf_per_flop * flops;
    d[Limiter::Alu] = ct.attn_alu_per_elem * elems;
    return d;
}

/// Stand-alone RNG demand for `elem_count` mask elements: wide multiplies
/// on the FMA pipe, xors/adds on the ALU pipe, a fixed per-block overhead,
/// and the 1-bit-per-element mask store on HBM.
inline DemandVector rng_demand(uint64_t elem_count, uint32_t rounds, const CostTable& ct) {
    if (rounds < 1) throw std::invalid_argument("rng_demand: rounds must be >= 1");
    DemandVector d;
    if (elem_count == 0) return d;
    const double blocks = static_cast<double>((elem_count + 3) / 4);
    const double r = static_cast<double>(rounds);
    d[Limiter::Fma] = blocks * r * ct.philox_fma_per_round;
    d[Limiter::Alu] = blocks * (r * ct.philox_alu_per_round + ct.philox_alu_fixed);
    d[Limiter::Issue] = blocks * (r * ct.philox_issue_per_round + ct.philox_issue_fixed);
    d[Limiter::Hbm] = static_cast<double>(elem_count) / 8.0 + ct.mask_store_overhead;
    return d;
}

struct KernelEstimate {
    double runtime_s = 0.0;
    Limiter bottleneck = Limiter::Mma;
    DemandVector demand;
    std::array<double, kLimiterCount> limiter_times{};
};

/// Bounds the demand by every limiter and keeps the worst. Ties go to the
/// earlier limiter in Table order.
inline KernelEstimate runtime(const DemandVector& d, const HardwareConfig& hw) {
    hw.validate();
    KernelEstimate est;
    est.demand = d;
    for (int i = 0; i < kLimiterCount; ++i) {
        const Limiter l = static_cast<Limiter>(i);
        est.limiter_times[i] = d[l] / hw.throughput(l);
        if (est.limiter_times[i] > est.runtime_s) {
            est.runtime_s = est.limiter_times[i];
            est.bottleneck = l;
        }
    }
    return est;
}

}  // namespace rgo
