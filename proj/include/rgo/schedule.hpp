#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "rgo/cost.hpp"
#include "rgo/workload.hpp"

// Composes kernel estimates into baseline (dropout fused in attention)
// and overlap (stand-alone RNG hidden under the four GEMMs) timelines,
// applies the silicon-measured interference factors, classifies operating
// regions and runs sweeps, what-ifs and the pipelined variant.

namespace rgo {

/// Interference and overhead factors measured on silicon:
/// 4% GEMM slowdown under RNG, RNG at half rate under GEMM, 12% element
/// dropping overhead on attention, 0.5% cost of carving out RF/SMEM.
struct CalibrationFactors {
    double f_gemm_under_rng = 1.04;
    double f_rng_under_gemm = 2.0;  // rate divisor while GEMM runs
    double f_drop = 1.12;
    double f_carve = 1.005;

    void validate() const {
        if (!(f_gemm_under_rng >= 1.0 && f_rng_under_gemm >= 1.0 && f_drop >= 1.0 &&
              f_carve >= 1.0))
            throw std::invalid_argument("calibration factors must be >= 1.0");
    }
};

enum class Region { GemmDominated, Balanced, RngExposed };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::GemmDominated: return "GemmDominated";
        case Region::Balanced: return "Balanced";
        case Region::RngExposed: return "RngExposed";
    }
    return "?";
}

struct ScheduleEstimate {
    double t_baseline_s = 0.0;
    double t_overlap_s = 0.0;
    double speedup = 0.0;
    double t_gemm_total_s = 0.0;
    double t_rng_standalone_s = 0.0;
    double t_rng_exposed_s = 0.0;  // RNG time left after the GEMMs finish
    double t_attn_s = 0.0;
    double t_fused_s = 0.0;  // fused attention+RNG kernel incl. dropping
    Region region = Region::Balanced;
    Limiter gemm_bottleneck = Limiter::Mma;
    Limiter attn_bottleneck = Limiter::Rf;
    Limiter rng_bottleneck = Limiter::Alu;
    Limiter fused_bottleneck = Limiter::Issue;
};

inline constexpr double kDefaultGemmShare = 0.6;

/// RngExposed wins over everything; then GEMM share of the baseline
/// decides GemmDominated vs Balanced.
inline Region classify_region(const ScheduleEstimate& est,
                              double gemm_share_threshold = kDefaultGemmShare) {
    if (est.t_rng_exposed_s > 0.0) return Region::RngExposed;
    if (est.t_gemm_total_s / est.t_baseline_s > gemm_share_threshold)
        return Region::GemmDominated;
    return Region::Balanced;
}

/// Per-kernel estimates for one transformer block.
struct BlockKernels {
    std::array<KernelEstimate, 4> gemms;
    double gemm_total_s = 0.0;
    Limiter gemm_bottleneck = Limiter::Mma;  // of the longest GEMM
    KernelEstimate attn;
    KernelEstimate rng;
    KernelEstimate fused;  // attention + RNG demands combined
};

inline BlockKernels block_kernels(const WorkloadConfig& cfg, const HardwareConfig& hw,
                                  const CostTable& ct) {
    cfg.validate();
    ct.validate();
    BlockKernels bk;
    const auto shapes = gemm_shapes(cfg);
    double longest = -1.0;
    for (size_t i = 0; i < shapes.size(); ++i) {
        bk.gemms[i] = runtime(gemm_demand(shapes[i], cfg.precision_bytes, ct), hw);
        bk.gemm_total_s += bk.gemms[i].runtime_s;
        if (bk.gemms[i].runtime_s > longest) {
            longest = bk.gemms[i].runtime_s;
            bk.gemm_bottleneck = bk.gemms[i].bottleneck;
        }
    }
    const DemandVector attn_d = attention_demand(cfg, ct);
    const DemandVector rng_d = rng_demand(rng_elements(cfg), cfg.philox_rounds, ct);
    bk.attn = runtime(attn_d, hw);
    bk.rng = runtime(rng_d, hw);
    bk.fused = runtime(fuse(attn_d, rng_d), hw);
    return bk;
}

/// Baseline: GEMMs serial, then the fused attention+RNG kernel scaled by
/// the dropping overhead. Overlap: GEMMs carry the carve-out and
/// interference cost while RNG progresses at reduced rate; any RNG
/// remainder runs at full speed after the GEMMs, then attention with
/// dropping only.
inline ScheduleEstimate compose_schedule(double gemm_total_s, const KernelEstimate& attn,
                                         const KernelEstimate& rng,
                                         const KernelEstimate& fused,
                                         const CalibrationFactors& cal,
                                         double gemm_share_threshold = kDefaultGemmShare) {
    cal.validate();
    ScheduleEstimate est;
    est.t_gemm_total_s = gemm_total_s;
    est.t_attn_s = attn.runtime_s;
    est.t_rng_standalone_s = rng.runtime_s;
    est.t_fused_s = fused.runtime_s * cal.f_drop;
    est.attn_bottleneck = attn.bottleneck;
    est.rng_bottleneck = rng.bottleneck;
    est.fused_bottleneck = fused.bottleneck;

    est.t_baseline_s = gemm_total_s + fused.runtime_s * cal.f_drop;

    const double gemm_span = gemm_total_s * cal.f_carve * cal.f_gemm_under_rng;
    const double progress = gemm_span / cal.f_rng_under_gemm;
    est.t_rng_exposed_s = rng.runtime_s > progress ? rng.runtime_s - progress : 0.0;
    est.t_overlap_s = gemm_span + est.t_rng_exposed_s + attn.runtime_s * cal.f_drop;

    est.speedup = est.t_baseline_s / est.t_overlap_s;
    est.region = classify_region(est, gemm_share_threshold);
    return est;
}

inline ScheduleEstimate estimate(const WorkloadConfig& cfg, const HardwareConfig& hw,
                                 const CostTable& ct, const CalibrationFactors& cal,
                                 double gemm_share_threshold = kDefaultGemmShare) {
    const BlockKernels bk = block_kernels(cfg, hw, ct);
    ScheduleEstimate est =
        compose_schedule(bk.gemm_total_s, bk.attn, bk.rng, bk.fused, cal,
                         gemm_share_threshold);
    est.gemm_bottleneck = bk.gemm_bottleneck;
    return est;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline const std::vector<uint32_t>& default_seq_grid() {
    static const std::vector<uint32_t> g{2048, 4096, 8192, 16384, 32768, 65536};
    return g;
}

inline const std::vector<uint32_t>& default_heads_grid() {
    static const std::vector<uint32_t> g{48, 64, 80, 96, 112, 128};
    return g;
}

struct SweepRow {
    uint32_t seq = 0;
    uint32_t n_heads = 0;
    ScheduleEstimate est;
};

/// One row per (SQ, nH) grid point, SQ-major order.
inline std::vector<SweepRow> sweep(const std::vector<uint32_t>& seq_grid,
                                   const std::vector<uint32_t>& heads_grid,
                                   WorkloadConfig cfg_template, const HardwareConfig& hw,
                                   const CostTable& ct, const CalibrationFactors& cal) {
    if (seq_grid.empty() || heads_grid.empty())
        throw std::invalid_argument("sweep: grid must be non-empty");
    std::vector<SweepRow> rows;
    rows.reserve(seq_grid.size() * heads_grid.size());
    for (uint32_t sq : seq_grid) {
        for (uint32_t nh : heads_grid) {
            cfg_template.seq = sq;
            cfg_template.heads = nh;
            rows.push_back(SweepRow{sq, nh, estimate(cfg_template, hw, ct, cal)});
        }
    }
    return rows;
}

/// Scales the MMA-class throughputs (tensor math plus the memory system
/// that keeps pace with it); issue/ALU/MUFU/FMA pipes stay unchanged.
inline HardwareConfig whatif_scale(const HardwareConfig& hw, double mma_factor) {
    if (!(mma_factor > 0.0))
        throw std::invalid_argument("whatif_scale: factor must be > 0");
    HardwareConfig out = hw;
    out.mma_flops *= mma_factor;
    out.l2_bw *= mma_factor;
    out.hbm_bw *= mma_factor;
    out.rf_bw *= mma_factor;
    return out;
}

struct PipelineEstimate {
    double runtime_s = 0.0;
    uint64_t peak_mask_bytes = 0;
};

/// C-stage pipeline along the sequence dimension: each chunk's RNG
/// overlaps that chunk's GEMM work, attention consumes chunks as they
/// complete. Shrinks the live mask to one chunk without changing the
/// overlap structure.
inline PipelineEstimate pipeline_schedule(const WorkloadConfig& cfg,
                                          const HardwareConfig& hw, const CostTable& ct,
                                          const CalibrationFactors& cal, uint32_t chunks) {
    cfg.validate();
    cal.validate();
    if (chunks < 1 || cfg.seq % chunks != 0)
        throw std::invalid_argument("pipeline_schedule: chunks must divide SQ");

    WorkloadConfig chunk_cfg = cfg;
    chunk_cfg.seq = cfg.seq / chunks;  // M shrinks; N, K depend only on H
    double chunk_gemm = 0.0;
    for (const GemmShape& s : gemm_shapes(chunk_cfg))
        chunk_gemm += runtime(gemm_demand(s, cfg.precision_bytes, ct), hw).runtime_s;

    // chunk attends over the full key range: E/C elements per chunk
    const uint64_t chunk_elems = rng_elements(cfg) / chunks;
    const KernelEstimate chunk_rng =
        runtime(rng_demand(chunk_elems, cfg.philox_rounds, ct), hw);

    const double chunk_span = chunk_gemm * cal.f_carve * cal.f_gemm_under_rng;
    const double progress = chunk_span / cal.f_rng_under_gemm;
    const double exposed =
        chunk_rng.runtime_s > progress ? chunk_rng.runtime_s - progress : 0.0;

    const KernelEstimate attn = runtime(attention_demand(cfg, ct), hw);
    PipelineEstimate pe;
    pe.runtime_s = chunks * (chunk_span + exposed) + attn.runtime_s * cal.f_drop;
    pe.peak_mask_bytes = (chunk_elems + 7) / 8;
    return pe;
}

// ---------------------------------------------------------------------------
// Report formatting (stable across platforms: fixed decimals, 4 significant
// digits for speedups)
// ---------------------------------------------------------------------------

inline std::string format_us(double seconds) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", seconds * 1e6);
    return buf;
}

inline std::string format_speedup(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", s);
    return buf;
}

inline constexpr const char* kSweepCsvHeader =
    "sq,n_heads,t_baseline_us,t_overlap_us,speedup,region,t_rng_exposed_us,"
    "gemm_bottleneck,attn_bottleneck,rng_bottleneck";

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const SweepRow& r : rows) {
        out += std::to_string(r.seq);
        out += ',';
        out += std::to_string(r.n_heads);
        out += ',';
        out += format_us(r.est.t_baseline_s);
        out += ',';
        out += format_us(r.est.t_overlap_s);
        out += ',';
        out += format_speedup(r.est.speedup);
        out += ',';
        out += region_name(r.est.region);
        out += ',';
        out += format_us(r.est.t_rng_exposed_s);
        out += ',';
        out += limiter_name(r.est.gemm_bottleneck);
        out += ',';
        out += limiter_name(r.est.attn_bottleneck);
        out += ',';
        out += limiter_name(r.est.rng_bottleneck);
        out += '\n';
    }
    return out;
}

}  // namespace rgo
