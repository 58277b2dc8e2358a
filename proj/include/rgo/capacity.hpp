#pragma once

#include <cstdint>
#include <stdexcept>

#include "rgo/workload.hpp"

// HBM footprint of the stand-alone mask and its reduction through tensor
// parallelism (splits heads), sequence parallelism (splits the row
// dimension of the SQ x SQ mask) and pipelining.

namespace rgo {

struct ParallelismPlan {
    uint32_t tp_degree = 1;  // splits nH
    uint32_t sp_degree = 1;  // splits one SQ dimension

    void validate_for(const WorkloadConfig& cfg) const {
        if (tp_degree < 1 || sp_degree < 1)
            throw std::invalid_argument("parallelism degrees must be >= 1");
        if (cfg.heads % tp_degree != 0)
            throw std::invalid_argument("tp_degree must divide nH");
        if (cfg.seq % sp_degree != 0)
            throw std::invalid_argument("sp_degree must divide SQ");
    }
};

/// One keep bit per attention intermediate element.
inline uint64_t mask_bytes(const WorkloadConfig& cfg) {
    cfg.validate();
    const uint64_t bits = static_cast<uint64_t>(cfg.batch) * cfg.heads * cfg.seq *
                          static_cast<uint64_t>(cfg.seq);
    return (bits + 7) / 8;
}

inline uint64_t per_gpu_mask_bytes(const WorkloadConfig& cfg, const ParallelismPlan& plan) {
    cfg.validate();
    plan.validate_for(cfg);
    const uint64_t bits = static_cast<uint64_t>(cfg.batch) * (cfg.heads / plan.tp_degree) *
                          (cfg.seq / plan.sp_degree) * static_cast<uint64_t>(cfg.seq);
    return (bits + 7) / 8;
}

struct CapacityCheck {
    bool feasible = false;
    uint64_t required_bytes = 0;
};

inline constexpr uint64_t kDefaultBudgetBytes = uint64_t{8} * 1024 * 1024 * 1024;

/// Per-GPU requirement after parallelism and C-way pipelining, against a
/// byte budget (boundary inclusive).
inline CapacityCheck feasible(const WorkloadConfig& cfg, const ParallelismPlan& plan,
                              uint64_t budget_bytes, uint32_t chunks = 1) {
    if (chunks < 1) throw std::invalid_argument("chunks must be >= 1");
    const uint64_t per_gpu = per_gpu_mask_bytes(cfg, plan);
    const uint64_t required = (per_gpu + chunks - 1) / chunks;
    return CapacityCheck{required <= budget_bytes, required};
}

}  // namespace rgo
