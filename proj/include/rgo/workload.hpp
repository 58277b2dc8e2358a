#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

// Transformer-block shapes and raw work quantities. One block is four
// GEMMs (QKV, Proj, FFN1, FFN2) plus one attention layer; LayerNorm and
// conversion/transpose layers are omitted from runtime.

namespace rgo {

struct WorkloadConfig {
    uint32_t batch = 1;
    uint32_t seq = 2048;
    uint32_t heads = 96;
    uint32_t head_dim = 128;
    uint32_t ffn_factor = 4;
    uint32_t precision_bytes = 1;  // FP8
    double keep_prob = 0.9;
    uint32_t philox_rounds = 7;

    uint64_t hidden() const { return static_cast<uint64_t>(heads) * head_dim; }

    void validate() const {
        if (batch < 1 || seq < 1 || heads < 1 || head_dim < 1 || ffn_factor < 1 ||
            precision_bytes < 1)
            throw std::invalid_argument("workload dimensions must be >= 1");
        if (!(keep_prob >= 0.0 && keep_prob <= 1.0))
            throw std::invalid_argument("keep_prob must be in [0,1]");
        if (philox_rounds < 1 || philox_rounds > 16)
            throw std::invalid_argument("philox_rounds must be in [1,16]");
    }
};

struct GemmShape {
    std::string name;
    uint64_t m = 1, n = 1, k = 1;

    uint64_t flops() const { return 2 * m * n * k; }
};

inline std::array<GemmShape, 4> gemm_shapes(const WorkloadConfig& cfg) {
    cfg.validate();
    const uint64_t rows = static_cast<uint64_t>(cfg.batch) * cfg.seq;
    const uint64_t h = cfg.hidden();
    return {GemmShape{"QKV", rows, 3 * h, h},
            GemmShape{"Proj", rows, h, h},
            GemmShape{"FFN1", rows, cfg.ffn_factor * h, h},
            GemmShape{"FFN2", rows, h, cfg.ffn_factor * h}};
}

struct AttentionWork {
    uint64_t mma_flops = 0;      // Q*K^T and P*V, 2 flops per MAC
    uint64_t softmax_elems = 0;  // one intermediate element per (b,h,i,j)
};

inline AttentionWork attention_work(const WorkloadConfig& cfg) {
    cfg.validate();
    const uint64_t elems = static_cast<uint64_t>(cfg.batch) * cfg.heads * cfg.seq *
                           static_cast<uint64_t>(cfg.seq);
    return AttentionWork{4 * elems * cfg.head_dim, elems};
}

inline uint64_t rng_elements(const WorkloadConfig& cfg) {
    cfg.validate();
    return static_cast<uint64_t>(cfg.batch) * cfg.heads * cfg.seq *
           static_cast<uint64_t>(cfg.seq);
}

/// Public-architecture presets (dimensions are the published model shapes,
/// not measured values).
inline WorkloadConfig workload_preset(const std::string& name) {
    if (name == "gpt3") {
        WorkloadConfig cfg;
        cfg.seq = 2048;
        cfg.heads = 96;
        return cfg;
    }
    if (name == "llama2") {
        WorkloadConfig cfg;
        cfg.seq = 4096;
        cfg.heads = 64;
        return cfg;
    }
    throw std::invalid_argument("unknown workload preset '" + name +
                                "' (known: gpt3, llama2)");
}

}  // namespace rgo
