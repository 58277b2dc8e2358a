#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rgo/mask.hpp"

// Toy-scale single-precision attention forward with dropout applied to
// the post-softmax weights. The fused path computes keep bits inline from
// Philox; the decoupled path reads them from a pre-generated mask. Both
// run the exact same arithmetic, so equal keep bits give bitwise equal
// outputs.

namespace rgo {

/// Q, K, V stored row-major as (slice, pos, dim) with slice = b*nH + h.
struct AttentionInput {
    uint32_t slices = 1;
    uint32_t seq = 1;
    uint32_t head_dim = 1;
    std::vector<float> q, k, v;

    size_t elems() const {
        return static_cast<size_t>(slices) * seq * head_dim;
    }
    size_t at(uint32_t s, uint32_t pos, uint32_t d) const {
        return (static_cast<size_t>(s) * seq + pos) * head_dim + d;
    }
    float scale() const { return 1.0f / std::sqrt(static_cast<float>(head_dim)); }

    void validate() const {
        if (slices < 1 || seq < 1 || head_dim < 1)
            throw std::invalid_argument("attention dims must be >= 1");
        if (q.size() != elems() || k.size() != elems() || v.size() != elems())
            throw std::invalid_argument("attention input shape mismatch");
    }
};

struct AttentionOutput {
    uint32_t slices = 0, seq = 0, head_dim = 0;
    std::vector<float> o;

    friend bool operator==(const AttentionOutput&, const AttentionOutput&) = default;
};

namespace attn_detail {

// keep_fn: (slice, i, j) -> keep bit; null means no dropout.
// inv_p: 1/p scaling for kept weights (inverted dropout).
using KeepFn = std::function<bool(uint32_t, uint32_t, uint32_t)>;

inline AttentionOutput forward_impl(const AttentionInput& in, const KeepFn& keep_fn,
                                    float p) {
    in.validate();
    AttentionOutput out;
    out.slices = in.slices;
    out.seq = in.seq;
    out.head_dim = in.head_dim;
    out.o.assign(in.elems(), 0.0f);

    const float scale = in.scale();
    std::vector<float> w(in.seq);
    for (uint32_t s = 0; s < in.slices; ++s) {
        for (uint32_t i = 0; i < in.seq; ++i) {
            // scores with row-wise max subtraction, fixed ascending-j order
            float row_max = -std::numeric_limits<float>::infinity();
            for (uint32_t j = 0; j < in.seq; ++j) {
                float dot = 0.0f;
                for (uint32_t d = 0; d < in.head_dim; ++d)
                    dot += in.q[in.at(s, i, d)] * in.k[in.at(s, j, d)];
                w[j] = dot * scale;
                if (w[j] > row_max) row_max = w[j];
            }
            float denom = 0.0f;
            for (uint32_t j = 0; j < in.seq; ++j) {
                w[j] = std::exp(w[j] - row_max);
                denom += w[j];
            }
            for (uint32_t j = 0; j < in.seq; ++j) {
                float weight = w[j] / denom;
                if (keep_fn) weight = keep_fn(s, i, j) ? weight / p : 0.0f;
                for (uint32_t d = 0; d < in.head_dim; ++d)
                    out.o[in.at(s, i, d)] += weight * in.v[in.at(s, j, d)];
            }
        }
    }
    return out;
}

inline MaskLayout layout_for(const AttentionInput& in, uint64_t seed,
                             uint64_t base_offset) {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = in.slices;
    layout.seq = in.seq;
    layout.seed = seed;
    layout.base_offset = base_offset;
    return layout;
}

}  // namespace attn_detail

/// Plain softmax(Q K^T / sqrt(dH)) V.
inline AttentionOutput attention_forward(const AttentionInput& in) {
    return attn_detail::forward_impl(in, nullptr, 1.0f);
}

/// Dropout with RNG fused: keep bits computed inline per element, kept
/// weights scaled by 1/p.
inline AttentionOutput attention_dropout_fused(const AttentionInput& in, uint64_t seed,
                                               double p, int rounds,
                                               uint64_t base_offset = 0) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("attention_dropout_fused: p must be in (0,1]");
    in.validate();
    const KeepThreshold thr(p);
    const MaskLayout layout = attn_detail::layout_for(in, seed, base_offset);
    const auto keep = [&](uint32_t s, uint32_t i, uint32_t j) {
        return keep_bit_direct(layout, thr, rounds, layout.linear_index(0, s, i, j));
    };
    return attn_detail::forward_impl(in, keep, thr.keep_prob);
}

/// Same computation with keep bits read from a pre-generated mask.
inline AttentionOutput attention_dropout_decoupled(const AttentionInput& in,
                                                   const DropoutMask& mask, double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("attention_dropout_decoupled: p must be in (0,1]");
    in.validate();
    const uint64_t slices =
        static_cast<uint64_t>(mask.layout.batch) * mask.layout.heads;
    if (slices != in.slices || mask.layout.seq != in.seq)
        throw std::invalid_argument("attention_dropout_decoupled: mask layout mismatch");
    if (static_cast<float>(p) != mask.keep_prob)
        throw std::invalid_argument("attention_dropout_decoupled: p mismatch with mask");
    const auto keep = [&](uint32_t s, uint32_t i, uint32_t j) {
        const uint64_t idx =
            (static_cast<uint64_t>(s) * in.seq + i) * in.seq + j;
        return static_cast<bool>((mask.bits[idx >> 3] >> (idx & 7)) & 1u);
    };
    return attn_detail::forward_impl(in, keep, mask.keep_prob);
}

// ---------------------------------------------------------------------------
// Equivalence suite: fused vs decoupled over a shape/seed/p grid, used by
// the `verify` CLI subcommand and the acceptance tests.
// ---------------------------------------------------------------------------

struct EquivCase {
    uint32_t slices, seq, head_dim;
    uint64_t seed;
    double p;
};

struct EquivResult {
    EquivCase c;
    bool bitwise_equal = false;
};

inline std::vector<EquivCase> default_equiv_grid() {
    std::vector<EquivCase> cases;
    const double ps[] = {0.5, 0.8, 0.9, 0.99};
    const struct { uint32_t s, q, d; } shapes[] = {
        {1, 16, 8}, {2, 64, 32}, {4, 128, 64}, {8, 256, 64}};
    uint64_t seed = 1000;
    for (const auto& sh : shapes)
        for (double p : ps)
            cases.push_back(EquivCase{sh.s, sh.q, sh.d, seed++, p});
    return cases;
}

inline AttentionInput random_attention_input(uint32_t slices, uint32_t seq,
                                             uint32_t head_dim, uint64_t seed) {
    AttentionInput in;
    in.slices = slices;
    in.seq = seq;
    in.head_dim = head_dim;
    in.q.resize(in.elems());
    in.k.resize(in.elems());
    in.v.resize(in.elems());
    // fill from Philox so inputs are reproducible everywhere
    const PhiloxKey key{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    auto fill = [&](std::vector<float>& dst, uint32_t stream) {
        for (size_t i = 0; i < dst.size(); i += 4) {
            PhiloxCounter c;
            const uint64_t block = i / 4;
            c.c0 = static_cast<uint32_t>(block);
            c.c1 = static_cast<uint32_t>(block >> 32);
            c.c2 = stream;
            c.c3 = 0x5eedu;
            const PhiloxBlock b = philox_block(key, c, 10);
            for (int lane = 0; lane < 4 && i + lane < dst.size(); ++lane) {
                // uniform in [-1, 1)
                dst[i + lane] =
                    static_cast<float>(b.word(lane)) * (2.0f / 4294967296.0f) - 1.0f;
            }
        }
    };
    fill(in.q, 1);
    fill(in.k, 2);
    fill(in.v, 3);
    return in;
}

inline std::vector<EquivResult> run_equiv_suite(const std::vector<EquivCase>& cases,
                                                int rounds = 7) {
    std::vector<EquivResult> results;
    results.reserve(cases.size());
    for (const EquivCase& c : cases) {
        const AttentionInput in =
            random_attention_input(c.slices, c.seq, c.head_dim, c.seed ^ 0xA77E);
        MaskLayout layout;
        layout.batch = 1;
        layout.heads = c.slices;
        layout.seq = c.seq;
        layout.seed = c.seed;
        const DropoutMask mask = generate_mask(layout, KeepThreshold(c.p), rounds);
        const AttentionOutput fused = attention_dropout_fused(in, c.seed, c.p, rounds);
        const AttentionOutput dec = attention_dropout_decoupled(in, mask, c.p);
        results.push_back(EquivResult{c, fused == dec});
    }
    return results;
}

}  // namespace rgo
