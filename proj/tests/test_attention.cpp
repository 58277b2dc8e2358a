#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "rgo/ref_attention.hpp"

using namespace rgo;

namespace {

// Naive double-precision oracle: materialize scores, softmax without the
// max trick, straight triple loops.
std::vector<double> naive_attention(const AttentionInput& in) {
    std::vector<double> out(in.elems(), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in.head_dim));
    for (uint32_t s = 0; s < in.slices; ++s) {
        for (uint32_t i = 0; i < in.seq; ++i) {
            std::vector<double> e(in.seq);
            double denom = 0.0;
            for (uint32_t j = 0; j < in.seq; ++j) {
                double dot = 0.0;
                for (uint32_t d = 0; d < in.head_dim; ++d)
                    dot += static_cast<double>(in.q[in.at(s, i, d)]) *
                           static_cast<double>(in.k[in.at(s, j, d)]);
                e[j] = std::exp(dot * scale);
                denom += e[j];
            }
            for (uint32_t j = 0; j < in.seq; ++j)
                for (uint32_t d = 0; d < in.head_dim; ++d)
                    out[in.at(s, i, d)] += e[j] / denom *
                                           static_cast<double>(in.v[in.at(s, j, d)]);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("attention with a single key returns V") {
    AttentionInput in = random_attention_input(2, 1, 8, 5);
    const AttentionOutput out = attention_forward(in);
    for (size_t i = 0; i < in.v.size(); ++i) CHECK(out.o[i] == in.v[i]);
}

TEST_CASE("identical keys give the row mean of V") {
    AttentionInput in = random_attention_input(1, 4, 4, 9);
    // make all K rows identical
    for (uint32_t j = 1; j < in.seq; ++j)
        for (uint32_t d = 0; d < in.head_dim; ++d)
            in.k[in.at(0, j, d)] = in.k[in.at(0, 0, d)];
    const AttentionOutput out = attention_forward(in);
    for (uint32_t i = 0; i < in.seq; ++i)
        for (uint32_t d = 0; d < in.head_dim; ++d) {
            float mean = 0.0f;
            for (uint32_t j = 0; j < in.seq; ++j) mean += in.v[in.at(0, j, d)];
            mean /= static_cast<float>(in.seq);
            CHECK(out.o[in.at(0, i, d)] == Catch::Approx(mean).epsilon(1e-5));
        }
}

TEST_CASE("forward matches the naive double-precision oracle") {
    const AttentionInput in = random_attention_input(2, 4, 2, 1234);
    const AttentionOutput out = attention_forward(in);
    const std::vector<double> want = naive_attention(in);
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(out.o[i] == Catch::Approx(want[i]).epsilon(1e-6));
}

TEST_CASE("p=1 dropout is bitwise the identity") {
    const AttentionInput in = random_attention_input(4, 32, 16, 77);
    const AttentionOutput plain = attention_forward(in);
    const AttentionOutput dropped = attention_dropout_fused(in, 123, 1.0, 7);
    CHECK(plain == dropped);

    MaskLayout layout;
    layout.heads = in.slices;
    layout.seq = in.seq;
    layout.seed = 123;
    const DropoutMask ones = generate_mask(layout, KeepThreshold(1.0), 7);
    CHECK(attention_dropout_decoupled(in, ones, 1.0) == plain);
}

TEST_CASE("fused dropout is deterministic in the seed") {
    const AttentionInput in = random_attention_input(2, 16, 8, 3);
    const AttentionOutput a = attention_dropout_fused(in, 42, 0.9, 7);
    const AttentionOutput b = attention_dropout_fused(in, 42, 0.9, 7);
    CHECK(a == b);
    const AttentionOutput c = attention_dropout_fused(in, 43, 0.9, 7);
    CHECK(a != c);
}

TEST_CASE("p=0 is rejected") {
    const AttentionInput in = random_attention_input(1, 4, 4, 8);
    CHECK_THROWS_AS(attention_dropout_fused(in, 1, 0.0, 7), std::invalid_argument);
}

TEST_CASE("fused and decoupled dropout agree bitwise across the grid") {
    for (const EquivResult& r : run_equiv_suite(default_equiv_grid())) {
        INFO("slices=" << r.c.slices << " sq=" << r.c.seq << " p=" << r.c.p);
        CHECK(r.bitwise_equal);
    }
}

TEST_CASE("decoupled path rejects mismatched masks") {
    const AttentionInput in = random_attention_input(2, 16, 8, 3);
    MaskLayout layout;
    layout.heads = 2;
    layout.seq = 8;  // wrong SQ
    const DropoutMask m = generate_mask(layout, KeepThreshold(0.9), 7);
    CHECK_THROWS_AS(attention_dropout_decoupled(in, m, 0.9), std::invalid_argument);

    MaskLayout ok = layout;
    ok.seq = 16;
    const DropoutMask m2 = generate_mask(ok, KeepThreshold(0.9), 7);
    CHECK_THROWS_AS(attention_dropout_decoupled(in, m2, 0.8), std::invalid_argument);
}

TEST_CASE("dropped weight fraction matches 1-p") {
    // count zeroed weights through the mask directly at scale
    MaskLayout layout;
    layout.heads = 16;
    layout.seq = 256;  // 2^20 elements
    layout.seed = 99;
    const double p = 0.8;
    const DropoutMask m = generate_mask(layout, KeepThreshold(p), 7);
    uint64_t kept = 0;
    for (uint8_t byte : m.bits) kept += std::popcount(byte);
    const double n = static_cast<double>(layout.elem_count());
    const double dropped = 1.0 - static_cast<double>(kept) / n;
    CHECK(std::abs(dropped - (1 - p)) <= 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("averaging fused outputs over seeds approaches the plain forward") {
    const AttentionInput in = random_attention_input(2, 4, 2, 2024);
    const AttentionOutput plain = attention_forward(in);
    const int trials = 200;
    const double p = 0.9;

    std::vector<double> sum(in.elems(), 0.0), sumsq(in.elems(), 0.0);
    for (int t = 0; t < trials; ++t) {
        const AttentionOutput o = attention_dropout_fused(in, 9000 + t, p, 7);
        for (size_t i = 0; i < o.o.size(); ++i) {
            sum[i] += o.o[i];
            sumsq[i] += static_cast<double>(o.o[i]) * o.o[i];
        }
    }
    for (size_t i = 0; i < sum.size(); ++i) {
        const double mean = sum[i] / trials;
        const double var = (sumsq[i] - sum[i] * sum[i] / trials) / (trials - 1);
        const double se = std::sqrt(std::max(var, 0.0) / trials);
        CHECK(std::abs(mean - plain.o[i]) <= 3.0 * se + 1e-7);
    }
}

TEST_CASE("flipping one mask bit perturbs exactly one output row") {
    const AttentionInput in = random_attention_input(3, 12, 6, 55);
    MaskLayout layout;
    layout.heads = 3;
    layout.seq = 12;
    layout.seed = 4;
    DropoutMask m = generate_mask(layout, KeepThreshold(0.9), 7);
    const AttentionOutput base = attention_dropout_decoupled(in, m, 0.9);

    const uint32_t s = 1, i = 5, j = 7;
    const uint64_t idx = layout.linear_index(0, s, i, j);
    m.bits[idx >> 3] ^= static_cast<uint8_t>(1u << (idx & 7));
    const AttentionOutput tampered = attention_dropout_decoupled(in, m, 0.9);

    for (uint32_t ss = 0; ss < 3; ++ss)
        for (uint32_t ii = 0; ii < 12; ++ii) {
            bool row_differs = false;
            for (uint32_t d = 0; d < 6; ++d)
                if (base.o[in.at(ss, ii, d)] != tampered.o[in.at(ss, ii, d)])
                    row_differs = true;
            if (ss == s && ii == i)
                CHECK(row_differs);
            else
                CHECK_FALSE(row_differs);
        }
}
