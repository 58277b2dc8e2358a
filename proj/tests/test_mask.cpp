#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rgo/mask.hpp"

using namespace rgo;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("element_source maps linear indices to blocks and lanes") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 2;
    layout.seq = 4;  // 32 elements

    auto [c0, l0] = element_source(layout, 0);
    CHECK(c0 == PhiloxCounter{0, 0, 0, 0});
    CHECK(l0 == 0);

    auto [c7, l7] = element_source(layout, 7);
    CHECK(c7 == PhiloxCounter{1, 0, 0, 0});
    CHECK(l7 == 3);

    CHECK_THROWS_AS(element_source(layout, 32), std::invalid_argument);
}

TEST_CASE("element_source carries 64-bit counter arithmetic into c1") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 4;
    layout.seq = 65536;  // 2^34 elements
    layout.base_offset = 3;

    const uint64_t idx = uint64_t{1} << 33;
    auto [c, lane] = element_source(layout, idx);
    const uint64_t ctr = 3 + (idx >> 2);
    CHECK(lane == 0);
    CHECK(c.c0 == static_cast<uint32_t>(ctr));
    CHECK(c.c1 == static_cast<uint32_t>(ctr >> 32));
    CHECK(c.c1 == 0);  // 2^31 + 3 does not carry yet

    layout.base_offset = 0xFFFFFFFFull;
    auto [c2, lane2] = element_source(layout, idx);
    const uint64_t ctr2 = 0xFFFFFFFFull + (idx >> 2);
    CHECK(c2.c0 == static_cast<uint32_t>(ctr2));
    CHECK(c2.c1 == 1);  // carried
    CHECK(lane2 == 0);
}

TEST_CASE("keep threshold endpoints") {
    CHECK(KeepThreshold(0.0).threshold() == 0);
    CHECK(KeepThreshold(1.0).threshold() == uint64_t{1} << 32);
    CHECK(KeepThreshold(1.0).keeps(0xFFFFFFFFu));
    CHECK_FALSE(KeepThreshold(0.0).keeps(0));
    CHECK_THROWS_AS(KeepThreshold(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(KeepThreshold(1.1), std::invalid_argument);
}

TEST_CASE("generate_mask endpoints produce constant masks") {
    MaskLayout layout;
    layout.batch = 2;
    layout.heads = 3;
    layout.seq = 16;
    layout.seed = 99;

    const DropoutMask ones = generate_mask(layout, KeepThreshold(1.0), 7);
    const DropoutMask zeros = generate_mask(layout, KeepThreshold(0.0), 7);
    for (uint32_t b = 0; b < 2; ++b)
        for (uint32_t h = 0; h < 3; ++h)
            for (uint32_t i = 0; i < 16; ++i)
                for (uint32_t j = 0; j < 16; ++j) {
                    CHECK(mask_bit(ones, b, h, i, j));
                    CHECK_FALSE(mask_bit(zeros, b, h, i, j));
                }
    // padding bits beyond the element count stay zero
    const uint64_t n = layout.elem_count();
    if (n % 8 != 0) CHECK((ones.bits.back() >> (n % 8)) == 0);
}

TEST_CASE("generate_mask keep fraction tracks p") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 2;
    layout.seq = 64;  // 8192 elements
    layout.seed = 42;
    const DropoutMask m = generate_mask(layout, KeepThreshold(0.9), 7);

    uint64_t kept = 0;
    for (uint8_t byte : m.bits) kept += std::popcount(byte);
    const double f = static_cast<double>(kept) / static_cast<double>(layout.elem_count());
    const double bound = 3.0 * std::sqrt(0.9 * 0.1 / 8192.0);
    CHECK(std::abs(f - 0.9) <= bound);
}

TEST_CASE("drop-rate statistics over a million elements") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 4;
    layout.seq = 512;  // 2^20 elements
    layout.seed = 7;
    for (double p : {0.5, 0.9}) {
        const DropoutMask m = generate_mask(layout, KeepThreshold(p), 7);
        uint64_t kept = 0;
        for (uint8_t byte : m.bits) kept += std::popcount(byte);
        const double n = static_cast<double>(layout.elem_count());
        const double f = static_cast<double>(kept) / n;
        CHECK(std::abs(f - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST_CASE("mask bits equal direct PRNG recomputation") {
    MaskLayout layout;
    layout.batch = 2;
    layout.heads = 4;
    layout.seq = 96;
    layout.seed = 0xABCDEF0102030405ull;
    layout.base_offset = 12345;
    const KeepThreshold thr(0.8);
    const DropoutMask m = generate_mask(layout, thr, 7);

    std::mt19937_64 gen(3);
    for (int t = 0; t < 100000; ++t) {
        const uint32_t b = static_cast<uint32_t>(gen() % layout.batch);
        const uint32_t h = static_cast<uint32_t>(gen() % layout.heads);
        const uint32_t i = static_cast<uint32_t>(gen() % layout.seq);
        const uint32_t j = static_cast<uint32_t>(gen() % layout.seq);
        const bool direct = keep_bit_direct(layout, thr, 7, layout.linear_index(b, h, i, j));
        REQUIRE(mask_bit(m, b, h, i, j) == direct);
    }
}

TEST_CASE("mask generation is independent of worker count") {
    MaskLayout layout;
    layout.batch = 3;
    layout.heads = 5;
    layout.seq = 97;  // element count not divisible by 8
    layout.seed = 11;
    const KeepThreshold thr(0.75);
    const DropoutMask m1 = generate_mask(layout, thr, 7, 1);
    const DropoutMask m8 = generate_mask(layout, thr, 7, 8);
    CHECK(m1.bits == m8.bits);
}

TEST_CASE("generate_mask enforces the capacity guard") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 96;
    layout.seq = 1u << 17;  // 96 * 2^34 bits > 2^36
    try {
        generate_mask(layout, KeepThreshold(0.5), 7);
        FAIL("expected size guard to trigger");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bytes") != std::string::npos);
        CHECK(msg.find("guard") != std::string::npos);
    }
}

TEST_CASE("mask file roundtrip is bit identical") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 3;
    layout.seq = 50;
    layout.seed = 31337;
    layout.base_offset = 77;
    const DropoutMask m = generate_mask(layout, KeepThreshold(0.9), 5);

    const fs::path path = temp_file("rgo_mask_roundtrip.bin");
    save_mask(m, path);
    const DropoutMask r = load_mask(path);

    CHECK(r.layout.batch == m.layout.batch);
    CHECK(r.layout.heads == m.layout.heads);
    CHECK(r.layout.seq == m.layout.seq);
    CHECK(r.layout.seed == m.layout.seed);
    CHECK(r.layout.base_offset == m.layout.base_offset);
    CHECK(r.keep_prob == m.keep_prob);
    CHECK(r.rounds == m.rounds);
    CHECK(r.bits == m.bits);

    // file size = 40-byte header + packed payload
    CHECK(fs::file_size(path) == 40 + (m.layout.elem_count() + 7) / 8);
    fs::remove(path);
}

TEST_CASE("mask file rejects bad magic and truncation") {
    MaskLayout layout;
    layout.batch = 1;
    layout.heads = 1;
    layout.seq = 16;
    const DropoutMask m = generate_mask(layout, KeepThreshold(0.5), 7);
    const fs::path path = temp_file("rgo_mask_bad.bin");
    save_mask(m, path);

    SECTION("wrong magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.put('X');
        f.close();
        CHECK_THROWS_AS(load_mask(path), std::runtime_error);
    }
    SECTION("truncated payload") {
        fs::resize_file(path, fs::file_size(path) - 1);
        CHECK_THROWS_AS(load_mask(path), std::runtime_error);
    }
    fs::remove(path);
}
