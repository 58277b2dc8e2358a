#include <catch2/catch_amalgamated.hpp>

#include "rgo/capacity.hpp"
#include "rgo/schedule.hpp"

using namespace rgo;

TEST_CASE("mask_bytes arithmetic") {
    WorkloadConfig cfg;
    cfg.batch = 1;
    cfg.heads = 1;
    cfg.seq = 8;
    cfg.head_dim = 1;
    CHECK(mask_bytes(cfg) == 8);

    WorkloadConfig big;
    big.heads = 96;
    big.seq = 32768;
    CHECK(mask_bytes(big) == 12'884'901'888ull);
    CHECK(mask_bytes(big) > uint64_t{8} * 1024 * 1024 * 1024);

    WorkloadConfig g3;
    g3.heads = 96;
    g3.seq = 2048;
    CHECK(mask_bytes(g3) == 50'331'648ull);
}

TEST_CASE("per-GPU bytes divide by the parallelism degrees") {
    WorkloadConfig cfg;
    cfg.heads = 96;
    cfg.seq = 32768;

    CHECK(per_gpu_mask_bytes(cfg, ParallelismPlan{1, 1}) == mask_bytes(cfg));
    CHECK(per_gpu_mask_bytes(cfg, ParallelismPlan{8, 1}) == mask_bytes(cfg) / 8);
    CHECK(per_gpu_mask_bytes(cfg, ParallelismPlan{8, 2}) == 805'306'368ull);
    CHECK(per_gpu_mask_bytes(cfg, ParallelismPlan{8, 2}) * 16 == mask_bytes(cfg));
    CHECK(per_gpu_mask_bytes(cfg, ParallelismPlan{8, 2}) <
          uint64_t{8} * 1024 * 1024 * 1024);

    CHECK_THROWS_AS(per_gpu_mask_bytes(cfg, ParallelismPlan{7, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(per_gpu_mask_bytes(cfg, ParallelismPlan{1, 3}),
                    std::invalid_argument);
}

TEST_CASE("feasibility boundary is inclusive") {
    WorkloadConfig cfg;
    cfg.heads = 96;
    cfg.seq = 2048;
    const uint64_t need = mask_bytes(cfg);
    CHECK(feasible(cfg, ParallelismPlan{}, need).feasible);
    CHECK_FALSE(feasible(cfg, ParallelismPlan{}, need - 1).feasible);
}

TEST_CASE("pipelining chunks shrink the requirement") {
    WorkloadConfig cfg;
    cfg.heads = 96;
    cfg.seq = 2048;
    const ParallelismPlan plan{8, 2};
    // one row-chunk per pipeline stage
    const auto chk = feasible(cfg, plan, uint64_t{8} << 30, cfg.seq / plan.sp_degree);
    CHECK(chk.required_bytes ==
          static_cast<uint64_t>(cfg.batch) * (cfg.heads / 8) * cfg.seq / 8);
}

TEST_CASE("gpt3 dims fit the 8 GiB budget with tp=8") {
    WorkloadConfig g3;
    g3.heads = 96;
    g3.seq = 2048;
    CHECK(feasible(g3, ParallelismPlan{8, 1}, uint64_t{8} << 30).feasible);
}
