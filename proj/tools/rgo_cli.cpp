// rgo — limiter-model reports, sweeps, capacity tables, mask generation
// and fused/decoupled dropout verification for RNG/GEMM overlap analysis.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgo/capacity.hpp"
#include "rgo/config.hpp"
#include "rgo/cost.hpp"
#include "rgo/mask.hpp"
#include "rgo/ref_attention.hpp"
#include "rgo/schedule.hpp"
#include "rgo/workload.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double round_us(double seconds) {
    return std::llround(seconds * 1e9) / 1000.0;  // microseconds, 3 decimals
}

double round_speedup(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", s);
    return std::stod(buf);
}

ordered_json estimate_to_json(const rgo::ScheduleEstimate& est) {
    ordered_json j;
    j["t_baseline_us"] = round_us(est.t_baseline_s);
    j["t_overlap_us"] = round_us(est.t_overlap_s);
    j["speedup"] = round_speedup(est.speedup);
    j["region"] = rgo::region_name(est.region);
    j["t_gemm_total_us"] = round_us(est.t_gemm_total_s);
    j["t_rng_standalone_us"] = round_us(est.t_rng_standalone_s);
    j["t_rng_exposed_us"] = round_us(est.t_rng_exposed_s);
    j["t_attn_us"] = round_us(est.t_attn_s);
    j["t_fused_us"] = round_us(est.t_fused_s);
    j["gemm_bottleneck"] = rgo::limiter_name(est.gemm_bottleneck);
    j["attn_bottleneck"] = rgo::limiter_name(est.attn_bottleneck);
    j["rng_bottleneck"] = rgo::limiter_name(est.rng_bottleneck);
    j["fused_bottleneck"] = rgo::limiter_name(est.fused_bottleneck);
    return j;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path);
}

struct WorkloadFlags {
    std::string preset;
    rgo::WorkloadConfig cfg;
    bool has_seq = false, has_heads = false;

    void attach(CLI::App* cmd, bool preset_required) {
        auto* p = cmd->add_option("--preset", preset, "workload preset (gpt3, llama2) or config file");
        if (preset_required) p->required();
        cmd->add_option("--b", cfg.batch, "batch size");
        cmd->add_option("--sq", cfg.seq, "sequence length")->each([this](const std::string&) { has_seq = true; });
        cmd->add_option("--nh", cfg.heads, "number of heads")->each([this](const std::string&) { has_heads = true; });
        cmd->add_option("--dh", cfg.head_dim, "hidden dimension per head");
        cmd->add_option("--ffn", cfg.ffn_factor, "FFN expansion factor");
        cmd->add_option("--prec", cfg.precision_bytes, "bytes per matrix element");
        cmd->add_option("--p", cfg.keep_prob, "dropout keep probability");
        cmd->add_option("--rounds", cfg.philox_rounds, "Philox rounds");
    }

    rgo::WorkloadConfig resolve() const {
        rgo::WorkloadConfig out = cfg;
        if (!preset.empty()) {
            out = rgo::workload_by_name(preset);
            // explicit dims override the preset
            if (has_seq) out.seq = cfg.seq;
            if (has_heads) out.heads = cfg.heads;
        } else if (!has_seq || !has_heads) {
            throw std::invalid_argument("specify --preset or both --sq and --nh");
        }
        out.validate();
        return out;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RNG/GEMM overlap performance model and dropout mask pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // accept --hw / --cost-table after the subcommand too

    std::string hw_name = "gh100";
    std::string ct_name = "default";
    app.add_option("--hw", hw_name, "hardware preset name or config file")
        ->capture_default_str();
    app.add_option("--cost-table", ct_name, "cost table config file")
        ->capture_default_str();

    // model
    auto* cmd_model = app.add_subcommand("model", "single-point schedule report (JSON)");
    WorkloadFlags model_wl;
    model_wl.attach(cmd_model, false);
    std::string model_out = "-";
    cmd_model->add_option("--out", model_out, "output path (default stdout)");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "grid sweep (CSV)");
    std::vector<uint32_t> sweep_sq = rgo::default_seq_grid();
    std::vector<uint32_t> sweep_nh = rgo::default_heads_grid();
    rgo::WorkloadConfig sweep_tpl;
    std::string sweep_out = "-";
    cmd_sweep->add_option("--sq", sweep_sq, "sequence lengths");
    cmd_sweep->add_option("--nh", sweep_nh, "head counts");
    cmd_sweep->add_option("--b", sweep_tpl.batch, "batch size");
    cmd_sweep->add_option("--dh", sweep_tpl.head_dim, "hidden dimension per head");
    cmd_sweep->add_option("--rounds", sweep_tpl.philox_rounds, "Philox rounds");
    cmd_sweep->add_option("--out", sweep_out, "output path (default stdout)");

    // capacity
    auto* cmd_cap = app.add_subcommand("capacity", "HBM capacity table (JSON)");
    WorkloadFlags cap_wl;
    cap_wl.attach(cmd_cap, false);
    std::vector<uint32_t> cap_tp{1, 2, 4, 8};
    std::vector<uint32_t> cap_sp{1, 2};
    double cap_budget_gib = 8.0;
    uint32_t cap_chunks = 1;
    std::string cap_out = "-";
    cmd_cap->add_option("--tp", cap_tp, "tensor parallel degrees");
    cmd_cap->add_option("--sp", cap_sp, "sequence parallel degrees");
    cmd_cap->add_option("--budget-gib", cap_budget_gib, "HBM budget for RNG data (GiB)");
    cmd_cap->add_option("--chunks", cap_chunks, "pipeline chunk count");
    cmd_cap->add_option("--out", cap_out, "output path (default stdout)");

    // maskgen
    auto* cmd_mask = app.add_subcommand("maskgen", "write a dropout mask file");
    rgo::MaskLayout mask_layout;
    double mask_p = 0.9;
    uint32_t mask_rounds = 7;
    unsigned mask_workers = 0;
    std::string mask_out;
    cmd_mask->add_option("--b", mask_layout.batch, "batch size")->required();
    cmd_mask->add_option("--nh", mask_layout.heads, "number of heads")->required();
    cmd_mask->add_option("--sq", mask_layout.seq, "sequence length")->required();
    cmd_mask->add_option("--p", mask_p, "keep probability")->required();
    cmd_mask->add_option("--seed", mask_layout.seed, "64-bit seed")->required();
    cmd_mask->add_option("--base-offset", mask_layout.base_offset, "counter offset");
    cmd_mask->add_option("--rounds", mask_rounds, "Philox rounds");
    cmd_mask->add_option("--workers", mask_workers, "worker threads (0 = auto)");
    cmd_mask->add_option("--out", mask_out, "output mask file")->required();

    // verify
    auto* cmd_verify =
        app.add_subcommand("verify", "fused vs decoupled dropout equivalence suite");
    uint32_t verify_rounds = 7;
    cmd_verify->add_option("--rounds", verify_rounds, "Philox rounds");

    // whatif
    auto* cmd_whatif =
        app.add_subcommand("whatif", "paired sweep for scaled MMA-class throughputs (CSV)");
    double whatif_factor = 2.0;
    std::vector<uint32_t> whatif_sq = rgo::default_seq_grid();
    std::vector<uint32_t> whatif_nh = rgo::default_heads_grid();
    rgo::WorkloadConfig whatif_tpl;
    std::string whatif_out = "-";
    cmd_whatif->add_option("--factor", whatif_factor, "MMA-class throughput factor");
    cmd_whatif->add_option("--sq", whatif_sq, "sequence lengths");
    cmd_whatif->add_option("--nh", whatif_nh, "head counts");
    cmd_whatif->add_option("--out", whatif_out, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        const rgo::HardwareConfig hw = rgo::hardware_by_name(hw_name);
        const rgo::CostTable ct = rgo::cost_table_by_name(ct_name);
        const rgo::CalibrationFactors cal;

        if (*cmd_model) {
            const rgo::WorkloadConfig cfg = model_wl.resolve();
            const rgo::ScheduleEstimate est = rgo::estimate(cfg, hw, ct, cal);
            ordered_json j;
            j["workload"] = {{"batch", cfg.batch},       {"seq", cfg.seq},
                             {"heads", cfg.heads},       {"head_dim", cfg.head_dim},
                             {"ffn_factor", cfg.ffn_factor},
                             {"precision_bytes", cfg.precision_bytes},
                             {"keep_prob", cfg.keep_prob},
                             {"philox_rounds", cfg.philox_rounds}};
            j["hardware"] = hw.name;
            j.update(estimate_to_json(est));
            write_output(model_out, j.dump(2) + "\n");
        } else if (*cmd_sweep) {
            const auto rows = rgo::sweep(sweep_sq, sweep_nh, sweep_tpl, hw, ct, cal);
            write_output(sweep_out, rgo::sweep_csv(rows));
        } else if (*cmd_cap) {
            const rgo::WorkloadConfig cfg = cap_wl.resolve();
            const uint64_t budget =
                static_cast<uint64_t>(cap_budget_gib * 1024.0 * 1024.0 * 1024.0);
            ordered_json table = ordered_json::array();
            for (uint32_t tp : cap_tp) {
                for (uint32_t sp : cap_sp) {
                    const rgo::ParallelismPlan plan{tp, sp};
                    const auto check = rgo::feasible(cfg, plan, budget, cap_chunks);
                    ordered_json row;
                    row["tp"] = tp;
                    row["sp"] = sp;
                    row["chunks"] = cap_chunks;
                    row["per_gpu_bytes"] = check.required_bytes;
                    row["feasible"] = check.feasible;
                    table.push_back(row);
                }
            }
            ordered_json j;
            j["workload"] = {{"batch", cfg.batch}, {"seq", cfg.seq}, {"heads", cfg.heads}};
            j["total_mask_bytes"] = rgo::mask_bytes(cfg);
            j["budget_bytes"] = budget;
            j["plans"] = table;
            write_output(cap_out, j.dump(2) + "\n");
        } else if (*cmd_mask) {
            const rgo::DropoutMask mask = rgo::generate_mask(
                mask_layout, rgo::KeepThreshold(mask_p), static_cast<int>(mask_rounds),
                mask_workers);
            rgo::save_mask(mask, mask_out);
        } else if (*cmd_verify) {
            const auto results = rgo::run_equiv_suite(rgo::default_equiv_grid(),
                                                      static_cast<int>(verify_rounds));
            int mismatches = 0;
            for (const auto& r : results) {
                std::printf("%-4s slices=%u sq=%u dh=%u seed=%llu p=%.2f\n",
                            r.bitwise_equal ? "ok" : "FAIL", r.c.slices, r.c.seq,
                            r.c.head_dim, static_cast<unsigned long long>(r.c.seed),
                            r.c.p);
                if (!r.bitwise_equal) ++mismatches;
            }
            std::printf("%zu cases, %d mismatches\n", results.size(), mismatches);
            if (mismatches > 0) return 1;
        } else if (*cmd_whatif) {
            const auto base = rgo::sweep(whatif_sq, whatif_nh, whatif_tpl, hw, ct, cal);
            const auto scaled = rgo::sweep(whatif_sq, whatif_nh, whatif_tpl,
                                           rgo::whatif_scale(hw, whatif_factor), ct, cal);
            std::string csv = "sq,n_heads,speedup,speedup_scaled,delta\n";
            for (size_t i = 0; i < base.size(); ++i) {
                char line[160];
                std::snprintf(line, sizeof line, "%u,%u,%s,%s,%+.4f\n", base[i].seq,
                              base[i].n_heads,
                              rgo::format_speedup(base[i].est.speedup).c_str(),
                              rgo::format_speedup(scaled[i].est.speedup).c_str(),
                              scaled[i].est.speedup - base[i].est.speedup);
                csv += line;
            }
            write_output(whatif_out, csv);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
