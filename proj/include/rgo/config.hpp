#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rgo/cost.hpp"
#include "rgo/schedule.hpp"
#include "rgo/workload.hpp"

// Flat key = value config files for hardware, cost-table and workload
// overrides, plus preset resolution. Lookup order for `--hw foo` style
// names: literal file path, then $RGO_CONFIG_DIR/foo.conf, then the
// built-in preset.

namespace rgo {

using FlatConfig = std::map<std::string, std::string>;

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double as_double(const FlatConfig& kv, const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
        throw std::invalid_argument("config: bad number for key '" + key + "'");
    return v;
}

inline uint64_t as_u64(const FlatConfig& kv, const std::string& key, uint64_t fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size())
        throw std::invalid_argument("config: bad integer for key '" + key + "'");
    return v;
}

inline void check_keys(const FlatConfig& kv, std::initializer_list<const char*> known) {
    for (const auto& [key, value] : kv) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) { ok = true; break; }
        if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

}  // namespace config_detail

/// `key = value` lines; '#' starts a comment; blank lines ignored.
inline FlatConfig parse_flat_config(std::istream& is) {
    FlatConfig kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = config_detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' on line " +
                                        std::to_string(lineno));
        const std::string key = config_detail::trim(t.substr(0, eq));
        const std::string value = config_detail::trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: empty key or value on line " +
                                        std::to_string(lineno));
        kv[key] = value;
    }
    return kv;
}

inline FlatConfig load_flat_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path.string());
    return parse_flat_config(f);
}

inline HardwareConfig hardware_from_config(const FlatConfig& kv,
                                           const std::string& name) {
    using namespace config_detail;
    check_keys(kv, {"mma_flops", "l2_bw", "hbm_bw", "rf_bw", "issue_rate", "alu_rate",
                    "mufu_rate", "fma_rate"});
    HardwareConfig hw;
    hw.name = name;
    hw.mma_flops = as_double(kv, "mma_flops", 0.0);
    hw.l2_bw = as_double(kv, "l2_bw", 0.0);
    hw.hbm_bw = as_double(kv, "hbm_bw", 0.0);
    hw.rf_bw = as_double(kv, "rf_bw", 0.0);
    hw.issue_rate = as_double(kv, "issue_rate", 0.0);
    hw.alu_rate = as_double(kv, "alu_rate", 0.0);
    hw.mufu_rate = as_double(kv, "mufu_rate", 0.0);
    hw.fma_rate = as_double(kv, "fma_rate", 0.0);
    hw.validate();
    return hw;
}

inline CostTable cost_table_from_config(const FlatConfig& kv) {
    using namespace config_detail;
    check_keys(kv, {"gemm_issue_per_flop", "gemm_rf_per_flop", "attn_issue_per_elem",
                    "attn_rf_per_elem", "attn_alu_per_elem", "philox_fma_per_round",
                    "philox_alu_per_round", "philox_alu_fixed", "philox_issue_per_round",
                    "philox_issue_fixed", "mask_store_overhead"});
    CostTable ct;  // defaults are the shipped calibration
    ct.gemm_issue_per_flop = as_double(kv, "gemm_issue_per_flop", ct.gemm_issue_per_flop);
    ct.gemm_rf_per_flop = as_double(kv, "gemm_rf_per_flop", ct.gemm_rf_per_flop);
    ct.attn_issue_per_elem = as_double(kv, "attn_issue_per_elem", ct.attn_issue_per_elem);
    ct.attn_rf_per_elem = as_double(kv, "attn_rf_per_elem", ct.attn_rf_per_elem);
    ct.attn_alu_per_elem = as_double(kv, "attn_alu_per_elem", ct.attn_alu_per_elem);
    ct.philox_fma_per_round =
        as_double(kv, "philox_fma_per_round", ct.philox_fma_per_round);
    ct.philox_alu_per_round =
        as_double(kv, "philox_alu_per_round", ct.philox_alu_per_round);
    ct.philox_alu_fixed = as_double(kv, "philox_alu_fixed", ct.philox_alu_fixed);
    ct.philox_issue_per_round =
        as_double(kv, "philox_issue_per_round", ct.philox_issue_per_round);
    ct.philox_issue_fixed = as_double(kv, "philox_issue_fixed", ct.philox_issue_fixed);
    ct.mask_store_overhead = as_double(kv, "mask_store_overhead", ct.mask_store_overhead);
    ct.validate();
    return ct;
}

inline WorkloadConfig workload_from_config(const FlatConfig& kv) {
    using namespace config_detail;
    check_keys(kv, {"batch", "seq", "heads", "head_dim", "ffn_factor", "precision_bytes",
                    "keep_prob", "philox_rounds"});
    WorkloadConfig cfg;
    cfg.batch = static_cast<uint32_t>(as_u64(kv, "batch", cfg.batch));
    cfg.seq = static_cast<uint32_t>(as_u64(kv, "seq", cfg.seq));
    cfg.heads = static_cast<uint32_t>(as_u64(kv, "heads", cfg.heads));
    cfg.head_dim = static_cast<uint32_t>(as_u64(kv, "head_dim", cfg.head_dim));
    cfg.ffn_factor = static_cast<uint32_t>(as_u64(kv, "ffn_factor", cfg.ffn_factor));
    cfg.precision_bytes =
        static_cast<uint32_t>(as_u64(kv, "precision_bytes", cfg.precision_bytes));
    cfg.keep_prob = as_double(kv, "keep_prob", cfg.keep_prob);
    cfg.philox_rounds =
        static_cast<uint32_t>(as_u64(kv, "philox_rounds", cfg.philox_rounds));
    cfg.validate();
    return cfg;
}

/// Optional config file lookup: literal path first, then
/// $RGO_CONFIG_DIR/<name>.conf.
inline std::optional<std::filesystem::path> find_config_file(const std::string& name) {
    namespace fs = std::filesystem;
    if (fs::exists(name) && fs::is_regular_file(name)) return fs::path(name);
    if (const char* dir = std::getenv("RGO_CONFIG_DIR")) {
        const fs::path p = fs::path(dir) / (name + ".conf");
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

inline HardwareConfig hardware_by_name(const std::string& name) {
    if (const auto path = find_config_file(name))
        return hardware_from_config(load_flat_config(*path), path->stem().string());
    if (name == "gh100") return gh100();
    throw std::invalid_argument("unknown hardware preset or config file '" + name + "'");
}

inline WorkloadConfig workload_by_name(const std::string& name) {
    if (const auto path = find_config_file(name))
        return workload_from_config(load_flat_config(*path));
    return workload_preset(name);  // throws on unknown
}

inline CostTable cost_table_by_name(const std::string& name) {
    if (name == "default" || name.empty()) return CostTable{};
    if (const auto path = find_config_file(name))
        return cost_table_from_config(load_flat_config(*path));
    throw std::invalid_argument("unknown cost table config '" + name + "'");
}

}  // namespace rgo
