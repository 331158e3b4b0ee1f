#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "streamsim/config_json.hpp"
#include "streamsim/sim.hpp"
#include "streamsim/suite.hpp"

namespace streamsim {

struct RunManifest {
    std::string config_path;                 // empty: built-in default system
    std::string workloads_path;              // empty: use inline workloads
    std::vector<WorkloadSpec> workloads;
    std::vector<int> levels{kNumFlagLevels};
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::uint64_t deadlock_budget = 0;
    bool inject_fault = false;               // test hook, corrupts the golden check
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCorrectness = 3;

/// "6", "1-6" or "2,4,6" -> list of ladder levels.
inline std::vector<int> parse_levels(const std::string& text) {
    std::vector<int> levels;
    auto number = [](const std::string& tok) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            raise(ErrKind::ConfigParse, "bad flag level: '" + tok + "'");
        }
    };
    auto push = [&levels, &number](const std::string& tok) {
        const auto dash = tok.find('-');
        if (dash != std::string::npos) {
            const int lo = number(tok.substr(0, dash));
            const int hi = number(tok.substr(dash + 1));
            for (int l = lo; l <= hi; ++l) levels.push_back(l);
        } else {
            levels.push_back(number(tok));
        }
    };
    std::string tok;
    for (char ch : text) {
        if (ch == ',') {
            push(tok);
            tok.clear();
        } else {
            tok += ch;
        }
    }
    if (!tok.empty()) push(tok);
    for (int l : levels)
        if (l < 1 || l > kNumFlagLevels)
            raise(ErrKind::ConfigParse, "flag level out of range: " + std::to_string(l));
    if (levels.empty()) raise(ErrKind::ConfigParse, "empty flag selection");
    return levels;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs && t < count; ++t)
        threads.emplace_back([&next, count, &fn] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : threads) th.join();
}

inline std::string format_util(const Metrics& m) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", m.ran ? utilization(m) : 0.0);
    return buf;
}

}  // namespace detail

inline const char* summary_csv_header() {
    return "workload_id,kind,dims,flags,utilization,ideal_cycles,active_cycles,accesses,"
           "conflicts,req_a,req_b,req_c,req_d,req_e,error";
}

inline std::string summary_csv_row(const AblateRow& row) {
    std::string line = row.workload_id + "," + row.group + "," + row.dims + "," +
                       std::to_string(row.level) + ",";
    if (row.error.empty()) {
        const Metrics& m = row.metrics;
        line += detail::format_util(m) + "," + std::to_string(m.ideal_cycles) + "," +
                std::to_string(m.active_cycles) + "," + std::to_string(m.total_memory_accesses) +
                "," + std::to_string(m.conflict_stall_cycles);
        for (char s : {'a', 'b', 'c', 'd', 'e'}) line += "," + std::to_string(m.requests(s));
        line += ",";
    } else {
        line += "0,0,0,0,0,0,0,0,0,0," + row.error;
    }
    return line;
}

inline void write_summary_csv(const std::vector<AblateRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrKind::IoError, "cannot write " + path);
    out << summary_csv_header() << "\n";
    for (const auto& row : rows) out << summary_csv_row(row) << "\n";
}

/// Per-(group, level) aggregate with access counts normalized to level 1.
inline void write_ablate_summary_csv(const std::vector<AblateRow>& rows,
                                     const std::string& path) {
    struct Agg {
        double util_sum = 0;
        std::uint64_t count = 0;
        std::uint64_t accesses = 0;
    };
    std::map<std::pair<std::string, int>, Agg> aggs;
    for (const auto& row : rows) {
        if (!row.error.empty()) continue;
        Agg& a = aggs[{row.group, row.level}];
        a.util_sum += utilization(row.metrics);
        a.count += 1;
        a.accesses += row.metrics.total_memory_accesses;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrKind::IoError, "cannot write " + path);
    out << "group,flags,mean_utilization,total_accesses,normalized_accesses\n";
    for (const auto& [key, a] : aggs) {
        const auto base = aggs.find({key.first, 1});
        const double norm = (base != aggs.end() && base->second.accesses > 0)
                                ? static_cast<double>(a.accesses) /
                                      static_cast<double>(base->second.accesses)
                                : 1.0;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.6f,%llu,%.6f", a.util_sum / a.count,
                      static_cast<unsigned long long>(a.accesses), norm);
        out << key.first << "," << key.second << "," << buf << "\n";
    }
}

namespace detail {

inline SystemConfig manifest_system(const RunManifest& manifest) {
    if (manifest.config_path.empty()) return SystemConfig::default_system();
    return system_from_json(load_json_file(manifest.config_path));
}

inline std::vector<WorkloadSpec> manifest_workloads(const RunManifest& manifest) {
    if (!manifest.workloads_path.empty())
        return workloads_from_json(load_json_file(manifest.workloads_path));
    return manifest.workloads;
}

inline std::vector<AblateRow> run_grid(const SystemConfig& sys,
                                       const std::vector<WorkloadSpec>& workloads,
                                       const std::vector<int>& levels,
                                       const RunManifest& manifest) {
    std::vector<AblateRow> rows(workloads.size() * levels.size());
    detail::parallel_for(rows.size(), manifest.jobs, [&](std::size_t i) {
        const WorkloadSpec& wl = workloads[i / levels.size()];
        const int level = levels[i % levels.size()];
        AblateRow& row = rows[i];
        row.workload_id = wl.id;
        row.group = to_string(wl.kind);
        row.dims = wl.dims();
        row.level = level;
        try {
            const WorkloadData data =
                make_workload_data(wl, manifest.seed ^ stable_hash(wl.id));
            RunOptions opts;
            opts.flags = FeatureFlags::level(level);
            opts.deadlock_budget = manifest.deadlock_budget;
            opts.inject_fault = manifest.inject_fault;
            row.metrics = run(sys, wl, data, opts).metrics;
        } catch (const SimError& e) {
            row.error = e.what();
        }
    });
    return rows;
}

inline void write_run_json(const AblateRow& row, const std::string& out_dir) {
    json j;
    j["workload"] = row.workload_id;
    j["kind"] = row.group;
    j["dims"] = row.dims;
    j["flags"] = row.level;
    if (row.error.empty())
        j["metrics"] = metrics_to_json(row.metrics);
    else
        j["error"] = row.error;
    const std::string path = out_dir + "/" + row.workload_id + "_f" +
                             std::to_string(row.level) + ".json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrKind::IoError, "cannot write " + path);
    out << j.dump(2) << "\n";
}

inline int exit_code_for(const std::vector<AblateRow>& rows) {
    for (const auto& row : rows)
        if (row.error.find("CorrectnessMismatch") != std::string::npos) return kExitCorrectness;
    for (const auto& row : rows)
        if (!row.error.empty()) return kExitError;
    return kExitOk;
}

}  // namespace detail

/// Executes every (workload, flag level) pair of the manifest, writing one
/// metrics JSON per run plus summary.csv. Correctness failures yield exit
/// code 3, config problems 2.
inline int cmd_run(const RunManifest& manifest) {
    const SystemConfig sys = detail::manifest_system(manifest);
    const auto workloads = detail::manifest_workloads(manifest);
    std::filesystem::create_directories(manifest.out_dir);
    const auto rows = detail::run_grid(sys, workloads, manifest.levels, manifest);
    for (const auto& row : rows) detail::write_run_json(row, manifest.out_dir);
    write_summary_csv(rows, manifest.out_dir + "/summary.csv");
    return detail::exit_code_for(rows);
}

/// Full (workload x flag ladder) sweep with per-group aggregates; failed
/// runs are recorded in their row and the sweep continues.
inline int cmd_ablate(const RunManifest& manifest) {
    const SystemConfig sys = detail::manifest_system(manifest);
    const auto workloads = detail::manifest_workloads(manifest);
    std::filesystem::create_directories(manifest.out_dir);
    std::vector<int> levels = manifest.levels;
    if (levels.size() == 1 && levels[0] == kNumFlagLevels) {
        levels.clear();
        for (int l = 1; l <= kNumFlagLevels; ++l) levels.push_back(l);
    }
    const auto rows = detail::run_grid(sys, workloads, levels, manifest);
    write_summary_csv(rows, manifest.out_dir + "/summary.csv");
    write_ablate_summary_csv(rows, manifest.out_dir + "/ablate_summary.csv");
    return detail::exit_code_for(rows);
}

/// Generates the seeded synthetic suite and runs it fully featured.
inline int cmd_suite(const RunManifest& manifest) {
    const SystemConfig sys = detail::manifest_system(manifest);
    auto workloads = detail::manifest_workloads(manifest);
    if (workloads.empty() && manifest.workloads_path.empty())
        workloads = make_suite(manifest.seed);
    std::filesystem::create_directories(manifest.out_dir);
    const auto rows = detail::run_grid(sys, workloads, manifest.levels, manifest);
    write_summary_csv(rows, manifest.out_dir + "/summary.csv");
    return detail::exit_code_for(rows);
}

}  // namespace streamsim
