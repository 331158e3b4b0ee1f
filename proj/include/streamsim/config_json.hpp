#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamsim/sim.hpp"
#include "streamsim/system.hpp"

namespace streamsim {

using nlohmann::json;

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        raise(ErrKind::ConfigParse, std::string(key) + ": " + e.what());
    }
}

inline ExtKind ext_from_string(const std::string& s) {
    if (s == "transposer") return ExtKind::Transposer;
    if (s == "broadcaster") return ExtKind::Broadcaster;
    raise(ErrKind::ConfigParse, "unknown extension kind: " + s);
}

inline DseDesign dse_from_json(const json& j, DseDesign base) {
    base.num_channels = get_or<std::uint32_t>(j, "num_channels", base.num_channels);
    base.spatial_bounds =
        get_or<std::vector<std::uint64_t>>(j, "spatial_bounds", base.spatial_bounds);
    base.max_temporal_dims =
        get_or<std::uint32_t>(j, "max_temporal_dims", base.max_temporal_dims);
    base.address_buffer_depth =
        get_or<std::uint32_t>(j, "address_buffer_depth", base.address_buffer_depth);
    base.data_buffer_depth =
        get_or<std::uint32_t>(j, "data_buffer_depth", base.data_buffer_depth);
    if (j.contains("extensions")) {
        base.extensions.clear();
        for (const auto& e : j.at("extensions"))
            base.extensions.push_back(ext_from_string(e.get<std::string>()));
    }
    return base;
}

}  // namespace detail

/// System config from JSON; unspecified fields keep the default-system
/// values, so a config file only has to name what it changes.
inline SystemConfig system_from_json(const json& j) {
    SystemConfig sys = SystemConfig::default_system();
    try {
        if (j.contains("memory")) {
            const json& m = j.at("memory");
            sys.memory.bank_width_bits =
                detail::get_or<std::uint32_t>(m, "bank_width_bits", sys.memory.bank_width_bits);
            sys.memory.num_banks =
                detail::get_or<std::uint32_t>(m, "num_banks", sys.memory.num_banks);
            sys.memory.bank_depth_words =
                detail::get_or<std::uint32_t>(m, "bank_depth_words", sys.memory.bank_depth_words);
            sys.memory.group_options = detail::get_or<std::vector<std::uint32_t>>(
                m, "group_options", sys.memory.group_options);
            sys.latency = detail::get_or<std::uint32_t>(m, "latency", sys.latency);
        }
        if (j.contains("core")) {
            const json& c = j.at("core");
            sys.core.ms = detail::get_or<std::uint32_t>(c, "ms", sys.core.ms);
            sys.core.ns = detail::get_or<std::uint32_t>(c, "ns", sys.core.ns);
            sys.core.ks = detail::get_or<std::uint32_t>(c, "ks", sys.core.ks);
        }
        if (j.contains("streams")) {
            const json& s = j.at("streams");
            if (s.contains("a")) sys.dse_a = detail::dse_from_json(s.at("a"), sys.dse_a);
            if (s.contains("b")) sys.dse_b = detail::dse_from_json(s.at("b"), sys.dse_b);
            if (s.contains("c")) sys.dse_c = detail::dse_from_json(s.at("c"), sys.dse_c);
            if (s.contains("d")) sys.dse_d = detail::dse_from_json(s.at("d"), sys.dse_d);
            if (s.contains("e")) sys.dse_e = detail::dse_from_json(s.at("e"), sys.dse_e);
        }
        sys.deadlock_factor =
            detail::get_or<std::uint64_t>(j, "deadlock_factor", sys.deadlock_factor);
    } catch (const json::exception& e) {
        raise(ErrKind::ConfigParse, e.what());
    }
    try {
        sys.validate();
    } catch (const SimError& e) {
        raise(ErrKind::ConfigParse, std::string("invalid system config: ") + e.what());
    }
    return sys;
}

inline WorkloadSpec workload_from_json(const json& j) {
    WorkloadSpec wl;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gemm") wl.kind = WorkloadKind::Gemm;
        else if (kind == "transposed_gemm") wl.kind = WorkloadKind::TransposedGemm;
        else if (kind == "conv") wl.kind = WorkloadKind::Conv;
        else raise(ErrKind::ConfigParse, "unknown workload kind: " + kind);
        wl.quantize_output = detail::get_or<bool>(j, "quantize", false);
        if (wl.kind == WorkloadKind::Conv) {
            wl.conv.h = j.at("h").get<std::uint64_t>();
            wl.conv.w = j.at("w").get<std::uint64_t>();
            wl.conv.c_in = j.at("c_in").get<std::uint64_t>();
            wl.conv.c_out = j.at("c_out").get<std::uint64_t>();
            wl.conv.kernel_h = detail::get_or<std::uint64_t>(j, "kernel_h", 1);
            wl.conv.kernel_w = detail::get_or<std::uint64_t>(j, "kernel_w", wl.conv.kernel_h);
            wl.conv.stride_h = detail::get_or<std::uint64_t>(j, "stride_h", 1);
            wl.conv.stride_w = detail::get_or<std::uint64_t>(j, "stride_w", wl.conv.stride_h);
        } else {
            wl.m = j.at("m").get<std::uint64_t>();
            wl.n = j.at("n").get<std::uint64_t>();
            wl.k = j.at("k").get<std::uint64_t>();
        }
        wl.id = detail::get_or<std::string>(j, "id", std::string(to_string(wl.kind)) + "_" +
                                                         wl.dims());
    } catch (const json::exception& e) {
        raise(ErrKind::ConfigParse, e.what());
    }
    return wl;
}

inline std::vector<WorkloadSpec> workloads_from_json(const json& j) {
    if (!j.is_array()) raise(ErrKind::ConfigParse, "workload list must be a JSON array");
    std::vector<WorkloadSpec> out;
    for (const auto& item : j) out.push_back(workload_from_json(item));
    return out;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrKind::IoError, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrKind::ConfigParse, path + ": " + e.what());
    }
    return j;
}

inline json metrics_to_json(const Metrics& m) {
    json j;
    j["ideal_cycles"] = m.ideal_cycles;
    j["active_cycles"] = m.active_cycles;
    j["utilization"] = m.ran ? utilization(m) : 0.0;
    j["total_memory_accesses"] = m.total_memory_accesses;
    j["conflict_stall_cycles"] = m.conflict_stall_cycles;
    j["core_stall_cycles"] = m.core_stall_cycles;
    json req;
    for (const auto& [id, count] : m.stream_requests) req[std::string(1, id)] = count;
    j["stream_requests"] = req;
    return j;
}

}  // namespace streamsim
