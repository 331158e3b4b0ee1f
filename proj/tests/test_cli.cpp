#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "streamsim/cli.hpp"

using namespace streamsim;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("streamsim_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

WorkloadSpec small_gemm() {
    WorkloadSpec wl;
    wl.kind = WorkloadKind::Gemm;
    wl.m = wl.n = wl.k = 16;
    wl.id = "gemm16";
    return wl;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("run writes one metrics JSON and one summary row", "[cli]") {
    const fs::path dir = fresh_dir("run");
    RunManifest m;
    m.workloads = {small_gemm()};
    m.levels = {6};
    m.out_dir = dir.string();
    CHECK(cmd_run(m) == kExitOk);
    CHECK(fs::exists(dir / "gemm16_f6.json"));
    const std::string csv = slurp(dir / "summary.csv");
    CHECK(count_lines(csv) == 2);  // header + one row
    CHECK(csv.rfind(summary_csv_header(), 0) == 0);
    const auto j = load_json_file((dir / "gemm16_f6.json").string());
    CHECK(j.at("metrics").at("utilization").get<double>() > 0.5);
    CHECK(j.at("metrics").at("ideal_cycles").get<std::uint64_t>() == 8);
}

TEST_CASE("malformed config maps to the config exit code", "[cli]") {
    const fs::path dir = fresh_dir("badcfg");
    const fs::path cfg = dir / "bad.json";
    std::ofstream(cfg) << "{ not valid json";
    RunManifest m;
    m.config_path = cfg.string();
    m.workloads = {small_gemm()};
    m.out_dir = (dir / "out").string();
    try {
        cmd_run(m);
        FAIL("expected ConfigParse");
    } catch (const SimError& e) {
        CHECK(e.kind() == ErrKind::ConfigParse);
    }
}

TEST_CASE("an injected fault yields the correctness exit code", "[cli]") {
    const fs::path dir = fresh_dir("fault");
    RunManifest m;
    m.workloads = {small_gemm()};
    m.out_dir = dir.string();
    m.inject_fault = true;
    CHECK(cmd_run(m) == kExitCorrectness);
}

TEST_CASE("ablate emits the grid and normalized per-group aggregates", "[cli]") {
    const fs::path dir = fresh_dir("ablate");
    RunManifest m;
    m.workloads = {small_gemm()};
    {
        WorkloadSpec tg = small_gemm();
        tg.kind = WorkloadKind::TransposedGemm;
        tg.id = "tg16";
        m.workloads.push_back(tg);
        WorkloadSpec cv;
        cv.kind = WorkloadKind::Conv;
        cv.conv = ConvParams{10, 10, 16, 16, 3, 3, 1, 1};
        cv.id = "cv";
        m.workloads.push_back(cv);
    }
    m.out_dir = dir.string();
    CHECK(cmd_ablate(m) == kExitOk);
    const std::string csv = slurp(dir / "summary.csv");
    CHECK(count_lines(csv) == 1 + 3 * 6);
    const std::string agg = slurp(dir / "ablate_summary.csv");
    CHECK(count_lines(agg) == 1 + 3 * 6);  // three groups x six levels
    // Every level-1 aggregate is normalized to exactly 1.0.
    std::istringstream in(agg);
    std::string line;
    std::getline(in, line);  // header
    int base_rows = 0;
    while (std::getline(in, line)) {
        const auto first = line.find(',');
        const auto second = line.find(',', first + 1);
        if (line.substr(first + 1, second - first - 1) == "1") {
            CHECK(line.substr(line.rfind(',') + 1) == "1.000000");
            ++base_rows;
        }
    }
    CHECK(base_rows == 3);
}

TEST_CASE("suite runs are reproducible byte for byte", "[cli]") {
    const fs::path dir1 = fresh_dir("suite1");
    const fs::path dir2 = fresh_dir("suite2");
    RunManifest m;
    m.seed = 7;
    m.levels = {6};
    m.jobs = 2;
    // A trimmed suite keeps this test quick; determinism is what matters.
    m.workloads = make_suite(7);
    m.workloads.resize(6);
    m.out_dir = dir1.string();
    CHECK(cmd_suite(m) == kExitOk);
    m.out_dir = dir2.string();
    CHECK(cmd_suite(m) == kExitOk);
    CHECK(slurp(dir1 / "summary.csv") == slurp(dir2 / "summary.csv"));

    // Idempotence: rerunning into the same directory rewrites identical bytes.
    CHECK(cmd_suite(m) == kExitOk);
    CHECK(slurp(dir1 / "summary.csv") == slurp(dir2 / "summary.csv"));
}

TEST_CASE("an empty workload list produces a header-only CSV", "[cli]") {
    const fs::path dir = fresh_dir("empty");
    const fs::path wls = dir / "none.json";
    std::ofstream(wls) << "[]";
    RunManifest m;
    m.workloads_path = wls.string();
    m.out_dir = (dir / "out").string();
    CHECK(cmd_suite(m) == kExitOk);
    const std::string csv = slurp(dir / "out" / "summary.csv");
    CHECK(count_lines(csv) == 1);
    CHECK(csv == std::string(summary_csv_header()) + "\n");
}

TEST_CASE("summary CSV of a pinned run matches the golden bytes", "[cli]") {
    const fs::path dir = fresh_dir("golden");
    RunManifest m;
    m.workloads = {small_gemm()};
    m.levels = {6};
    m.seed = 1;
    m.out_dir = dir.string();
    REQUIRE(cmd_run(m) == kExitOk);
    const std::string expect =
        "workload_id,kind,dims,flags,utilization,ideal_cycles,active_cycles,accesses,"
        "conflicts,req_a,req_b,req_c,req_d,req_e,error\n"
        "gemm16,gemm,16x16x16,6,0.888889,8,9,384,0,64,64,128,128,0,\n";
    CHECK(slurp(dir / "summary.csv") == expect);
}

TEST_CASE("flag selections parse ranges and lists", "[cli]") {
    CHECK(parse_levels("6") == std::vector<int>{6});
    CHECK(parse_levels("1-6") == std::vector<int>{1, 2, 3, 4, 5, 6});
    CHECK(parse_levels("2,4") == std::vector<int>{2, 4});
    CHECK_THROWS_AS(parse_levels("0"), SimError);
    CHECK_THROWS_AS(parse_levels("7"), SimError);
    CHECK_THROWS_AS(parse_levels("abc"), SimError);
    CHECK_THROWS_AS(parse_levels(""), SimError);
}

TEST_CASE("workload JSON round trip", "[cli]") {
    const json j = json::parse(R"([
        {"kind": "gemm", "m": 32, "n": 16, "k": 8, "quantize": true},
        {"kind": "conv", "h": 10, "w": 10, "c_in": 16, "c_out": 16,
         "kernel_h": 3, "stride_h": 1, "id": "layer0"}
    ])");
    const auto wls = workloads_from_json(j);
    REQUIRE(wls.size() == 2);
    CHECK(wls[0].kind == WorkloadKind::Gemm);
    CHECK(wls[0].quantize_output);
    CHECK(wls[0].m == 32);
    CHECK(wls[1].kind == WorkloadKind::Conv);
    CHECK(wls[1].conv.kernel_w == 3);  // defaults to kernel_h
    CHECK(wls[1].id == "layer0");
    CHECK_THROWS_AS(workloads_from_json(json::parse(R"({"kind":"gemm"})")), SimError);
}

TEST_CASE("system config JSON overrides defaults and validates", "[cli]") {
    const json j = json::parse(R"({
        "memory": {"num_banks": 256, "bank_depth_words": 128, "group_options": [256, 64, 1]},
        "streams": {"a": {"data_buffer_depth": 4}}
    })");
    const SystemConfig sys = system_from_json(j);
    CHECK(sys.memory.num_banks == 256);
    CHECK(sys.dse_a.data_buffer_depth == 4);
    CHECK(sys.dse_b.data_buffer_depth == 8);
    CHECK_THROWS_AS(system_from_json(json::parse(R"({"core": {"ms": 3}})")), SimError);
}

#ifdef STREAMSIM_BIN
TEST_CASE("binary exit codes match the documented contract", "[cli][process]") {
    const fs::path dir = fresh_dir("proc");
    const fs::path wls = dir / "w.json";
    std::ofstream(wls) << R"([{"kind": "gemm", "m": 16, "n": 16, "k": 16}])";
    const std::string base = std::string(STREAMSIM_BIN);

    int rc = std::system(
        (base + " run --workloads " + wls.string() + " --out " + (dir / "out").string() +
         " --flags 6 > /dev/null 2>&1")
            .c_str());
    CHECK(WEXITSTATUS(rc) == kExitOk);
    CHECK(fs::exists(dir / "out" / "summary.csv"));

    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{";
    rc = std::system((base + " run --config " + bad.string() + " --workloads " + wls.string() +
                      " --out " + (dir / "out2").string() + " > /dev/null 2>&1")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == kExitConfig);

    rc = std::system((base + " run --workloads " + wls.string() + " --inject-fault --out " +
                      (dir / "out3").string() + " > /dev/null 2>&1")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == kExitCorrectness);
}
#endif
