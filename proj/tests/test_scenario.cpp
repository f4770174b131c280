#include <kreinlat/kreinlat.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace kreinlat;
namespace fs = std::filesystem;

#ifndef KREINLAT_SCENARIO_DIR
#define KREINLAT_SCENARIO_DIR "scenarios"
#endif

namespace {

json ds_json(const char* name) {
    std::ifstream is(std::string(KREINLAT_SCENARIO_DIR) + "/" + name + ".json");
    return json::parse(is);
}

// DS1 with a short time window so a full run stays cheap
json light(json cfg) {
    cfg["time"] = {{"t_max", 20.0}, {"n_steps", 256}};
    cfg["analysis"]["state_pairs"] = 50;
    return cfg;
}

fs::path temp_dir(const std::string& stem) {
    const fs::path p = fs::temp_directory_path() / ("kreinlat_test_" + stem);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(Scenario, FrozenFilesParse) {
    const auto s1 = load_scenario(std::string(KREINLAT_SCENARIO_DIR) + "/DS1.json");
    const auto s2 = load_scenario(std::string(KREINLAT_SCENARIO_DIR) + "/DS2.json");
    EXPECT_EQ(s1.name, "DS1");
    EXPECT_EQ(s1.grid.n, 32);
    EXPECT_NE(s1.hash, s2.hash);
}

TEST(Scenario, ConfigErrors) {
    json c = ds_json("DS1");
    c["bogus"] = 1;
    EXPECT_THROW(parse_scenario(c), ConfigError);
    c = ds_json("DS1");
    c.erase("grid");
    EXPECT_THROW(parse_scenario(c), ConfigError);
    c = ds_json("DS1");
    c["potential"]["V"] = {1.0, 2.0};
    EXPECT_THROW(parse_scenario(c), ConfigError);
    c = ds_json("DS1");
    c["analysis"]["window"] = "triangle";
    EXPECT_THROW(parse_scenario(c), ConfigError);
    EXPECT_THROW(load_scenario(std::string(KREINLAT_SCENARIO_DIR) + "/malformed.json"), ConfigError);
    EXPECT_THROW(load_scenario("/nonexistent/file.json"), ConfigError);
}

TEST(Scenario, HashIsStableAndSensitive) {
    const json c = ds_json("DS1");
    EXPECT_EQ(parse_scenario(c).hash, parse_scenario(c).hash);
    json e = with_parameter(c, "potential.V.V0", 0.51);
    EXPECT_NE(parse_scenario(e).hash, parse_scenario(c).hash);
}

TEST(Scenario, WithParameter) {
    const json c = ds_json("DS1");
    EXPECT_DOUBLE_EQ(with_parameter(c, "potential.V.w", 2.0)["potential"]["V"]["w"].get<double>(), 2.0);
    EXPECT_EQ(with_parameter(c, "grid.n", 48)["grid"]["n"].get<int>(), 48);
    EXPECT_THROW(with_parameter(c, "grid.n", 48.5), ConfigError);
    EXPECT_THROW(with_parameter(c, "grid.missing", 1.0), ConfigError);
    EXPECT_THROW(with_parameter(c, "grid", 1.0), ConfigError);
}

TEST(Scenario, EnvironmentOverridesTolerance) {
    setenv("KREINLAT_LEAK_TOL", "0.25", 1);
    const auto s = parse_scenario(ds_json("DS1"));
    unsetenv("KREINLAT_LEAK_TOL");
    EXPECT_DOUBLE_EQ(s.tol.leak_tol, 0.25);
}

TEST(Scenario, KernelDumpRoundTrip) {
    KernelSeries s;
    s.kind = KernelKind::S_plus;
    s.model_ref = "abc";
    s.times = {-1.0, 0.0, 1.0};
    for (int k = 0; k < 3; ++k) {
        CMatrix f(2, 2);
        f << cplx(k, 1), cplx(-0.5, k), cplx(1e-300, -2), cplx(3.25, 0);
        s.frames.push_back(f);
    }
    const fs::path p = temp_dir("dump") / "k.bin";
    write_kernel_dump(p, s, {{"note", "x"}});
    const auto [r, h] = read_kernel_dump(p);
    EXPECT_EQ(r.kind, KernelKind::S_plus);
    EXPECT_EQ(r.times, s.times);
    EXPECT_EQ(h["schema_version"], schema_version);
    EXPECT_EQ(h["note"], "x");
    ASSERT_EQ(r.frames.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(r.frames[k], s.frames[k]);
    std::ofstream(p, std::ios::binary) << "garbage!";
    EXPECT_THROW(read_kernel_dump(p), InvalidArgument);
}

TEST(Scenario, RunIsDeterministicAndMeetsExpectations) {
    const auto sc = parse_scenario(light(ds_json("DS1")));
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    EXPECT_EQ(a.report.dump(), b.report.dump());
    EXPECT_EQ(a.report["schema_version"], schema_version);
    EXPECT_TRUE(a.expectations_pass) << a.report.dump(2);
    RunOptions other;
    other.seed = 7;
    EXPECT_TRUE(run_scenario(sc, other).expectations_pass);
}

TEST(Scenario, FailedExpectationIsReported) {
    json c = light(ds_json("DS1"));
    c["expect"]["criticality"] = "overcritical_complex";
    const auto r = run_scenario(parse_scenario(c));
    EXPECT_FALSE(r.expectations_pass);
    EXPECT_GE(r.failed, 1);
}

TEST(Scenario, OutputDirectoryAndDumps) {
    const fs::path dir = temp_dir("out");
    RunOptions opt;
    opt.out_dir = dir;
    opt.dump_kernels = true;
    json c = light(ds_json("DS1"));
    c["grid"]["n"] = 16;
    run_scenario(parse_scenario(c), opt);
    int dumps = 0;
    bool profile = false;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".klks") ++dumps;
        if (e.path().extension() == ".dat") profile = true;
    }
    EXPECT_EQ(dumps, 4);
    EXPECT_TRUE(profile);
}

TEST(Sweep, EmptyValuesGiveHeaderOnly) {
    const auto rows = sweep_scenario(ds_json("DS1"), KREINLAT_SCENARIO_DIR, "potential.V.V0", {});
    EXPECT_TRUE(rows.empty());
    const std::string csv = sweep_csv("potential.V.V0", rows);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST(Sweep, OnsetIsMonotone) {
    const std::vector<double> vals{0.5, 1.0, 1.4, 1.6, 2.0, 2.5, 3.0};
    const auto rows = sweep_scenario(ds_json("DS1"), KREINLAT_SCENARIO_DIR, "potential.V.V0", vals);
    ASSERT_EQ(rows.size(), vals.size());
    auto rank = [](const std::string& s) {
        return s == "subcritical" ? 0 : s == "overcritical_regular" ? 1 : s == "overcritical_complex" ? 2 : -1;
    };
    int prev = 0;
    for (const auto& r : rows) {
        ASSERT_TRUE(r.error.empty()) << r.error;
        const int k = rank(r.criticality);
        EXPECT_GE(k, prev) << "at V0 = " << r.value;
        prev = k;
    }
    EXPECT_EQ(rows.front().criticality, "subcritical");
    EXPECT_EQ(rows.back().criticality, "overcritical_complex");
}

TEST(Sweep, VerdictStableUnderRefinement) {
    for (double v0 : {0.5, 3.0}) {
        const json base = with_parameter(ds_json("DS1"), "potential.V.V0", v0);
        const auto rows = sweep_scenario(base, KREINLAT_SCENARIO_DIR, "grid.n", {32, 64});
        ASSERT_EQ(rows.size(), 2u);
        EXPECT_EQ(rows[0].criticality, rows[1].criticality) << "V0 = " << v0;
    }
}
