// kreinlat: scenario runner.
//   kreinlat run <config> [--out DIR] [--seed N] [--dump-kernels]
//   kreinlat sweep <config> --param PATH --values a,b,c [--out DIR]
// Exit codes: 0 all expectations pass, 1 an expectation failed, 2 config error.

#include <kreinlat/kreinlat.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace kreinlat;

namespace {

enum Exit { ok = 0, expectation_failed = 1, config_error = 2 };

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        double x;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad sweep value '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError("bad sweep value '" + item + "'");
        out.push_back(x);
    }
    return out;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << text;
}

void print_summary(const json& r) {
    std::cout << "scenario " << r.value("scenario", "") << " [" << r.value("hash", "") << "]\n";
    if (r.contains("criticality")) std::cout << "  criticality: " << r["criticality"]["kind"].get<std::string>() << '\n';
    if (r.contains("maximal")) std::cout << "  state case:  " << r["maximal"]["case"].get<std::string>() << '\n';
    if (r.contains("support") && r["support"]["S_plus"].contains("leakage"))
        std::cout << "  S_plus leakage: " << r["support"]["S_plus"]["leakage"] << '\n';
    for (const auto& c : r["expectations"])
        std::cout << "  expect " << c["key"].get<std::string>() << ": " << (c["pass"].get<bool>() ? "PASS" : "FAIL")
                  << " (expected " << c["expected"].dump() << ", got " << c["actual"].dump() << ")\n";
}

int cmd_run(const std::string& config, const std::optional<fs::path>& out, std::uint64_t seed, bool dump) {
    const Scenario sc = load_scenario(config);
    RunOptions opt;
    opt.seed = seed;
    opt.dump_kernels = dump;
    if (out) {
        fs::create_directories(*out);
        opt.out_dir = *out;
    } else if (dump) {
        throw ConfigError("--dump-kernels needs --out");
    }
    const RunResult res = run_scenario(sc, opt);
    if (out) {
        write_text(*out / (sc.name + ".json"), res.report.dump(2) + "\n");
        print_summary(res.report);
    } else {
        std::cout << res.report.dump(2) << '\n';
    }
    return res.expectations_pass ? ok : expectation_failed;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values,
              const std::optional<fs::path>& out) {
    std::ifstream in(config);
    if (!in) throw ConfigError("cannot open config " + config);
    json base;
    try {
        base = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    parse_scenario(base, fs::path(config).parent_path());  // validate the base once
    const auto rows = sweep_scenario(base, fs::path(config).parent_path(), param, parse_values(values));
    const std::string csv = sweep_csv(param, rows);
    if (out) {
        fs::create_directories(*out);
        write_text(*out / "sweep.csv", csv);
        write_text(*out / "sweep.json", sweep_json(param, rows).dump(2) + "\n");
    }
    std::cout << csv;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Krein-space lattice field diagnostics"};
    app.require_subcommand(1);
    std::string out_dir;
    std::uint64_t seed = RunOptions{}.seed;
    bool dump = false;
    app.add_option("--out", out_dir, "output directory for reports");
    app.add_option("--seed", seed, "seed for randomized checks");
    app.add_flag("--dump-kernels", dump, "write binary kernel series (needs --out)");

    std::string config, param, values;
    auto* run = app.add_subcommand("run", "run the full pipeline on a scenario");
    run->add_option("config", config, "scenario JSON")->required();
    run->fallthrough();
    auto* sweep = app.add_subcommand("sweep", "classify a scenario over a parameter range");
    sweep->add_option("config", config, "scenario JSON")->required();
    sweep->add_option("--param", param, "dotted config path, e.g. potential.V.V0")->required();
    sweep->add_option("--values", values, "comma separated values")->required();
    sweep->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }
    const std::optional<fs::path> out = out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
    try {
        if (*run) return cmd_run(config, out, seed, dump);
        return cmd_sweep(config, param, values, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DimensionMismatch& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NotAdmissible& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return expectation_failed;
    }
}
