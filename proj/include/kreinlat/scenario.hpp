#pragma once

// Scenario configs, the end-to-end pipeline, JSON reports, kernel dumps and sweeps.
// Needs nlohmann json.hpp on the include path.

#include "states.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kreinlat {

using json = nlohmann::json;

inline constexpr const char* schema_version = "kreinlat-report/1";

// ---------------------------------------------------------------- small helpers

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

// Finite doubles as numbers, infinities as the strings "inf" / "-inf".
inline json number_or_inf(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline double parse_bound(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return IntervalUnion::inf;
        if (s == "-inf") return -IntervalUnion::inf;
    }
    if (j.is_null()) throw ConfigError(where + ": use \"inf\" or \"-inf\" for unbounded ends");
    throw ConfigError(where + ": interval bound must be a number, \"inf\" or \"-inf\"");
}

inline IntervalUnion parse_intervals(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of [lo, hi] pairs");
    std::vector<std::pair<double, double>> iv;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw ConfigError(where + " entries must be [lo, hi]");
        const double lo = parse_bound(e[0], where), hi = parse_bound(e[1], where);
        if (!(lo < hi)) throw ConfigError(where + ": need lo < hi");
        iv.emplace_back(lo, hi);
    }
    return IntervalUnion(iv);
}

inline json intervals_json(const IntervalUnion& u) {
    json a = json::array();
    for (const auto& [lo, hi] : u.intervals()) a.push_back({number_or_inf(lo), number_or_inf(hi)});
    return a;
}

inline json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json vector_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------- config

struct AnalysisSpec {
    Window window = Window::hann;
    double leak_tol = 1e-4;
    int positivity_draws = 3;
    double positivity_tau = 0.3;
    int state_pairs = 500;
    std::optional<IntervalUnion> expected_support;  // S_plus; default from the verdict
    std::optional<double> gap_threshold;            // ground-state check; default gap_alpha
};

struct Scenario {
    std::string name;
    enum class Model { kg, dirac } model = Model::kg;
    Grid grid;
    PotentialSpec potential;
    std::optional<IntervalUnion> J;  // absent: use the maximal-state search
    double t_max = 40.0;
    int n_steps = 1024;
    QuadratureSpec quadrature;
    Tolerances tol;
    AnalysisSpec analysis;
    json expect = json::object();
    json source;  // the parsed config as given
    std::filesystem::path base_dir;
    std::string hash;
};

namespace detail {

inline double req_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
    if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return obj.at(key).get<double>();
}

inline double opt_number(const json& obj, const char* key, double dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return obj.at(key).get<double>();
}

inline int as_int(double x, const std::string& where) {
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(where + " must be an integer");
    return static_cast<int>(x);
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError("unknown key " + where + "." + it.key());
    }
}

inline RVector read_csv_column(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open potential file " + path.string());
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream ls(line);
        double x;
        while (ls >> x) vals.push_back(x);
        if (!ls.eof()) throw ConfigError("non-numeric entry in " + path.string());
    }
    return Eigen::Map<RVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// number | array | {"builtin": "gaussian_well", "V0", "w"} | {"csv": "file"}
inline RVector parse_field(const json& j, const Grid& g, const std::filesystem::path& base, const std::string& where) {
    RVector v;
    if (j.is_number()) {
        v = RVector::Constant(g.n, j.get<double>());
    } else if (j.is_array()) {
        v.resize(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) throw ConfigError(where + " array must be numeric");
            v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
        }
    } else if (j.is_object() && j.contains("builtin")) {
        const auto kind = j.at("builtin").get<std::string>();
        if (kind != "gaussian_well") throw ConfigError(where + ": unknown builtin " + kind);
        reject_unknown(j, {"builtin", "V0", "w"}, where);
        const double w = req_number(j, "w", where);
        if (!(w > 0.0)) throw ConfigError(where + ".w must be positive");
        v = gaussian_well(g, req_number(j, "V0", where), w);
    } else if (j.is_object() && j.contains("csv")) {
        reject_unknown(j, {"csv"}, where);
        v = read_csv_column(base / j.at("csv").get<std::string>());
    } else {
        throw ConfigError(where + " must be a number, an array, a builtin or a csv reference");
    }
    if (v.size() != g.n)
        throw ConfigError(where + " has " + std::to_string(v.size()) + " samples, grid has " + std::to_string(g.n));
    if (!v.allFinite()) throw ConfigError(where + " contains non-finite values");
    return v;
}

inline Window parse_window(const std::string& s) {
    if (s == "hann") return Window::hann;
    if (s == "rectangular") return Window::rectangular;
    throw ConfigError("window must be hann or rectangular");
}

inline ResolventMode parse_mode(const std::string& s) {
    if (s == "automatic") return ResolventMode::automatic;
    if (s == "schur") return ResolventMode::schur;
    if (s == "eigenbasis") return ResolventMode::eigenbasis;
    throw ConfigError("quadrature.mode must be automatic, schur or eigenbasis");
}

inline std::string hash_scenario(const Scenario& s) {
    // canonical dump (keys sorted) plus the resolved samples, so csv contents count too
    const std::string canon = s.source.dump();
    std::uint64_t h = fnv1a(canon.data(), canon.size());
    for (const RVector* v : {&s.potential.V, &s.potential.A, &s.potential.m, &s.potential.A_link})
        h = fnv1a(v->data(), sizeof(double) * static_cast<std::size_t>(v->size()), h);
    return hex64(h);
}

}  // namespace detail

inline Scenario parse_scenario(const json& cfg, const std::filesystem::path& base_dir = ".") {
    using namespace detail;
    if (!cfg.is_object()) throw ConfigError("scenario config must be a JSON object");
    reject_unknown(cfg, {"name", "schema_version", "model", "grid", "potential", "J", "time", "quadrature",
                         "tolerances", "analysis", "expect", "description"},
                   "config");
    Scenario s;
    s.source = cfg;
    s.base_dir = base_dir;
    s.name = cfg.value("name", std::string("scenario"));
    if (!cfg.contains("model") || !cfg.at("model").is_string()) throw ConfigError("config.model is required");
    const auto model = cfg.at("model").get<std::string>();
    if (model == "kg")
        s.model = Scenario::Model::kg;
    else if (model == "dirac")
        s.model = Scenario::Model::dirac;
    else
        throw ConfigError("config.model must be \"kg\" or \"dirac\"");

    if (!cfg.contains("grid") || !cfg.at("grid").is_object()) throw ConfigError("config.grid is required");
    const json& gj = cfg.at("grid");
    reject_unknown(gj, {"n", "length", "boundary"}, "grid");
    const int n = as_int(req_number(gj, "n", "grid"), "grid.n");
    const double length = req_number(gj, "length", "grid");
    const auto bnd = gj.value("boundary", std::string("periodic"));
    if (bnd != "periodic" && bnd != "dirichlet") throw ConfigError("grid.boundary must be periodic or dirichlet");
    try {
        s.grid = build_grid(n, length, bnd == "periodic" ? Boundary::periodic : Boundary::dirichlet);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }

    if (!cfg.contains("potential") || !cfg.at("potential").is_object()) throw ConfigError("config.potential is required");
    const json& pj = cfg.at("potential");
    reject_unknown(pj, {"V", "A", "m", "A_link"}, "potential");
    s.potential.V = pj.contains("V") ? parse_field(pj.at("V"), s.grid, base_dir, "potential.V") : RVector::Zero(n);
    s.potential.A = pj.contains("A") ? parse_field(pj.at("A"), s.grid, base_dir, "potential.A") : RVector::Zero(n);
    if (!pj.contains("m")) throw ConfigError("potential.m is required");
    s.potential.m = parse_field(pj.at("m"), s.grid, base_dir, "potential.m");
    if (pj.contains("A_link")) s.potential.A_link = parse_field(pj.at("A_link"), s.grid, base_dir, "potential.A_link");
    if ((s.potential.m.array() < 0.0).any()) throw ConfigError("potential.m must be non-negative");

    if (cfg.contains("J") && !cfg.at("J").is_null()) s.J = parse_intervals(cfg.at("J"), "J");

    if (cfg.contains("time")) {
        const json& tj = cfg.at("time");
        reject_unknown(tj, {"t_max", "n_steps"}, "time");
        s.t_max = opt_number(tj, "t_max", s.t_max, "time");
        s.n_steps = as_int(opt_number(tj, "n_steps", s.n_steps, "time"), "time.n_steps");
        if (!(s.t_max > 0.0) || s.n_steps < 16) throw ConfigError("time needs t_max > 0 and n_steps >= 16");
    }

    if (cfg.contains("quadrature")) {
        const json& qj = cfg.at("quadrature");
        reject_unknown(qj, {"re_points", "im_points", "eps_band", "mode"}, "quadrature");
        s.quadrature.re_points = as_int(opt_number(qj, "re_points", 64, "quadrature"), "quadrature.re_points");
        s.quadrature.im_points = as_int(opt_number(qj, "im_points", 64, "quadrature"), "quadrature.im_points");
        s.quadrature.eps_band = opt_number(qj, "eps_band", -1.0, "quadrature");
        if (qj.contains("mode")) s.quadrature.mode = parse_mode(qj.at("mode").get<std::string>());
        try {
            s.quadrature.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("quadrature: ") + e.what());
        }
    }

    // config values first, then the environment on top
    if (cfg.contains("tolerances")) {
        const json& tj = cfg.at("tolerances");
        reject_unknown(tj, {"tol_mat", "tol_eig", "tol_inv", "gap_min", "im_threshold", "inertia", "eps_resolvent",
                            "leak_tol", "pos_tol"},
                       "tolerances");
        auto set = [&](const char* key, double& field) {
            field = opt_number(tj, key, field, "tolerances");
            if (!(field > 0.0)) throw ConfigError(std::string("tolerances.") + key + " must be positive");
        };
        set("tol_mat", s.tol.tol_mat);
        set("tol_eig", s.tol.tol_eig);
        set("tol_inv", s.tol.tol_inv);
        set("gap_min", s.tol.gap_min_rel);
        set("im_threshold", s.tol.im_threshold_rel);
        set("inertia", s.tol.inertia_rel);
        set("eps_resolvent", s.tol.eps_resolvent);
        set("leak_tol", s.tol.leak_tol);
        set("pos_tol", s.tol.pos_tol);
    }
    s.tol = Tolerances::from_env(s.tol);
    s.analysis.leak_tol = s.tol.leak_tol;

    if (cfg.contains("analysis")) {
        const json& aj = cfg.at("analysis");
        reject_unknown(aj, {"window", "positivity_draws", "positivity_tau", "state_pairs", "expected_support",
                            "gap_threshold"},
                       "analysis");
        if (aj.contains("window")) s.analysis.window = parse_window(aj.at("window").get<std::string>());
        s.analysis.positivity_draws =
            as_int(opt_number(aj, "positivity_draws", s.analysis.positivity_draws, "analysis"), "positivity_draws");
        s.analysis.positivity_tau = opt_number(aj, "positivity_tau", s.analysis.positivity_tau, "analysis");
        s.analysis.state_pairs = as_int(opt_number(aj, "state_pairs", s.analysis.state_pairs, "analysis"), "state_pairs");
        if (aj.contains("expected_support"))
            s.analysis.expected_support = parse_intervals(aj.at("expected_support"), "analysis.expected_support");
        if (aj.contains("gap_threshold")) s.analysis.gap_threshold = req_number(aj, "gap_threshold", "analysis");
    }

    if (cfg.contains("expect")) {
        if (!cfg.at("expect").is_object()) throw ConfigError("config.expect must be an object");
        s.expect = cfg.at("expect");
        reject_unknown(s.expect, {"criticality", "state_case", "ground", "dominating", "positivity", "support_pass",
                                  "critical_points", "complex_pairs", "degeneracy_dim_min", "decomposition_max"},
                       "expect");
    }
    if (s.model == Scenario::Model::dirac && s.expect.contains("criticality"))
        throw ConfigError("expect.criticality only applies to kg scenarios");
    s.hash = hash_scenario(s);
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return parse_scenario(cfg, path.parent_path());
}

// Dotted path into the config ("potential.V.V0"); the leaf must already exist and be a number.
inline json with_parameter(json cfg, const std::string& path, double value) {
    json* node = &cfg;
    std::istringstream ps(path);
    std::string key;
    while (std::getline(ps, key, '.')) {
        if (!node->is_object() || !node->contains(key)) throw ConfigError("sweep parameter " + path + " not found");
        node = &(*node)[key];
    }
    if (!node->is_number()) throw ConfigError("sweep parameter " + path + " is not a scalar number");
    if (node->is_number_integer()) {
        if (value != std::floor(value)) throw ConfigError("sweep parameter " + path + " needs integer values");
        *node = static_cast<std::int64_t>(value);
    } else {
        *node = value;
    }
    return cfg;
}

// ---------------------------------------------------------------- kernel dumps

// "KLKS0001", u64 LE header length, header JSON, then one row-major LE complex<double> frame per time.
inline constexpr char kernel_magic[8] = {'K', 'L', 'K', 'S', '0', '0', '0', '1'};

namespace detail {

inline void put_le_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_le_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw InvalidArgument("truncated kernel dump");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline void put_le_double(std::ostream& os, double x) { put_le_u64(os, std::bit_cast<std::uint64_t>(x)); }
inline double get_le_double(std::istream& is) { return std::bit_cast<double>(get_le_u64(is)); }

}  // namespace detail

inline void write_kernel_dump(const std::filesystem::path& path, const KernelSeries& s, const json& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot write " + path.string());
    json h = extra.is_object() ? extra : json::object();
    h["schema_version"] = schema_version;
    h["kind"] = to_string(s.kind);
    h["dim"] = s.dim();
    h["times"] = s.times;
    h["model_ref"] = s.model_ref;
    const std::string hs = h.dump();
    os.write(kernel_magic, 8);
    detail::put_le_u64(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& f : s.frames)
        for (Eigen::Index r = 0; r < f.rows(); ++r)
            for (Eigen::Index c = 0; c < f.cols(); ++c) {
                detail::put_le_double(os, f(r, c).real());
                detail::put_le_double(os, f(r, c).imag());
            }
}

inline std::pair<KernelSeries, json> read_kernel_dump(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kernel_magic)) throw InvalidArgument("not a kernel dump");
    const std::uint64_t len = detail::get_le_u64(is);
    if (len > (1ULL << 32)) throw InvalidArgument("implausible header length");
    std::string hs(len, '\0');
    if (!is.read(hs.data(), static_cast<std::streamsize>(len))) throw InvalidArgument("truncated kernel dump");
    const json h = json::parse(hs);
    KernelSeries s;
    s.times = h.at("times").get<std::vector<double>>();
    s.model_ref = h.value("model_ref", std::string());
    const std::string kind = h.at("kind").get<std::string>();
    for (KernelKind k : {KernelKind::S, KernelKind::S_plus, KernelKind::S_minus, KernelKind::S_zero})
        if (kind == to_string(k)) s.kind = k;
    const auto dim = h.at("dim").get<Eigen::Index>();
    for (std::size_t t = 0; t < s.times.size(); ++t) {
        CMatrix f(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) {
                const double re = detail::get_le_double(is);
                f(r, c) = cplx(re, detail::get_le_double(is));
            }
        s.frames.push_back(std::move(f));
    }
    return {std::move(s), h};
}

// ---------------------------------------------------------------- report pieces

inline json spectrum_json(const SpectrumReport& rep) {
    json ev = json::array();
    for (const auto& e : rep.eigenvalues)
        ev.push_back({{"re", e.value.real()},
                      {"im", e.value.imag()},
                      {"mult", e.multiplicity},
                      {"sign_type", to_string(e.sign_type)},
                      {"critical", e.is_critical},
                      {"defective", e.jordan_defective}});
    json pairs = json::array();
    for (const auto& [a, b] : rep.complex_pairs) pairs.push_back({a, b});
    return {{"eigenvalues", ev}, {"complex_pairs", pairs}};
}

inline json support_json(const SpectralSupportReport& r, const IntervalUnion& expected) {
    return {{"expected", intervals_json(expected)}, {"leakage", r.leakage},   {"resolution", r.resolution},
            {"w_res", r.w_res},                     {"window", to_string(r.window)}, {"alpha_hat", r.alpha_hat},
            {"beta_hat", r.beta_hat},               {"pass", r.pass}};
}

inline json state_json(const StateData& s) {
    json j = {{"J", intervals_json(s.J)},
              {"dominating", s.dominating},
              {"dominating_predicted", s.dominating_predicted},
              {"ground", s.ground},
              {"degeneracy_dim", s.degeneracy_dim},
              {"mu_R_min_eig", s.mu_R_min_eig},
              {"cs_worst_ratio", std::isfinite(s.cs_worst_ratio) ? json(s.cs_worst_ratio) : json("inf")}};
    if (s.violating_pair) j["violating_pair"] = {vector_json(s.violating_pair->first), vector_json(s.violating_pair->second)};
    return j;
}

// gnuplot-ready power profile plus a script that plots every .dat in the directory
inline void write_power_profile(const std::filesystem::path& dir, const std::string& stem,
                                const SpectralSupportReport& r) {
    std::ofstream os(dir / (stem + ".dat"));
    os << "# frequency power (Frobenius mass per bin)\n";
    os.precision(12);
    for (std::size_t i = 0; i < r.freq_grid.size(); ++i) os << r.freq_grid[i] << ' ' << r.power_profile[i] << '\n';
    std::ofstream gp(dir / (stem + ".gp"));
    gp << "set logscale y\nset xlabel 'frequency'\nset ylabel 'power'\n"
       << "plot '" << stem << ".dat' using 1:2 with lines title '" << stem << "'\n";
}

// ---------------------------------------------------------------- pipeline

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    std::uint64_t seed = 20240601;
    bool dump_kernels = false;
    bool write_plots = true;
};

struct RunResult {
    json report;
    bool expectations_pass = true;
    int failed = 0;
};

namespace detail {

inline void check_expectations(const Scenario& sc, RunResult& out) {
    json& rep = out.report;
    json checks = json::array();
    auto record = [&](const std::string& key, const json& expected, const json& actual, bool pass) {
        checks.push_back({{"key", key}, {"expected", expected}, {"actual", actual}, {"pass", pass}});
        if (!pass) ++out.failed;
    };
    auto lookup = [&](const char* path) -> json {
        const json::json_pointer p(path);
        return rep.contains(p) ? rep.at(p) : json();
    };
    for (auto it = sc.expect.begin(); it != sc.expect.end(); ++it) {
        const std::string& k = it.key();
        const json& e = it.value();
        if (k == "criticality") {
            record(k, e, lookup("/criticality/kind"), lookup("/criticality/kind") == e);
        } else if (k == "state_case") {
            record(k, e, lookup("/maximal/case"), lookup("/maximal/case") == e);
        } else if (k == "ground") {
            const json a = lookup("/ground_state/ground");
            record(k, e, a, a.is_null() ? e == false : a == e);
        } else if (k == "dominating") {
            record(k, e, lookup("/state/dominating"), lookup("/state/dominating") == e);
        } else if (k == "positivity") {
            const json a = lookup("/positivity/operator_positive");
            record(k, e, a, a == e);
        } else if (k == "support_pass") {
            record(k, e, lookup("/support/S_plus/pass"), lookup("/support/S_plus/pass") == e);
        } else if (k == "critical_points") {
            const json a = lookup("/criticality/critical_points");
            record(k, e, a.is_array() ? json(a.size()) : a, a.is_array() && json(a.size()) == e);
        } else if (k == "complex_pairs") {
            record(k, e, lookup("/criticality/complex_pairs"), lookup("/criticality/complex_pairs") == e);
        } else if (k == "degeneracy_dim_min") {
            const json a = lookup("/state/degeneracy_dim");
            record(k, e, a, a.is_number() && a.get<int>() >= e.get<int>());
        } else if (k == "decomposition_max") {
            const json a = lookup("/kernels/decomposition_residual");
            record(k, e, a, a.is_number() && a.get<double>() <= e.get<double>());
        }
    }
    rep["expectations"] = checks;
    out.expectations_pass = out.failed == 0;
}

// lower edge of the kept real modes, or nullopt when nothing is kept
inline std::optional<double> kept_edge(const SpectralDecomposition& d, const IntervalUnion& J) {
    std::optional<double> e;
    for (const auto& b : d.blocks())
        if (block_in(b, J)) e = e ? std::min(*e, b.center.real()) : b.center.real();
    return e;
}

}  // namespace detail

// build -> classify -> kernels -> support check -> positivity -> maximal state -> report
inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
    RunResult out;
    json& rep = out.report;
    rep["schema_version"] = schema_version;
    rep["scenario"] = sc.name;
    rep["hash"] = sc.hash;
    rep["model"] = sc.model == Scenario::Model::kg ? "kg" : "dirac";
    rep["seed"] = opt.seed;
    rep["grid"] = {{"n", sc.grid.n},
                   {"length", sc.grid.length},
                   {"spacing", sc.grid.spacing},
                   {"boundary", sc.grid.boundary == Boundary::periodic ? "periodic" : "dirichlet"}};
    std::mt19937_64 rng(opt.seed);

    Dynamics dyn;
    IntervalUnion J = IntervalUnion::at_least(0.0);
    std::optional<double> gap;
    std::optional<KGModel> kg;
    std::optional<SpectrumReport> spec;
    if (sc.model == Scenario::Model::kg) {
        kg = build_kg(sc.grid, sc.potential, sc.tol);
        spec = classify_spectrum(kg->b.m, kg->K, SignReference::frequency, sc.tol);
        const CriticalityVerdict v = classify_criticality(*kg, *spec, sc.tol);
        rep["spectrum"] = spectrum_json(*spec);
        json crit = {{"kind", to_string(v.kind)},
                     {"energy_form_min", v.energy_form_min},
                     {"critical_points", v.critical_points},
                     {"complex_pairs", v.complex_pairs},
                     {"min_abs_eigenvalue", v.min_abs_eigenvalue},
                     {"c_norm", kg->c_norm},
                     {"c_threshold_distance", kg->c_threshold_distance},
                     {"mu", kg->eps_pair.mu}};
        if (v.gap_alpha) {
            crit["gap_alpha"] = *v.gap_alpha;
            crit["split"] = v.split;
            gap = v.gap_alpha;
        }
        rep["criticality"] = crit;
        const MaximalSearchResult ms = maximal_state_search(*spec);
        rep["maximal"] = {{"J_max", ms.J_max ? intervals_json(*ms.J_max) : json()},
                          {"case", to_string(ms.state_case)},
                          {"note", ms.note}};
        J = sc.J ? *sc.J : *ms.J_max;
        dyn = make_dynamics(*kg, spec->decomposition, sc.tol);
    } else {
        const DiracModel dm = build_dirac(sc.grid, sc.potential);
        dyn = make_dynamics(dm, sc.tol);
        J = sc.J ? *sc.J : IntervalUnion::at_least(0.0);
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& z : dyn.modes->eigenvalues()) lo = std::min(lo, std::abs(z.real()));
        rep["spectrum"] = {{"min_abs_eigenvalue", lo}, {"spectral_radius", dyn.modes->spectral_radius()}};
    }
    check_admissible(*dyn.modes, J);
    rep["J"] = intervals_json(J);

    // kernels and their frequency support
    const auto times = symmetric_time_grid(sc.t_max, sc.n_steps);
    KernelSet ks = two_point_kernels(dyn, J, times);
    for (KernelSeries* s : {&ks.S, &ks.S_plus, &ks.S_minus, &ks.S_zero}) s->model_ref = sc.hash;
    rep["kernels"] = {{"t_max", sc.t_max},
                      {"n_steps", sc.n_steps},
                      {"dt", ks.S.dt()},
                      {"decomposition_residual", decomposition_residual(ks)},
                      {"fft_linearity_residual", fft_linearity_residual(ks, sc.analysis.window)}};

    IntervalUnion expected = IntervalUnion::at_least(0.0);
    std::string edge_source = "J";
    if (sc.analysis.expected_support) {
        expected = *sc.analysis.expected_support;
        edge_source = "config";
    } else if (const auto edge = detail::kept_edge(*dyn.modes, J)) {
        // the claimed gap if every kept mode respects it, otherwise the true edge
        if (gap && *gap <= *edge && J.intersect(IntervalUnion::at_least(0.0)) == J) {
            expected = IntervalUnion::at_least(*gap);
            edge_source = "gap_alpha";
        } else {
            expected = IntervalUnion::at_least(*edge);
            edge_source = "kept_spectrum";
        }
    }
    json support;
    try {
        const auto r = fft_support_check(ks.S_plus, expected, sc.analysis.window, sc.analysis.leak_tol);
        support["S_plus"] = support_json(r, expected);
        support["S_plus"]["edge_source"] = edge_source;
        if (opt.out_dir && opt.write_plots) write_power_profile(*opt.out_dir, sc.name + "_S_plus", r);
    } catch (const WindowTooShort& e) {
        support["S_plus"] = {{"expected", intervals_json(expected)}, {"pass", false}, {"error", e.what()}};
    }
    rep["support"] = support;

    // heuristic decay scan: S_plus and S_zero at t = 0, diagonal entry 0
    {
        const std::vector<DecayPoint> pts = {{0.0, 0, 0}};
        json scan = json::object();
        for (const KernelSeries* s : {&ks.S_plus, &ks.S_zero}) {
            if (s->dim() == 0) continue;
            const auto r = decay_scan(*s, pts);
            json dirs = json::array();
            for (const auto& d : r.results)
                dirs.push_back({{"direction", d.direction}, {"order", d.order}, {"regular", d.regular}});
            scan[to_string(s->kind)] = dirs;
        }
        scan["note"] = "heuristic; the wave front set is not computed";
        rep["decay_scan"] = scan;
    }

    const PositivityReport pos =
        positivity_check(dyn, J, rng, sc.analysis.positivity_draws, sc.analysis.positivity_tau);
    rep["positivity"] = {{"min_eig", pos.min_eig},
                         {"test_min_rel", pos.test_min_rel},
                         {"operator_positive", pos.operator_positive},
                         {"test_positive", pos.test_positive},
                         {"agree", pos.agree}};

    if (kg) {
        StateData st = build_state(*kg, *spec, J, rng, sc.analysis.state_pairs, sc.tol);
        if (!spec->has_complex() && spec->critical_points().empty()) {
            const double thr = sc.analysis.gap_threshold ? *sc.analysis.gap_threshold : gap.value_or(0.0);
            if (thr > 0.0) {
                const auto g = ground_state_check(*kg, *spec, thr, sc.tol);
                st.ground = g.ground && J == IntervalUnion::at_least(0.0);
                rep["ground_state"] = {{"ground", st.ground},
                                       {"min_eig", g.min_eig},
                                       {"threshold", g.threshold},
                                       {"one_particle_definite", g.one_particle_definite}};
            }
        } else {
            rep["ground_state"] = {{"ground", false}, {"reason", "critical points or complex spectrum present"}};
        }
        rep["state"] = state_json(st);
    }

    if (opt.out_dir && opt.dump_kernels) {
        const json extra = {{"grid", rep["grid"]}, {"model_hash", sc.hash}};
        for (const KernelSeries* s : {&ks.S, &ks.S_plus, &ks.S_minus, &ks.S_zero})
            write_kernel_dump(*opt.out_dir / (sc.name + "_" + to_string(s->kind) + ".klks"), *s, extra);
    }
    detail::check_expectations(sc, out);
    rep["pass"] = out.expectations_pass;
    return out;
}

// ---------------------------------------------------------------- sweeps

struct SweepRow {
    double value = 0.0;
    std::string criticality;
    std::optional<double> gap_alpha;
    int critical_points = 0;
    int complex_pairs = 0;
    double energy_form_min = 0.0;
    std::string state_case;
    std::string error;
};

// Classification only (no kernels); one row per value.
inline std::vector<SweepRow> sweep_scenario(const json& base, const std::filesystem::path& base_dir,
                                            const std::string& param, const std::vector<double>& values) {
    std::vector<SweepRow> rows;
    for (double x : values) {
        const Scenario sc = parse_scenario(with_parameter(base, param, x), base_dir);
        SweepRow row;
        row.value = x;
        if (sc.model != Scenario::Model::kg) throw ConfigError("sweeps classify kg scenarios only");
        try {
            const KGModel m = build_kg(sc.grid, sc.potential, sc.tol);
            const SpectrumReport rep = classify_spectrum(m.b.m, m.K, SignReference::frequency, sc.tol);
            const CriticalityVerdict v = classify_criticality(m, rep, sc.tol);
            row.criticality = to_string(v.kind);
            row.gap_alpha = v.gap_alpha;
            row.critical_points = static_cast<int>(v.critical_points.size());
            row.complex_pairs = v.complex_pairs;
            row.energy_form_min = v.energy_form_min;
            row.state_case = to_string(maximal_state_search(rep).state_case);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os.precision(10);
    os << param << ",criticality,gap_alpha,critical_points,complex_pairs,energy_form_min,state_case,error\n";
    for (const auto& r : rows) {
        os << r.value << ',' << r.criticality << ',';
        if (r.gap_alpha) os << *r.gap_alpha;
        os << ',' << r.critical_points << ',' << r.complex_pairs << ',' << r.energy_form_min << ',' << r.state_case
           << ',' << '"' << r.error << '"' << '\n';
    }
    return os.str();
}

inline json sweep_json(const std::string& param, const std::vector<SweepRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        json row = {{"value", r.value},
                    {"criticality", r.criticality},
                    {"critical_points", r.critical_points},
                    {"complex_pairs", r.complex_pairs},
                    {"energy_form_min", r.energy_form_min},
                    {"state_case", r.state_case}};
        row["gap_alpha"] = r.gap_alpha ? json(*r.gap_alpha) : json();
        if (!r.error.empty()) row["error"] = r.error;
        a.push_back(row);
    }
    return {{"schema_version", schema_version}, {"parameter", param}, {"rows", a}};
}

}  // namespace kreinlat
