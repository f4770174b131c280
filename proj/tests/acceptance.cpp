// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
// Exit status is nonzero when any criterion fails.

#include <kreinlat/kreinlat.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

using namespace kreinlat;

#ifndef KREINLAT_SCENARIO_DIR
#define KREINLAT_SCENARIO_DIR "scenarios"
#endif

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

struct Frozen {
    Scenario sc;
    KGModel m;
    SpectrumReport rep;
    CriticalityVerdict verdict;
    MaximalSearchResult maximal;
    Dynamics dyn;
};

Frozen load(const char* name) {
    Frozen f;
    f.sc = load_scenario(std::string(KREINLAT_SCENARIO_DIR) + "/" + name + ".json");
    f.m = build_kg(f.sc.grid, f.sc.potential, f.sc.tol);
    f.rep = classify_spectrum(f.m.b.m, f.m.K, SignReference::frequency, f.sc.tol);
    f.verdict = classify_criticality(f.m, f.rep, f.sc.tol);
    f.maximal = maximal_state_search(f.rep);
    f.dyn = make_dynamics(f.m, f.rep.decomposition, f.sc.tol);
    return f;
}

const Frozen& ds(int which) {
    static const Frozen ds1 = load("DS1");
    static const Frozen ds2 = load("DS2");
    return which == 1 ? ds1 : ds2;
}

DiracModel free_dirac(int n, double length) {
    const Grid g = build_grid(n, length);
    return build_dirac(g, PotentialSpec::constant(g, 0.0, 0.0, 1.0));
}

// max over eigenvalues of a of the distance to the nearest unused eigenvalue of b
double spectrum_distance(const CMatrix& a, const CMatrix& b) {
    Eigen::ComplexEigenSolver<CMatrix> ea(a, false), eb(b, false);
    const auto& la = ea.eigenvalues();
    const auto& lb = eb.eigenvalues();
    std::vector<bool> used(lb.size(), false);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < la.size(); ++i) {
        Eigen::Index best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < lb.size(); ++j)
            if (!used[j] && std::abs(la(i) - lb(j)) < bd) {
                bd = std::abs(la(i) - lb(j));
                best = j;
            }
        used[best] = true;
        worst = std::max(worst, bd);
    }
    return worst;
}

// ---------------------------------------------------------------- criteria

Outcome c1_free_dirac_gap() {
    const DiracModel d = free_dirac(256, 32.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(d.h.m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().cwiseAbs().minCoeff();
    return {lo >= 1.0 - 1e-12, "min |lambda| = " + fmt("%.15f", lo)};
}

Outcome c2_krein_similarity() {
    double worst_adj = 0.0, worst_spec = 0.0, worst_sim = 0.0;
    for (int k : {1, 2}) {
        const Frozen& f = ds(k);
        const CMatrix& b = f.m.b.m;
        const double bn = op_norm(b);
        worst_adj = std::max(worst_adj, op_norm(b - krein_adjoint(b, f.m.K)) / bn);
        const CMatrix a = similarity_partner(f.m);
        const CMatrix t = similarity_T(f.m);
        worst_sim = std::max(worst_sim, op_norm(t * b * t.inverse() - a) / bn);
        worst_spec = std::max(worst_spec, spectrum_distance(a, b) / f.rep.decomposition->spectral_radius());
    }
    return {worst_adj <= 1e-10 && worst_spec <= 1e-8,
            "||b - b^dagger||/||b|| = " + fmt("%.2e", worst_adj) + ", spectral mismatch " + fmt("%.2e", worst_spec) +
                " (rel), ||T b T^-1 - a||/||b|| = " + fmt("%.2e", worst_sim)};
}

const SmoothFunction& c3_function() {
    static const SmoothFunction f = fn::gaussian(0.8, 0.6);
    return f;
}

Outcome c3_calculus_oracle() {
    const Frozen& f = ds(1);
    const CMatrix oracle = spectral_function(*f.rep.decomposition, c3_function());
    AlmostAnalyticExtension ext;
    ext.f = c3_function();
    std::vector<double> err;
    QuadratureSpec q = f.sc.quadrature;
    for (int level = 0; level < 4; ++level) {
        err.push_back(op_norm(davies_apply(f.m.b.m, ext, q, f.sc.tol).value - oracle));
        q.re_points *= 2;
        q.im_points *= 2;
    }
    bool ok = err[0] <= 1e-3;
    std::string d = "errors";
    for (double e : err) d += " " + fmt("%.2e", e);
    d += "; ratios";
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double r = err[i] / err[i - 1];
        ok = ok && r <= 0.5;
        d += " " + fmt("%.3f", r);
    }
    return {ok, d};
}

// Bump around x that stays 0.1 r clear of the rest; the extension height matches its width so the
// quadrature sees the same shape at every scale. Grid restricted to the support, uniform across the axis.
FunctionProbe bump_probe(double x, double r) {
    FunctionProbe p;
    const double hw = std::min(0.9 * r, 0.5);
    p.ext.f = fn::bump(x, hw);
    p.ext.N = 3;
    p.ext.delta = hw / bracket(x);
    p.quad.re_points = 640;
    p.quad.im_points = 640;
    p.quad.eps_band = 0.0;
    return p;
}

Outcome c4_projection_algebra() {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    double parts[4] = {0.0, 0.0, 0.0, 0.0};
    int absorb_tests = 0, annihilate_tests = 0;
    for (int k : {1, 2}) {
        const Frozen& f = ds(k);
        const auto& d = *f.rep.decomposition;
        for (int i = 0; i < 20; ++i) {
            const IntervalUnion j1 = random_admissible_interval(d, rng), j2 = random_admissible_interval(d, rng);
            // probes: one kept eigenvalue (absorption) and one excluded one (annihilation)
            std::optional<FunctionProbe> absorb, annihilate;
            for (const auto& b : d.blocks()) {
                if (!b.real) continue;
                const double x = b.center.real();
                const double r = j1.distance_to_boundary(x);
                if (j1.contains(x) && !absorb) absorb = bump_probe(x, r);
                if (!j1.contains(x) && !annihilate) annihilate = bump_probe(x, r);
            }
            const auto rep = projection_algebra_check(f.m.b.m, f.m.K, d, j1, j2, absorb, annihilate, f.sc.tol);
            worst = std::max(worst, rep.max_dev());
            parts[0] = std::max(parts[0], rep.adjoint_dev);
            parts[1] = std::max(parts[1], rep.product_dev);
            parts[2] = std::max(parts[2], rep.annihilation_dev);
            parts[3] = std::max(parts[3], rep.absorption_dev);
            absorb_tests += absorb ? 1 : 0;
            annihilate_tests += annihilate ? 1 : 0;
        }
    }
    return {worst <= 1e-8, "max deviation " + fmt("%.2e", worst) + " (adjoint " + fmt("%.1e", parts[0]) + ", product " +
                               fmt("%.1e", parts[1]) + ", annihilation " + fmt("%.1e", parts[2]) + ", absorption " +
                               fmt("%.1e", parts[3]) + ") over 40 pairs (" + std::to_string(absorb_tests) +
                               " absorption, " + std::to_string(annihilate_tests) + " annihilation probes)"};
}

const SmoothFunction& c5_window() {
    static const SmoothFunction f = fn::bump(0.0, 3.0);
    return f;
}

Outcome c5_group_calculus() {
    double worst = 0.0;
    std::string d;
    for (int k : {1, 2}) {
        const auto r = group_vs_calculus_check(ds(k).dyn, c5_window());
        const double rel = r.residual / std::max(1.0, r.lhs_norm);
        worst = std::max(worst, r.residual);
        d += std::string(k == 1 ? "DS1" : "; DS2") + " residual " + fmt("%.2e", r.residual) + " (rel " +
             fmt("%.1e", rel) + ", delta " + fmt("%.3g", r.delta_used) + ")";
    }
    return {worst <= 1e-4, d};
}

Outcome c6_kernel_decomposition() {
    double worst = 0.0;
    for (int k : {1, 2}) {
        const Frozen& f = ds(k);
        const KernelSet ks = two_point_kernels(f.dyn, *f.maximal.J_max, symmetric_time_grid(f.sc.t_max, f.sc.n_steps));
        worst = std::max(worst, decomposition_residual(ks));
    }
    return {worst <= 1e-10, "max_t ||S - S+ - S- - S0|| / ||S|| = " + fmt("%.2e", worst)};
}

Outcome c7_bisolution_order() {
    double min_order = std::numeric_limits<double>::infinity();
    std::string d;
    for (int k : {1, 2}) {
        const Frozen& f = ds(k);
        const IntervalUnion J = *f.maximal.J_max;
        const auto keep = [&](const SpectralBlock& b) { return block_in(b, J); };
        std::vector<double> r;
        for (double h : {4e-3, 2e-3, 1e-3}) r.push_back(bisolution_residual(f.dyn, keep, 1.7, h));
        const double o1 = std::log2(r[0] / r[1]), o2 = std::log2(r[1] / r[2]);
        min_order = std::min({min_order, o1, o2});
        d += std::string(k == 1 ? "DS1" : "; DS2") + " residuals " + fmt("%.2e", r[0]) + " " + fmt("%.2e", r[1]) + " " +
             fmt("%.2e", r[2]) + " orders " + fmt("%.3f", o1) + " " + fmt("%.3f", o2);
    }
    return {min_order >= 1.9, d};
}

Outcome c8_support() {
    // free Dirac against [m, inf)
    const DiracModel dm = free_dirac(64, 16.0);
    const Dynamics dd = make_dynamics(dm);
    const IntervalUnion half = IntervalUnion::at_least(0.0);
    const auto keep_d = [&](const SpectralBlock& b) { return block_in(b, half); };
    const auto sd = kernel_series(dd, symmetric_time_grid(20.0, 512), KernelKind::S_plus, keep_d);
    const double leak_d = fft_support_check(sd, IntervalUnion::at_least(1.0)).leakage;

    // DS1 against [0.5, inf), then window doubling at fixed dt
    const Frozen& f = ds(1);
    const auto keep = [&](const SpectralBlock& b) { return block_in(b, half); };
    const IntervalUnion expect = IntervalUnion::at_least(0.5);
    const auto s1 = kernel_series(f.dyn, symmetric_time_grid(f.sc.t_max, f.sc.n_steps), KernelKind::S_plus, keep);
    const double leak_1 = fft_support_check(s1, expect).leakage;
    const double dt = 0.15625;
    std::vector<double> leaks;
    for (double T : {40.0, 80.0, 160.0, 320.0}) {
        const int n = static_cast<int>(std::lround(2.0 * T / dt));
        leaks.push_back(fft_support_check(kernel_series(f.dyn, symmetric_time_grid(T, n), KernelKind::S_plus, keep),
                                          expect)
                            .leakage);
    }
    bool mono = true;
    for (std::size_t i = 1; i < leaks.size(); ++i) mono = mono && leaks[i] < leaks[i - 1];
    std::string d = "Dirac free " + fmt("%.2e", leak_d) + ", DS1 " + fmt("%.2e", leak_1) + ", doubling T=40..320:";
    for (double l : leaks) d += " " + fmt("%.2e", l);
    return {leak_d <= 1e-4 && leak_1 <= 1e-4 && mono, d};
}

Outcome c9_positivity() {
    std::mt19937_64 rng(9);
    int agree = 0, total = 0, positive = 0;
    for (int k : {1, 2}) {
        const Frozen& f = ds(k);
        for (int i = 0; i < 200; ++i) {
            const IntervalUnion J = random_admissible_interval(*f.rep.decomposition, rng);
            const auto r = positivity_check(f.dyn, J, rng);
            agree += r.agree ? 1 : 0;
            positive += r.operator_positive ? 1 : 0;
            ++total;
        }
    }
    // DS2 with the critical point kept
    const Frozen& f2 = ds(2);
    const auto r = positivity_check(f2.dyn, IntervalUnion::at_least(0.0), rng);
    return {agree == total && r.min_eig < -1e-6 && !r.test_positive,
            std::to_string(agree) + "/" + std::to_string(total) + " verdicts agree (" + std::to_string(positive) +
                " positive); DS2 with J = [0,inf): min_eig " + fmt("%.3e", r.min_eig)};
}

Outcome c10_final_corollary() {
    std::mt19937_64 rng(10);
    const Frozen& f1 = ds(1);
    const bool ds1_case = f1.maximal.state_case == StateCase::ground_state;
    const double alpha = f1.verdict.gap_alpha.value_or(0.0);
    const auto g = ground_state_check(f1.m, f1.rep, alpha, f1.sc.tol);
    const Frozen& f2 = ds(2);
    const bool ds2_case = f2.maximal.state_case == StateCase::maximal_nonground;
    const auto pos = positivity_check(f2.dyn, *f2.maximal.J_max, rng);
    const StateData st = build_state(f2.m, f2.rep, *f2.maximal.J_max, rng);
    const bool ok = ds1_case && g.ground && ds2_case && pos.operator_positive && pos.test_positive &&
                    st.degeneracy_dim > 0;
    return {ok, std::string("DS1 ") + to_string(f1.maximal.state_case) + ", min eig b sgn(b) " +
                    fmt("%.4f", g.min_eig) + " vs alpha " + fmt("%.4f", alpha) + "; DS2 " +
                    to_string(f2.maximal.state_case) + " on " + f2.maximal.J_max->str() + ", positivity " +
                    (pos.operator_positive ? "PASS" : "FAIL") + ", degeneracy_dim " +
                    std::to_string(st.degeneracy_dim)};
}

Outcome c11_complex_neutrality() {
    const Frozen& f = ds(2);
    const CMatrix pc = complex_part_projection(*f.rep.decomposition);
    const CMatrix gp = f.m.K.G * pc;
    const double herm = op_norm(0.5 * (gp + gp.adjoint()));
    // what does hold: each generalized eigenspace of a non-real eigenvalue is neutral
    double eigenspace = 0.0;
    for (const auto& b : f.rep.decomposition->blocks())
        if (!b.real) eigenspace = std::max(eigenspace, op_norm(b.X.adjoint() * f.m.K.G * b.X));
    return {herm <= 1e-10, "||Herm(G 1_complex(b))|| = " + fmt("%.3e", herm) +
                               "; per-eigenvalue ||X^* G X|| = " + fmt("%.2e", eigenspace)};
}

Outcome c12_cauchy_causality() {
    const Frozen& f = ds(1);
    const Eigen::Index n = f.m.half();
    CVector theta(2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = f.m.grid.x(static_cast<int>(j));
        theta(j) = std::exp(-x * x / 2.0);
        theta(n + j) = cplx(0.0, 0.5 * x * std::exp(-x * x / 2.0));
    }
    const Trajectory tr = cauchy_solve(f.dyn, theta, {8.0});

    const DiracModel dm = free_dirac(256, 64.0);
    const Dynamics dd = make_dynamics(dm);
    const double r0 = 2.0, h = dm.grid.spacing;
    CVector psi = CVector::Zero(2 * dm.grid.n);
    const auto b = fn::bump(0.0, r0);
    for (int j = 0; j < dm.grid.n; ++j) psi(j) = b(dm.grid.x(j));
    psi /= psi.norm();
    double worst = 0.0;
    for (double t : {5.0, 10.0, 15.0, 20.0}) {
        const CVector u = dd.modes->evolve(t) * psi;
        double outside = 0.0;
        for (int j = 0; j < dm.grid.n; ++j)
            if (std::abs(dm.grid.x(j)) > r0 + t + 4.0 * h)
                outside += std::norm(u(j)) + std::norm(u(dm.grid.n + j));
        worst = std::max(worst, outside / u.squaredNorm());
    }
    return {tr.divergence <= 1e-6 && worst < 1e-3,
            "RK4 vs kernel at t=8: " + fmt("%.2e", tr.divergence) + "; mass outside the cone: " + fmt("%.2e", worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"free Dirac gap", c1_free_dirac_gap},
        {"Krein self-adjointness and similarity", c2_krein_similarity},
        {"functional calculus vs oracle", c3_calculus_oracle},
        {"projection algebra", c4_projection_algebra},
        {"group vs calculus identity", c5_group_calculus},
        {"kernel decomposition", c6_kernel_decomposition},
        {"bi-solution residual order", c7_bisolution_order},
        {"asymptotic spectral support", c8_support},
        {"positivity equivalence", c9_positivity},
        {"ground and maximal states", c10_final_corollary},
        {"neutrality of the complex part", c11_complex_neutrality},
        {"Cauchy consistency and causality", c12_cauchy_causality},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
                  << " (" << fmt("%.1f", secs) << " s)" << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
