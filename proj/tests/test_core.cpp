#include <kreinlat/kreinlat.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

using namespace kreinlat;

namespace {

CMatrix random_matrix(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    CMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(N(rng), N(rng));
    return a;
}

CMatrix diag(std::initializer_list<cplx> d) {
    CMatrix m = CMatrix::Zero(d.size(), d.size());
    Eigen::Index i = 0;
    for (cplx x : d) m(i, i) = x, ++i;
    return m;
}

struct EnvGuard {
    const char* name;
    EnvGuard(const char* n, const char* v) : name(n) { setenv(n, v, 1); }
    ~EnvGuard() { unsetenv(name); }
};

KGModel small_kg(double V0, int n = 32) {
    const Grid g = build_grid(n, 12.0);
    PotentialSpec p = PotentialSpec::constant(g, 0.0, 0.0, 1.0);
    p.V = gaussian_well(g, V0, 1.3);
    return build_kg(g, p);
}

}  // namespace

// ---------------------------------------------------------------- core

TEST(Tolerances, EnvironmentOverridesField) {
    EnvGuard e("KREINLAT_LEAK_TOL", "3e-3");
    const auto t = Tolerances::from_env();
    EXPECT_DOUBLE_EQ(t.leak_tol, 3e-3);
    EXPECT_DOUBLE_EQ(t.tol_mat, Tolerances{}.tol_mat);
}

TEST(Tolerances, BadEnvironmentValueIsConfigError) {
    EnvGuard e("KREINLAT_TOL_EIG", "abc");
    EXPECT_THROW(Tolerances::from_env(), ConfigError);
}

TEST(Jet, DerivativesOfComposition) {
    // f(x) = exp(sin x) at x = 0.4
    const double x = 0.4;
    const Jet f = exp(sin(Jet::variable(3, x)));
    const double s = std::sin(x), c = std::cos(x), e = std::exp(s);
    EXPECT_NEAR(f.derivative(0), e, 1e-14);
    EXPECT_NEAR(f.derivative(1), c * e, 1e-14);
    EXPECT_NEAR(f.derivative(2), (c * c - s) * e, 1e-13);
    EXPECT_NEAR(f.derivative(3), (c * c * c - 3 * s * c - c) * e, 1e-13);
}

TEST(Jet, QuotientAndSqrt) {
    const Jet x = Jet::variable(2, 2.0);
    const Jet q = 1.0 / x;
    EXPECT_NEAR(q.derivative(1), -0.25, 1e-15);
    EXPECT_NEAR(q.derivative(2), 0.25, 1e-15);
    const Jet r = sqrt(x);
    EXPECT_NEAR(r.derivative(1), 0.5 / std::sqrt(2.0), 1e-15);
}

// ---------------------------------------------------------------- lattice

TEST(Lattice, GridRejectsBadInput) {
    EXPECT_THROW(build_grid(4, 1.0), InvalidArgument);
    EXPECT_THROW(build_grid(16, 0.0), InvalidArgument);
    EXPECT_THROW(build_grid(16, -2.0), InvalidArgument);
    const Grid g = build_grid(16, 8.0);
    EXPECT_DOUBLE_EQ(g.spacing, 0.5);
    EXPECT_DOUBLE_EQ(g.x(0), -4.0);
}

TEST(Lattice, PotentialLengthMismatch) {
    const Grid g = build_grid(16, 8.0);
    PotentialSpec p = PotentialSpec::constant(g, 0.0, 0.0, 1.0);
    p.V = RVector::Zero(15);
    EXPECT_ANY_THROW(p.validate(g));
}

TEST(Lattice, CovariantDifferenceIsAntiHermitian) {
    const Grid g = build_grid(24, 10.0);
    PotentialSpec p = PotentialSpec::constant(g, 0.0, 0.0, 1.0);
    for (int j = 0; j < g.n; ++j) p.A(j) = 0.3 * std::sin(g.x(j));
    const CMatrix d = covariant_central_difference(g, p);
    EXPECT_LT((d + d.adjoint()).norm(), 1e-13);
}

TEST(Lattice, SchrodingerOperatorPositive) {
    const Grid g = build_grid(24, 10.0);
    const auto pair = discretize_schrodinger(g, PotentialSpec::constant(g, 0.0, 0.2, 1.0));
    EXPECT_GT(hermitian_min_eig(pair.eps2), 0.99);
    const CMatrix id = CMatrix::Identity(g.n, g.n);
    EXPECT_LT((pair.eps * pair.eps - pair.eps2).norm(), 1e-10);
    EXPECT_LT((pair.eps * pair.eps_inv - id).norm(), 1e-10);
}

TEST(Lattice, MasslessPeriodicIsNotPositive) {
    const Grid g = build_grid(16, 8.0);
    EXPECT_THROW(discretize_schrodinger(g, PotentialSpec::constant(g, 0.0, 0.0, 0.0)), NotPositive);
}

// ---------------------------------------------------------------- spectral

TEST(Spectral, SchurSwapPreservesFactorization) {
    const CMatrix a = random_matrix(6, 7);
    Eigen::ComplexSchur<CMatrix> cs(a);
    CMatrix t = cs.matrixT(), q = cs.matrixU();
    const cplx t00 = t(0, 0), t11 = t(1, 1);
    detail::schur_swap(t, q, 0);
    EXPECT_LT((q * t * q.adjoint() - a).norm(), 1e-12 * a.norm());
    EXPECT_NEAR(std::abs(t(0, 0) - t11), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(t(1, 1) - t00), 0.0, 1e-12);
    EXPECT_LT(std::abs(t(1, 0)), 1e-12);
}

TEST(Spectral, RieszProjectionsFormResolutionOfIdentity) {
    const CMatrix a = random_matrix(8, 11);
    const auto d = SpectralDecomposition::compute(a);
    const CMatrix id = CMatrix::Identity(8, 8);
    CMatrix sum = CMatrix::Zero(8, 8);
    for (const auto& b : d.blocks()) {
        const CMatrix p = b.projection();
        EXPECT_LT((p * p - p).norm(), 1e-10);
        EXPECT_LT((p * a - a * p).norm(), 1e-10 * a.norm());
        sum += p;
    }
    EXPECT_LT((sum - id).norm(), 1e-10);
    const CMatrix p0 = d.riesz_projection({0}), p1 = d.riesz_projection({1});
    EXPECT_LT((p0 * p1).norm(), 1e-10);
}

TEST(Spectral, JordanBlockIsDefective) {
    CMatrix a = diag({1.0, 1.0, 3.0});
    a(0, 1) = 1.0;
    const auto d = SpectralDecomposition::compute(a);
    bool found = false;
    for (const auto& b : d.blocks())
        if (b.size() == 2) {
            EXPECT_TRUE(d.defective(b));
            found = true;
        }
    EXPECT_TRUE(found);
    const auto semisimple = SpectralDecomposition::compute(diag({1.0, 1.0, 3.0}));
    for (const auto& b : semisimple.blocks()) EXPECT_FALSE(semisimple.defective(b));
}

TEST(Spectral, ClusterNotIsolated) {
    const auto d = SpectralDecomposition::compute(diag({1.0, 1.0 + 1e-9, 3.0}));
    // the two close eigenvalues share a block, so asking for one of them alone fails
    int idx = -1;
    for (std::size_t i = 0; i < d.eigenvalues().size(); ++i)
        if (std::abs(d.eigenvalues()[i] - cplx(1.0)) < 1e-6) idx = static_cast<int>(i);
    ASSERT_GE(idx, 0);
    EXPECT_THROW(d.riesz_projection({idx}), ClusterNotIsolated);
}

TEST(Spectral, AmbiguousRealness) {
    // imaginary part between 0.1 and 1 times the realness threshold
    const double thr = Tolerances{}.im_threshold_rel * 3.0;
    EXPECT_THROW(SpectralDecomposition::compute(diag({cplx(1.0, 0.5 * thr), 2.0, 3.0})), AmbiguousRealness);
}

TEST(Spectral, NonSquareInput) {
    EXPECT_THROW(SpectralDecomposition::compute(CMatrix::Zero(3, 4)), DimensionMismatch);
}

// ---------------------------------------------------------------- krein

TEST(Krein, AdjointIsInvolution) {
    const auto k = KreinStructure::block_swap(3);
    const CMatrix a = random_matrix(6, 3);
    EXPECT_LT((krein_adjoint(krein_adjoint(a, k), k) - a).norm(), 1e-12);
    // [A+ u, v] = [u, A v]
    const CVector u = random_matrix(6, 4).col(0), v = random_matrix(6, 5).col(1);
    EXPECT_NEAR(std::abs(k.form(krein_adjoint(a, k) * u, v) - k.form(u, a * v)), 0.0, 1e-11);
}

TEST(Krein, GramMustBeHermitianAndInvertible) {
    EXPECT_THROW(KreinStructure(diag({1.0, 0.0})), InvalidArgument);
    CMatrix g = diag({1.0, 1.0});
    g(0, 1) = 1.0;
    EXPECT_THROW(KreinStructure{g}, InvalidArgument);
    EXPECT_THROW(krein_adjoint(CMatrix::Zero(3, 3), KreinStructure::hilbert(2)), DimensionMismatch);
}

TEST(IntervalUnion, NormalizesAndComplements) {
    const IntervalUnion u({{3.0, 4.0}, {0.0, 1.0}, {0.5, 2.0}});
    ASSERT_EQ(u.intervals().size(), 2u);
    EXPECT_EQ(u.intervals()[0], std::make_pair(0.0, 2.0));
    const auto c = u.complement();
    EXPECT_TRUE(c.contains(-5.0));
    EXPECT_TRUE(c.contains(2.5));
    EXPECT_FALSE(c.contains(3.5));
    EXPECT_EQ(c.complement(), u);
    EXPECT_TRUE(u.intersect(IntervalUnion::empty()).is_empty());
    EXPECT_EQ(IntervalUnion::at_least(0.0).intersect(IntervalUnion::below(1.0)), IntervalUnion({{0.0, 1.0}}));
    EXPECT_THROW(IntervalUnion({{std::nan(""), 1.0}}), InvalidArgument);
}

TEST(IntervalUnion, PunctureAndBoundaryDistance) {
    const auto u = IntervalUnion::at_least(0.0).puncture({{1.0, 0.25}});
    EXPECT_FALSE(u.contains(1.0));
    EXPECT_TRUE(u.contains(0.5));
    EXPECT_TRUE(u.contains(2.0));
    EXPECT_DOUBLE_EQ(u.distance_to_boundary(0.6), 0.15);
    EXPECT_EQ(u.lower_edge(), 0.0);
    EXPECT_EQ(u.upper_edge(), IntervalUnion::inf);
}

TEST(Krein, ComplexPairSpansNeutralSubspaces) {
    // diag(i, -i) is selfadjoint for the block swap; its eigenvectors are neutral
    const auto k = KreinStructure::block_swap(1);
    const CMatrix a = diag({cplx(0.0, 1.0), cplx(0.0, -1.0)});
    ASSERT_LT((krein_adjoint(a, k) - a).norm(), 1e-14);
    const auto rep = classify_spectrum(a, k);
    ASSERT_EQ(rep.complex_pairs.size(), 1u);
    for (const auto& e : rep.eigenvalues) EXPECT_EQ(e.sign_type, SignType::neutral);
}

TEST(Krein, DefiniteSpectrumHasNoCriticalPoints) {
    const auto m = small_kg(0.5);
    const auto rep = classify_spectrum(m.b.m, m.K, SignReference::frequency);
    EXPECT_TRUE(rep.critical_points().empty());
    EXPECT_FALSE(rep.has_complex());
    for (const auto& e : rep.eigenvalues)
        EXPECT_EQ(e.sign_type, e.value.real() > 0 ? SignType::positive : SignType::negative);
}

TEST(Krein, DefinitizingPolynomialIsKreinPositive) {
    const auto m = small_kg(3.0);
    const auto rep = classify_spectrum(m.b.m, m.K, SignReference::frequency);
    ASSERT_TRUE(rep.has_complex());
    const auto p = definitizing_polynomial(rep);
    const CMatrix pa = polynomial_of(*rep.decomposition, p);
    EXPECT_TRUE(is_krein_positive(pa, rep.krein, 1e-8 * op_norm(m.K.G * pa)));
    // factored and coefficient forms agree
    const auto c = p.coefficients();
    double x = 0.7, acc = 0.0, pw = 1.0;
    for (double ci : c) acc += ci * pw, pw *= x;
    EXPECT_NEAR(acc, p(x), 1e-10 * std::max(1.0, std::abs(p(x))));
}

// ---------------------------------------------------------------- functional calculus

TEST(FunctionalCalculus, DaviesMatchesScalarOnDiagonal) {
    const CMatrix a = diag({-1.5, -0.2, 0.4, 1.1, 2.0});
    AlmostAnalyticExtension ext;
    ext.f = fn::gaussian(0.3, 0.7);
    QuadratureSpec q;
    q.re_points = 256;
    q.im_points = 256;
    const auto r = davies_apply(a, ext, q);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        EXPECT_NEAR(std::abs(r.value(i, i) - ext.f(a(i, i).real())), 0.0, 1e-4);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j) {
                EXPECT_LT(std::abs(r.value(i, j)), 1e-8);
            }
    }
}

TEST(FunctionalCalculus, SpectralFunctionOnJordanBlock) {
    // f(J) for J = [[c, 1], [0, c]] is [[f(c), f'(c)], [0, f(c)]]
    CMatrix a = diag({0.5, 0.5, 2.0});
    a(0, 1) = 1.0;
    const auto d = SpectralDecomposition::compute(a);
    const auto f = fn::gaussian(0.0, 1.0);
    const CMatrix fa = spectral_function(d, f);
    const Jet t = f.taylor(0.5, 1);
    EXPECT_NEAR(std::abs(fa(0, 0) - t[0]), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(fa(0, 1) - t[1]), 0.0, 1e-10);
}

TEST(FunctionalCalculus, QuadratureValidation) {
    QuadratureSpec q;
    q.re_points = 16;
    EXPECT_THROW(q.validate(), InvalidArgument);
    q.re_points = 64;
    q.im_points = 63;
    EXPECT_THROW(q.validate(), InvalidArgument);
}

TEST(FunctionalCalculus, EigenvalueOnBoundaryNotAdmissible) {
    const auto d = SpectralDecomposition::compute(diag({-1.0, 1.0, 2.0}));
    EXPECT_THROW(spectral_projection(d, IntervalUnion::at_least(1.0)), NotAdmissible);
    const CMatrix p = spectral_projection(d, IntervalUnion::at_least(0.0));
    EXPECT_NEAR(p.trace().real(), 2.0, 1e-12);
}

TEST(FunctionalCalculus, BumpHasCompactSupport) {
    const auto b = fn::bump(1.0, 0.5);
    EXPECT_EQ(b(0.4), 0.0);
    EXPECT_EQ(b(1.6), 0.0);
    EXPECT_GT(b(1.0), 0.0);
    ASSERT_TRUE(b.support.has_value());
    EXPECT_DOUBLE_EQ(b.support->first, 0.5);
}
