#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace kreinlat {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

// Errors. Each one names the precondition that failed.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
#define KREINLAT_ERROR(Name)                 \
    struct Name : Error {                    \
        using Error::Error;                  \
    }
KREINLAT_ERROR(InvalidArgument);
KREINLAT_ERROR(DimensionMismatch);
KREINLAT_ERROR(NotPositive);
KREINLAT_ERROR(ClusterNotIsolated);
KREINLAT_ERROR(AmbiguousRealness);
KREINLAT_ERROR(ConstructionFailed);
KREINLAT_ERROR(ResolventBlowup);
KREINLAT_ERROR(NotAdmissible);
KREINLAT_ERROR(InconsistentClassification);
KREINLAT_ERROR(Overflow);
KREINLAT_ERROR(StepTooLarge);
KREINLAT_ERROR(WindowTooShort);
KREINLAT_ERROR(NotAState);
KREINLAT_ERROR(HypothesisViolated);
KREINLAT_ERROR(ConfigError);
#undef KREINLAT_ERROR

enum class Space { plain, krein_doubled, dirac_spinor };

inline const char* to_string(Space s) {
    switch (s) {
    case Space::plain: return "plain";
    case Space::krein_doubled: return "krein_doubled";
    case Space::dirac_spinor: return "dirac_spinor";
    }
    return "?";
}

struct DenseOperator {
    CMatrix m;
    Space space = Space::plain;

    Eigen::Index dim() const { return m.rows(); }
};

// Numerical knobs. Matrix tolerances are relative to the operand norm.
struct Tolerances {
    double tol_mat = 1e-10;
    double tol_eig = 1e-8;
    double tol_inv = 1e-12;
    double gap_min_rel = 1e-6;       // times spectral radius
    double im_threshold_rel = 1e-7;  // times spectral radius
    double inertia_rel = 1e-8;
    double eps_resolvent = 1e-12;
    double leak_tol = 1e-4;
    double pos_tol = 1e-10;

    // KREINLAT_TOL_MAT, KREINLAT_LEAK_TOL, ... override the fields.
    static Tolerances from_env();
    static Tolerances from_env(Tolerances t) {
        auto get = [](const char* name, double& field) {
            if (const char* v = std::getenv(name)) {
                char* end = nullptr;
                double x = std::strtod(v, &end);
                if (end == v || !std::isfinite(x) || x <= 0)
                    throw ConfigError(std::string("bad value for ") + name);
                field = x;
            }
        };
        get("KREINLAT_TOL_MAT", t.tol_mat);
        get("KREINLAT_TOL_EIG", t.tol_eig);
        get("KREINLAT_TOL_INV", t.tol_inv);
        get("KREINLAT_GAP_MIN", t.gap_min_rel);
        get("KREINLAT_IM_THRESHOLD", t.im_threshold_rel);
        get("KREINLAT_INERTIA", t.inertia_rel);
        get("KREINLAT_EPS_RESOLVENT", t.eps_resolvent);
        get("KREINLAT_LEAK_TOL", t.leak_tol);
        get("KREINLAT_POS_TOL", t.pos_tol);
        return t;
    }
};

inline Tolerances Tolerances::from_env() { return from_env(Tolerances{}); }

inline double op_norm(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

inline double hermitian_min_eig(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    CMatrix h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline bool is_hermitian(const CMatrix& a, double rel_tol) {
    double scale = std::max(1.0, a.norm());
    return (a - a.adjoint()).norm() <= rel_tol * scale;
}

// Block matrix [[a, b], [c, d]] with square blocks of equal size.
inline CMatrix blocks(const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d) {
    const auto n = a.rows();
    CMatrix m(2 * n, 2 * n);
    m.topLeftCorner(n, n) = a;
    m.topRightCorner(n, n) = b;
    m.bottomLeftCorner(n, n) = c;
    m.bottomRightCorner(n, n) = d;
    return m;
}

inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

}  // namespace kreinlat
